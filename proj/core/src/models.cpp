#include "ctc/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ctc/errors.hpp"
#include "ctc/ops.hpp"
#include "json.hpp"

namespace ctc {

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::concat: return "concat";
        case ModelKind::textcnn: return "textcnn";
        case ModelKind::bilstm: return "bilstm";
        case ModelKind::vgg: return "vgg";
    }
    return "?";
}

const char* to_string(SubnetKind kind) {
    switch (kind) {
        case SubnetKind::textcnn: return "textcnn";
        case SubnetKind::lstm: return "lstm";
        case SubnetKind::bilstm: return "bilstm";
    }
    return "?";
}

ModelKind model_kind_from(const std::string& name) {
    if (name == "concat") return ModelKind::concat;
    if (name == "textcnn") return ModelKind::textcnn;
    if (name == "bilstm") return ModelKind::bilstm;
    if (name == "vgg") return ModelKind::vgg;
    throw data_error("unknown model kind: " + name);
}

SubnetKind subnet_kind_from(const std::string& name) {
    if (name == "textcnn") return SubnetKind::textcnn;
    if (name == "lstm") return SubnetKind::lstm;
    if (name == "bilstm") return SubnetKind::bilstm;
    throw data_error("unknown subnet kind: " + name);
}

const char* to_string(VoteMode mode) { return mode == VoteMode::soft ? "soft" : "hard"; }

VoteMode vote_mode_from(const std::string& name) {
    if (name == "soft") return VoteMode::soft;
    if (name == "hard") return VoteMode::hard;
    throw data_error("unknown vote mode: " + name);
}

void ModelConfig::validate() const {
    if (vocab_size < 2) throw std::invalid_argument("model config: vocab_size must be >= 2");
    if (embed_dim < 1) throw std::invalid_argument("model config: embed_dim must be >= 1");
    if (classes < 2) throw std::invalid_argument("model config: classes must be >= 2");
    for (Extent w : head_hidden) {
        if (w < 1) throw std::invalid_argument("model config: head widths must be >= 1");
    }
    for (const auto& subnet : subnets) {
        if (subnet.kind == SubnetKind::textcnn) {
            if (subnet.blocks < 1 || subnet.kernel_width < 1 || subnet.filters < 1) {
                throw std::invalid_argument("model config: bad textcnn subnet sizes");
            }
        } else if (subnet.hidden < 1) {
            throw std::invalid_argument("model config: recurrent hidden size must be >= 1");
        }
    }
    switch (kind) {
        case ModelKind::concat:
            if (subnets.empty()) {
                throw std::invalid_argument("model config: concat model needs subnets");
            }
            break;
        case ModelKind::textcnn:
            if (subnets.size() != 1 || subnets[0].kind != SubnetKind::textcnn) {
                throw std::invalid_argument(
                    "model config: textcnn baseline takes exactly one textcnn subnet");
            }
            break;
        case ModelKind::bilstm:
            if (subnets.size() != 1 || subnets[0].kind != SubnetKind::bilstm) {
                throw std::invalid_argument(
                    "model config: bilstm baseline takes exactly one bilstm subnet");
            }
            break;
        case ModelKind::vgg:
            if (!subnets.empty()) {
                throw std::invalid_argument("model config: vgg uses vgg_channels, not subnets");
            }
            if (vgg_channels.empty() || vgg_channels.size() % 2 != 0) {
                throw std::invalid_argument(
                    "model config: vgg_channels must be nonempty with an even block count");
            }
            for (Extent c : vgg_channels) {
                if (c < 1) throw std::invalid_argument("model config: vgg channels must be >= 1");
            }
            break;
    }
    if (kind != ModelKind::vgg && !vgg_channels.empty()) {
        throw std::invalid_argument("model config: vgg_channels only apply to the vgg kind");
    }
    if (strict_paper) {
        int cnn = 0, uni = 0, bi = 0;
        for (const auto& subnet : subnets) {
            if (subnet.kind == SubnetKind::textcnn) ++cnn;
            if (subnet.kind == SubnetKind::lstm) ++uni;
            if (subnet.kind == SubnetKind::bilstm) ++bi;
        }
        if (kind != ModelKind::concat || classes != 25 || cnn != 3 || uni != 1 || bi != 1) {
            throw std::invalid_argument(
                "model config: strict mode requires the concat model with 3 textcnn + 1 lstm + "
                "1 bilstm subnets and 25 classes");
        }
    }
}

namespace {

SubnetConfig textcnn_subnet(Extent width, Extent filters, Extent blocks) {
    SubnetConfig subnet;
    subnet.kind = SubnetKind::textcnn;
    subnet.kernel_width = width;
    subnet.filters = filters;
    subnet.blocks = blocks;
    return subnet;
}

SubnetConfig recurrent_subnet(SubnetKind kind, Extent hidden) {
    SubnetConfig subnet;
    subnet.kind = kind;
    subnet.hidden = hidden;
    return subnet;
}

}  // namespace

ModelConfig concat_config(Extent vocab_size, Extent classes) {
    ModelConfig config;
    config.kind = ModelKind::concat;
    config.vocab_size = vocab_size;
    config.classes = classes;
    config.embed_dim = 128;
    config.head_hidden = {256};
    for (Extent width : {2, 3, 4}) config.subnets.push_back(textcnn_subnet(width, 128, 2));
    config.subnets.push_back(recurrent_subnet(SubnetKind::lstm, 250));
    config.subnets.push_back(recurrent_subnet(SubnetKind::bilstm, 250));
    return config;
}

ModelConfig textcnn_config(Extent vocab_size, Extent classes) {
    ModelConfig config;
    config.kind = ModelKind::textcnn;
    config.vocab_size = vocab_size;
    config.classes = classes;
    config.embed_dim = 128;
    config.subnets.push_back(textcnn_subnet(3, 128, 2));
    return config;
}

ModelConfig bilstm_config(Extent vocab_size, Extent classes) {
    ModelConfig config;
    config.kind = ModelKind::bilstm;
    config.vocab_size = vocab_size;
    config.classes = classes;
    config.embed_dim = 128;
    config.subnets.push_back(recurrent_subnet(SubnetKind::bilstm, 250));
    return config;
}

ModelConfig vgg_config(Extent vocab_size, Extent classes) {
    ModelConfig config;
    config.kind = ModelKind::vgg;
    config.vocab_size = vocab_size;
    config.classes = classes;
    config.embed_dim = 128;
    config.head_hidden = {256};
    config.vgg_channels = {64, 64, 128, 128, 256, 256, 512, 512};
    return config;
}

ModelConfig default_config(ModelKind kind, Extent vocab_size, Extent classes) {
    switch (kind) {
        case ModelKind::concat: return concat_config(vocab_size, classes);
        case ModelKind::textcnn: return textcnn_config(vocab_size, classes);
        case ModelKind::bilstm: return bilstm_config(vocab_size, classes);
        case ModelKind::vgg: return vgg_config(vocab_size, classes);
    }
    throw std::invalid_argument("unknown model kind");
}

ModelConfig desk_config(ModelKind kind, Extent vocab_size, Extent classes) {
    ModelConfig config = default_config(kind, vocab_size, classes);
    config.embed_dim = 24;
    for (auto& subnet : config.subnets) {
        subnet.filters = 24;
        subnet.hidden = 32;
    }
    if (!config.head_hidden.empty()) config.head_hidden = {64};
    if (kind == ModelKind::vgg) config.vgg_channels = {8, 8, 16, 16, 32, 32, 64, 64};
    return config;
}

std::string config_to_json(const ModelConfig& config) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["kind"] = to_string(config.kind);
    j["vocab_size"] = config.vocab_size;
    j["embed_dim"] = config.embed_dim;
    j["classes"] = config.classes;
    j["head_hidden"] = config.head_hidden;
    j["strict_paper"] = config.strict_paper;
    j["seed"] = config.seed;
    j["subnets"] = nlohmann::json::array();
    for (const auto& subnet : config.subnets) {
        nlohmann::json js;
        js["kind"] = to_string(subnet.kind);
        if (subnet.kind == SubnetKind::textcnn) {
            js["blocks"] = subnet.blocks;
            js["kernel_width"] = subnet.kernel_width;
            js["filters"] = subnet.filters;
        } else {
            js["hidden"] = subnet.hidden;
        }
        j["subnets"].push_back(js);
    }
    j["vgg_channels"] = config.vgg_channels;
    return j.dump(2);
}

ModelConfig config_from_json(const std::string& text) {
    ModelConfig config;
    try {
        const nlohmann::json j = nlohmann::json::parse(text);
        if (j.value("schema_version", 0) != 1) {
            throw data_error("model config: unsupported schema_version");
        }
        config.kind = model_kind_from(j.at("kind").get<std::string>());
        config.vocab_size = j.at("vocab_size").get<Extent>();
        config.embed_dim = j.value("embed_dim", config.embed_dim);
        config.classes = j.value("classes", config.classes);
        config.head_hidden = j.value("head_hidden", config.head_hidden);
        config.strict_paper = j.value("strict_paper", false);
        config.seed = j.value("seed", std::uint64_t{1});
        if (j.contains("subnets")) {
            for (const auto& js : j.at("subnets")) {
                SubnetConfig subnet;
                subnet.kind = subnet_kind_from(js.at("kind").get<std::string>());
                if (subnet.kind == SubnetKind::textcnn) {
                    subnet.blocks = js.value("blocks", subnet.blocks);
                    subnet.kernel_width = js.value("kernel_width", subnet.kernel_width);
                    subnet.filters = js.value("filters", subnet.filters);
                } else {
                    subnet.hidden = js.value("hidden", subnet.hidden);
                }
                config.subnets.push_back(subnet);
            }
        }
        config.vgg_channels = j.value("vgg_channels", config.vgg_channels);
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("model config: ") + e.what());
    }
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw data_error(e.what());
    }
    return config;
}

Model::Model(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    SeededRng rng(config_.seed);
    embed_ = Embedding(config_.vocab_size, config_.embed_dim, rng);
    for (const auto& subnet : config_.subnets) {
        Branch branch;
        branch.config = subnet;
        if (subnet.kind == SubnetKind::textcnn) {
            Extent in = config_.embed_dim;
            for (Extent b = 0; b < subnet.blocks; ++b) {
                branch.blocks.emplace_back(in, subnet.filters, subnet.kernel_width, rng, b > 0);
                in = subnet.filters;
            }
        } else if (subnet.kind == SubnetKind::lstm) {
            branch.fwd.emplace(config_.embed_dim, subnet.hidden, rng);
        } else {
            branch.fwd.emplace(config_.embed_dim, subnet.hidden, rng);
            branch.bwd.emplace(config_.embed_dim, subnet.hidden, rng);
        }
        branches_.push_back(std::move(branch));
    }
    if (config_.kind == ModelKind::vgg) {
        Extent in = config_.embed_dim;
        for (std::size_t b = 0; b < config_.vgg_channels.size(); ++b) {
            vgg_blocks_.emplace_back(in, config_.vgg_channels[b], 3, rng, b > 0);
            in = config_.vgg_channels[b];
        }
    }
    Extent in = feature_width();
    for (Extent width : config_.head_hidden) {
        head_.emplace_back(in, width, Act::relu, rng);
        in = width;
    }
    head_.emplace_back(in, config_.classes, std::nullopt, rng);
    compute_min_seq_len();
}

Extent Model::feature_width() const {
    if (config_.kind == ModelKind::vgg) return config_.vgg_channels.back();
    Extent total = 0;
    for (const auto& subnet : config_.subnets) {
        if (subnet.kind == SubnetKind::textcnn) total += subnet.filters;
        else if (subnet.kind == SubnetKind::lstm) total += subnet.hidden;
        else total += 2 * subnet.hidden;
    }
    return total;
}

Extent model_min_seq_len(const ModelConfig& config) {
    Extent need = 1;
    for (const auto& subnet : config.subnets) {
        if (subnet.kind == SubnetKind::textcnn) need = std::max(need, subnet.kernel_width);
    }
    if (config.kind == ModelKind::vgg) {
        // first width-3 correlation is valid, later blocks keep the extent,
        // and the halving pool after every 2nd block needs window 2
        auto fits = [&config](Extent t0) {
            Extent t = t0 - 2;
            if (t < 1) return false;
            for (std::size_t b = 0; b < config.vgg_channels.size(); ++b) {
                if (b % 2 == 1) {
                    if (t < 2) return false;
                    t = (t - 2) / 2 + 1;
                }
            }
            return t >= 1;
        };
        Extent t0 = 3;
        while (!fits(t0)) ++t0;
        need = std::max(need, t0);
    }
    return need;
}

void Model::compute_min_seq_len() { min_seq_len_ = model_min_seq_len(config_); }

Tensor Model::branch_forward(const Branch& branch, const Tensor& chan_x,
                             const Tensor& seq_x) const {
    switch (branch.config.kind) {
        case SubnetKind::textcnn: {
            Tensor y = chan_x;
            for (const auto& block : branch.blocks) y = block.forward(y);
            return global_max_pool(y);
        }
        case SubnetKind::lstm:
            return branch.fwd->forward(seq_x, false).final_hidden;
        case SubnetKind::bilstm: {
            Tensor forward_state = branch.fwd->forward(seq_x, false).final_hidden;
            Tensor backward_state = branch.bwd->forward(seq_x, true).final_hidden;
            return concat<float>({forward_state, backward_state});
        }
    }
    throw std::logic_error("unreachable subnet kind");
}

Tensor Model::vgg_forward(const Tensor& chan_x) const {
    Tensor y = chan_x;
    for (std::size_t b = 0; b < vgg_blocks_.size(); ++b) {
        y = vgg_blocks_[b].forward(y);
        if (b % 2 == 1) y = max_pool1d(y, 2, 2);
    }
    return global_max_pool(y);
}

Tensor Model::logits(const std::vector<std::vector<int>>& ids) const {
    if (ids.empty() || ids[0].empty()) throw data_error("model: empty batch");
    const Extent t_len = static_cast<Extent>(ids[0].size());
    if (t_len < min_seq_len_) {
        throw data_error("model: sequence length " + std::to_string(t_len) +
                         " below the architecture minimum " + std::to_string(min_seq_len_));
    }
    bool need_chan = config_.kind == ModelKind::vgg;
    bool need_seq = false;
    for (const auto& subnet : config_.subnets) {
        if (subnet.kind == SubnetKind::textcnn) need_chan = true;
        else need_seq = true;
    }
    Tensor chan_x, seq_x;
    if (need_chan) chan_x = embed_.lookup_chan(ids);
    if (need_seq) seq_x = embed_.lookup_seq(ids);

    Tensor feature;
    if (config_.kind == ModelKind::vgg) {
        feature = vgg_forward(chan_x);
    } else {
        std::vector<Tensor> features;
        features.reserve(branches_.size());
        for (const auto& branch : branches_) {
            features.push_back(branch_forward(branch, chan_x, seq_x));
        }
        feature = features.size() == 1 ? features[0] : concat(features);
    }
    Tensor y = feature;
    for (const auto& layer : head_) y = layer.forward(y);
    return y;
}

Tensor Model::forward(const std::vector<std::vector<int>>& ids) const {
    return softmax(logits(ids));
}

Prediction Model::predict(const std::vector<std::vector<int>>& ids) const {
    Prediction out;
    out.probs = forward(ids);
    out.labels = argmax_last(out.probs);
    return out;
}

std::vector<Param> Model::params() const {
    std::vector<Param> out;
    embed_.collect_params("embedding", out);
    for (std::size_t i = 0; i < branches_.size(); ++i) {
        const std::string prefix = "subnet" + std::to_string(i);
        const Branch& branch = branches_[i];
        for (std::size_t b = 0; b < branch.blocks.size(); ++b) {
            branch.blocks[b].collect_params(prefix + ".block" + std::to_string(b), out);
        }
        if (branch.config.kind == SubnetKind::lstm) branch.fwd->collect_params(prefix, out);
        if (branch.config.kind == SubnetKind::bilstm) {
            branch.fwd->collect_params(prefix + ".fwd", out);
            branch.bwd->collect_params(prefix + ".bwd", out);
        }
    }
    for (std::size_t b = 0; b < vgg_blocks_.size(); ++b) {
        vgg_blocks_[b].collect_params("conv.block" + std::to_string(b), out);
    }
    for (std::size_t i = 0; i < head_.size(); ++i) {
        const bool output_layer = i + 1 == head_.size();
        head_[i].collect_params(output_layer ? "out" : "head" + std::to_string(i), out);
    }
    return out;
}

Extent Model::param_count() const { return ctc::param_count(params()); }

Extent Model::memory_estimate(Extent batch, Extent seq_len) const {
    if (batch < 1 || seq_len < min_seq_len_) {
        throw std::invalid_argument("memory_estimate: batch shape below model minimum");
    }
    Extent elems = param_count();
    bool need_chan = config_.kind == ModelKind::vgg;
    bool need_seq = false;
    for (const auto& subnet : config_.subnets) {
        if (subnet.kind == SubnetKind::textcnn) need_chan = true;
        else need_seq = true;
    }
    if (need_chan) elems += batch * config_.embed_dim * seq_len;
    if (need_seq) elems += batch * seq_len * config_.embed_dim;
    for (const auto& subnet : config_.subnets) {
        if (subnet.kind == SubnetKind::textcnn) {
            const Extent t = seq_len - subnet.kernel_width + 1;
            elems += 2 * batch * subnet.filters * t;                  // valid conv + relu
            elems += (subnet.blocks - 1) * 3 * batch * subnet.filters * t;  // pad, conv, relu
            elems += batch * subnet.filters;
        } else {
            const Extent directions = subnet.kind == SubnetKind::bilstm ? 2 : 1;
            // gate projections, gate activations, cell/hidden sequences
            elems += directions * (16 * batch * seq_len * subnet.hidden + 2 * batch * subnet.hidden);
        }
    }
    if (config_.kind == ModelKind::vgg) {
        Extent t = seq_len - 2;
        for (std::size_t b = 0; b < config_.vgg_channels.size(); ++b) {
            const Extent grids = b == 0 ? 2 : 3;  // later blocks pad first
            elems += grids * batch * config_.vgg_channels[b] * t;
            if (b % 2 == 1) {
                t = (t - 2) / 2 + 1;
                elems += batch * config_.vgg_channels[b] * t;
            }
        }
        elems += batch * config_.vgg_channels.back();
    }
    elems += batch * feature_width();
    for (Extent width : config_.head_hidden) elems += batch * width;
    elems += 2 * batch * config_.classes;  // logits and probabilities
    return 4 * elems;
}

Tensor combine_probs(const std::vector<Tensor>& member_probs, const std::vector<double>& weights,
                     VoteMode mode) {
    if (member_probs.empty()) throw std::invalid_argument("ensemble: no member probabilities");
    if (weights.size() != member_probs.size()) {
        throw std::invalid_argument("ensemble: need one weight per member");
    }
    const Shape shape = member_probs[0].shape();
    if (shape.size() != 2) throw std::invalid_argument("ensemble: member probs must be [B, K]");
    for (const auto& probs : member_probs) {
        if (!same_shape(probs.shape(), shape)) {
            throw std::invalid_argument("ensemble: member class counts differ");
        }
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("ensemble: weights must be nonnegative");
        total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("ensemble: weights sum to zero");

    const Extent rows = shape[0];
    const Extent classes = shape[1];
    std::vector<float> out(static_cast<std::size_t>(rows * classes), 0.0f);
    for (std::size_t m = 0; m < member_probs.size(); ++m) {
        const float w = static_cast<float>(weights[m] / total);
        if (mode == VoteMode::soft) {
            const auto& values = member_probs[m].values();
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * values[i];
        } else {
            const auto votes = argmax_last(member_probs[m]);
            for (Extent r = 0; r < rows; ++r) {
                out[static_cast<std::size_t>(r * classes + votes[static_cast<std::size_t>(r)])] +=
                    w;
            }
        }
    }
    return tensor_create<float>({rows, classes}, std::move(out));
}

std::vector<double> normalized_weights(const std::vector<double>& scores) {
    double total = 0.0;
    for (double s : scores) {
        if (!(s >= 0.0)) throw std::invalid_argument("ensemble: scores must be nonnegative");
        total += s;
    }
    std::vector<double> weights(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        weights[i] = total > 0.0 ? scores[i] / total : 1.0 / static_cast<double>(scores.size());
    }
    return weights;
}

EnsembleSpec make_ensemble(std::vector<std::shared_ptr<Model>> members,
                           const std::vector<double>& scores, VoteMode mode) {
    if (members.empty()) throw std::invalid_argument("ensemble: no members");
    for (const auto& member : members) {
        if (!member) throw std::invalid_argument("ensemble: null member");
        if (member->config().classes != members[0]->config().classes) {
            throw std::invalid_argument("ensemble: member class counts differ");
        }
    }
    if (!scores.empty() && scores.size() != members.size()) {
        throw std::invalid_argument("ensemble: need one score per member");
    }
    EnsembleSpec spec;
    spec.weights = scores.empty()
                       ? normalized_weights(std::vector<double>(members.size(), 1.0))
                       : normalized_weights(scores);
    spec.members = std::move(members);
    spec.mode = mode;
    return spec;
}

Prediction ensemble_predict(const EnsembleSpec& spec, const std::vector<std::vector<int>>& ids) {
    if (spec.members.empty()) throw std::invalid_argument("ensemble: no members");
    if (spec.weights.size() != spec.members.size()) {
        throw std::invalid_argument("ensemble: need one weight per member");
    }
    double total = 0.0;
    for (double w : spec.weights) total += w;
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("ensemble: weights must be normalized to sum 1");
    }
    std::vector<Tensor> probs;
    probs.reserve(spec.members.size());
    for (const auto& member : spec.members) probs.push_back(member->forward(ids));
    Prediction out;
    out.probs = combine_probs(probs, spec.weights, spec.mode);
    out.labels = argmax_last(out.probs);
    return out;
}

std::vector<ModelConfig> ensemble_member_configs(Extent vocab_size, Extent classes, bool desk) {
    ModelConfig cnn_a = desk ? desk_config(ModelKind::textcnn, vocab_size, classes)
                             : textcnn_config(vocab_size, classes);
    ModelConfig cnn_b = cnn_a;
    cnn_b.subnets[0].kernel_width = 4;
    ModelConfig rnn = desk ? desk_config(ModelKind::bilstm, vocab_size, classes)
                           : bilstm_config(vocab_size, classes);
    return {cnn_a, cnn_b, rnn};
}

}  // namespace ctc
