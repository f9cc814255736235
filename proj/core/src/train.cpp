#include "ctc/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "ctc/errors.hpp"
#include "ctc/ops.hpp"
#include "ctc/queue.hpp"
#include "ctc/tape.hpp"
#include "ctc/util.hpp"

namespace ctc {

namespace {

// Divergence is detected from the loss value, so the per-op finite checks
// have to stand down while training runs.
struct FiniteGuardOff {
    bool prev;
    FiniteGuardOff() : prev(finite_guard_enabled()) { set_finite_guard(false); }
    ~FiniteGuardOff() { set_finite_guard(prev); }
};

void seeded_shuffle(std::vector<Extent>& items, std::uint64_t seed) {
    std::uint64_t state = seed;
    for (Extent i = items.size(); i > 1; --i) {
        const Extent j = static_cast<Extent>(splitmix64(state) % i);
        std::swap(items[i - 1], items[j]);
    }
}

struct Batch {
    std::vector<std::vector<int>> ids;
    std::vector<int> labels;
    Extent index = 0;  // 0-based position within the epoch
};

std::string format_epoch(const EpochRecord& e) {
    char buf[192];
    std::snprintf(buf, sizeof(buf),
                  "{\"epoch\":%llu,\"train_loss\":%.6f,\"train_acc\":%.6f,"
                  "\"val_acc\":%.6f,\"seconds\":%.3f}",
                  static_cast<unsigned long long>(e.epoch), e.train_loss, e.train_acc, e.val_acc,
                  e.seconds);
    return buf;
}

}  // namespace

OptimizerKind optimizer_kind_from(const std::string& name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "sgd_momentum" || name == "sgd") return OptimizerKind::sgd_momentum;
    throw data_error("unknown optimizer: " + name);
}

const char* to_string(OptimizerKind kind) {
    return kind == OptimizerKind::adam ? "adam" : "sgd_momentum";
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw std::invalid_argument("train: learning_rate must be finite and >= 0");
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("train: max_epochs must be >= 1");
    if (patience < 1) throw std::invalid_argument("train: patience must be >= 1");
    if (!(momentum >= 0.0) || momentum >= 1.0)
        throw std::invalid_argument("train: momentum must be in [0, 1)");
    if (!(beta1 >= 0.0) || beta1 >= 1.0 || !(beta2 >= 0.0) || beta2 >= 1.0)
        throw std::invalid_argument("train: adam betas must be in [0, 1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("train: epsilon must be > 0");
    if (!std::isfinite(clip_norm)) throw std::invalid_argument("train: clip_norm must be finite");
    if (!(val_fraction > 0.0) || !(val_fraction < 1.0))
        throw std::invalid_argument("train: val_fraction must be in (0, 1)");
    if (!(target_train_acc >= 0.0) || target_train_acc > 1.0)
        throw std::invalid_argument("train: target_train_acc must be in [0, 1]");
}

std::string history_to_ndjson(const History& history) {
    std::string out;
    for (const auto& e : history.epochs) {
        out += format_epoch(e);
        out += '\n';
    }
    return out;
}

Optimizer::Optimizer(std::vector<Param> params, const TrainConfig& config) : config_(config) {
    config_.validate();
    slots_.reserve(params.size());
    for (auto& p : params) {
        Slot slot;
        slot.tensor = p.tensor;
        const std::size_t n = p.tensor.numel();
        const bool adam = config_.optimizer == OptimizerKind::adam;
        if (config_.precision == Precision::f32) {
            slot.m32.assign(n, 0.0f);
            if (adam) slot.v32.assign(n, 0.0f);
        } else {
            slot.m64.assign(n, 0.0);
            if (adam) slot.v64.assign(n, 0.0);
        }
        slots_.push_back(std::move(slot));
    }
}

void Optimizer::zero_grad() {
    for (auto& slot : slots_) slot.tensor.zero_grad();
}

void Optimizer::step() {
    ++steps_;
    const double lr = config_.learning_rate;
    const bool adam = config_.optimizer == OptimizerKind::adam;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double eps = config_.epsilon;
    const double mu = config_.momentum;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    for (auto& slot : slots_) {
        auto& v = slot.tensor.values();
        const auto& g = slot.tensor.grad();
        const std::size_t n = v.size();
        if (adam && config_.precision == Precision::f32) {
            for (std::size_t i = 0; i < n; ++i) {
                slot.m32[i] = static_cast<float>(b1 * slot.m32[i] + (1.0 - b1) * g[i]);
                slot.v32[i] =
                    static_cast<float>(b2 * slot.v32[i] + (1.0 - b2) * double(g[i]) * g[i]);
                const double update =
                    lr * (slot.m32[i] / c1) / (std::sqrt(slot.v32[i] / c2) + eps);
                v[i] -= static_cast<float>(update);
            }
        } else if (adam) {
            for (std::size_t i = 0; i < n; ++i) {
                slot.m64[i] = b1 * slot.m64[i] + (1.0 - b1) * g[i];
                slot.v64[i] = b2 * slot.v64[i] + (1.0 - b2) * double(g[i]) * g[i];
                const double update =
                    lr * (slot.m64[i] / c1) / (std::sqrt(slot.v64[i] / c2) + eps);
                v[i] -= static_cast<float>(update);
            }
        } else if (config_.precision == Precision::f32) {
            for (std::size_t i = 0; i < n; ++i) {
                slot.m32[i] = static_cast<float>(mu * slot.m32[i] + g[i]);
                v[i] -= static_cast<float>(lr * slot.m32[i]);
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                slot.m64[i] = mu * slot.m64[i] + g[i];
                v[i] -= static_cast<float>(lr * slot.m64[i]);
            }
        }
    }
}

double grad_global_norm(const std::vector<Param>& params) {
    double sum = 0.0;
    for (const auto& p : params)
        for (float g : p.tensor.grad()) sum += double(g) * g;
    return std::sqrt(sum);
}

void clip_gradients(const std::vector<Param>& params, double max_norm) {
    if (max_norm <= 0.0) return;
    const double norm = grad_global_norm(params);
    if (norm <= max_norm || norm == 0.0) return;
    const float scale = static_cast<float>(max_norm / norm);
    for (const auto& p : params) {
        // params() hands out value copies of the handles; the buffers are shared
        auto tensor = p.tensor;
        for (float& g : tensor.grad()) g *= scale;
    }
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size())
        throw std::invalid_argument("accuracy: size mismatch");
    if (predicted.empty()) throw data_error("accuracy: empty prediction set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == truth[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

namespace {

Extent shared_cap(const std::vector<Record>& records, Extent seq_cap, Extent min_len) {
    Extent longest = 1;
    for (const auto& r : records) longest = std::max(longest, r.length);
    if (seq_cap > 0) longest = std::min(longest, seq_cap);
    return std::max(longest, min_len);
}

// Shared by the model and ensemble overloads: chunked prediction with an
// integer correct count, optionally fanned out over worker threads. The cap
// is fixed up front, so per-chunk results never depend on chunk composition.
template <typename PredictFn>
double evaluate_impl(PredictFn&& predict, Extent min_len, const std::vector<Record>& records,
                     const Vocab& vocab, const LabelTable& labels, Extent seq_cap,
                     Extent batch_size) {
    if (records.empty()) throw data_error("evaluate: empty data");
    if (batch_size < 1) throw std::invalid_argument("evaluate: batch_size must be >= 1");
    const Extent n = records.size();
    const Extent cap = shared_cap(records, seq_cap, min_len);
    const Extent chunks = (n + batch_size - 1) / batch_size;

    auto score_chunk = [&](Extent c) -> std::size_t {
        const Extent lo = c * batch_size;
        const Extent hi = std::min(n, lo + batch_size);
        std::vector<std::vector<int>> ids;
        std::vector<int> truth;
        ids.reserve(hi - lo);
        truth.reserve(hi - lo);
        for (Extent i = lo; i < hi; ++i) {
            ids.push_back(encode_text(records[i].text, vocab, cap));
            truth.push_back(labels.id_of(records[i].label));
        }
        const std::vector<int> pred = predict(ids);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (pred[i] == truth[i]) ++correct;
        return correct;
    };

    const Extent workers = std::min<Extent>(worker_threads(), chunks);
    std::size_t correct = 0;
    if (workers > 1) {
        std::atomic<Extent> next{0};
        std::atomic<std::size_t> total{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (Extent w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                std::size_t local = 0;
                for (Extent c = next.fetch_add(1); c < chunks; c = next.fetch_add(1))
                    local += score_chunk(c);
                total.fetch_add(local);
            });
        }
        for (auto& t : pool) t.join();
        correct = total.load();
    } else {
        for (Extent c = 0; c < chunks; ++c) correct += score_chunk(c);
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace

double evaluate(const Model& model, const std::vector<Record>& records, const Vocab& vocab,
                const LabelTable& labels, Extent seq_cap, Extent batch_size) {
    return evaluate_impl(
        [&](const std::vector<std::vector<int>>& ids) { return argmax_last(model.forward(ids)); },
        model.min_seq_len(), records, vocab, labels, seq_cap, batch_size);
}

double evaluate(const EnsembleSpec& spec, const std::vector<Record>& records, const Vocab& vocab,
                const LabelTable& labels, Extent seq_cap, Extent batch_size) {
    if (spec.members.empty()) throw std::invalid_argument("evaluate: empty ensemble");
    Extent min_len = 1;
    for (const auto& m : spec.members) min_len = std::max(min_len, m->min_seq_len());
    return evaluate_impl(
        [&](const std::vector<std::vector<int>>& ids) {
            return ensemble_predict(spec, ids).labels;
        },
        min_len, records, vocab, labels, seq_cap, batch_size);
}

History train(Model& model, const std::vector<Record>& train_records,
              const std::vector<Record>& val_records, const Vocab& vocab,
              const LabelTable& labels, const TrainConfig& config, std::ostream* metrics) {
    config.validate();
    if (train_records.empty()) throw data_error("train: empty training set");
    if (val_records.empty()) throw data_error("train: empty validation set");

    FiniteGuardOff guard;
    std::vector<Param> params = model.params();
    Optimizer opt(params, config);

    const Extent n = train_records.size();
    const Extent batches = (n + config.batch_size - 1) / config.batch_size;
    const Extent min_len = model.min_seq_len();

    auto make_batch = [&](const std::vector<Extent>& order, Extent b) {
        Batch batch;
        batch.index = b;
        const Extent lo = b * config.batch_size;
        const Extent hi = std::min(n, lo + config.batch_size);
        Extent cap = 1;
        for (Extent i = lo; i < hi; ++i)
            cap = std::max(cap, train_records[order[i]].length);
        if (config.seq_cap > 0) cap = std::min(cap, config.seq_cap);
        cap = std::max(cap, min_len);
        batch.ids.reserve(hi - lo);
        batch.labels.reserve(hi - lo);
        for (Extent i = lo; i < hi; ++i) {
            const Record& r = train_records[order[i]];
            batch.ids.push_back(encode_text(r.text, vocab, cap));
            batch.labels.push_back(labels.id_of(r.label));
        }
        return batch;
    };

    History history;
    std::vector<std::vector<float>> best;
    Extent since_best = 0;

    auto snapshot = [&] {
        best.clear();
        best.reserve(params.size());
        for (const auto& p : params) best.push_back(p.tensor.values());
    };
    auto restore = [&] {
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto t = params[i].tensor;
            t.values() = best[i];
        }
    };

    for (Extent epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const double t0 = monotonic_seconds();
        std::vector<Extent> order(n);
        std::iota(order.begin(), order.end(), Extent{0});
        seeded_shuffle(order, derive_seed(config.seed, "epoch" + std::to_string(epoch)));

        double loss_sum = 0.0;
        std::size_t correct = 0;

        auto consume = [&](Batch&& batch) {
            Tape tape;
            Tape::Scope scope(tape);
            Tensor probs = model.forward(batch.ids);
            Tensor loss = cross_entropy(probs, batch.labels);
            const double value = loss.item();
            if (!std::isfinite(value))
                throw divergence_error(static_cast<int>(epoch), static_cast<int>(batch.index),
                                       "train: non-finite loss at epoch " +
                                           std::to_string(epoch) + ", batch " +
                                           std::to_string(batch.index));
            const std::vector<int> pred = argmax_last(probs);
            for (std::size_t i = 0; i < pred.size(); ++i)
                if (pred[i] == batch.labels[i]) ++correct;
            loss_sum += value * static_cast<double>(batch.ids.size());
            opt.zero_grad();
            backward(loss);
            clip_gradients(params, config.clip_norm);
            opt.step();
        };

        if (worker_threads() > 1 && batches > 1) {
            BoundedQueue<Batch> queue(4);
            std::thread producer([&] {
                for (Extent b = 0; b < batches; ++b)
                    if (!queue.push(make_batch(order, b))) return;
                queue.close();
            });
            try {
                while (auto batch = queue.pop()) consume(std::move(*batch));
            } catch (...) {
                queue.close();
                producer.join();
                throw;
            }
            producer.join();
        } else {
            for (Extent b = 0; b < batches; ++b) consume(make_batch(order, b));
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(n);
        rec.train_acc = static_cast<double>(correct) / static_cast<double>(n);
        rec.val_acc = evaluate(model, val_records, vocab, labels, config.seq_cap);
        rec.seconds = monotonic_seconds() - t0;
        history.epochs.push_back(rec);
        if (metrics) {
            *metrics << format_epoch(rec) << '\n';
            metrics->flush();
        }

        if (history.best_epoch == 0 || rec.val_acc > history.best_val_acc) {
            history.best_epoch = epoch;
            history.best_val_acc = rec.val_acc;
            snapshot();
            since_best = 0;
        } else if (++since_best >= config.patience) {
            history.early_stopped = true;
            break;
        }
        if (config.target_train_acc > 0.0 && rec.train_acc >= config.target_train_acc) {
            // memorization target hit; keep these parameters, not an older snapshot
            history.best_epoch = epoch;
            history.best_val_acc = rec.val_acc;
            snapshot();
            break;
        }
    }

    restore();
    return history;
}

}  // namespace ctc
