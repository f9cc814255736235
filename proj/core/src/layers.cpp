#include "ctc/layers.hpp"

#include <memory>
#include <stdexcept>

#include "ctc/errors.hpp"
#include "ctc/tape.hpp"

namespace ctc {

template <typename S>
Extent param_count(const std::vector<ParamT<S>>& params) {
    Extent n = 0;
    for (const auto& p : params) n += p.tensor.numel();
    return n;
}

namespace {

// The backward closure lives in this implicitly-instantiated helper because
// gcc 11 fails to emit std::function conversions for lambdas inside explicitly
// instantiated members.
template <typename S>
void record_embedding(TensorT<S> table, TensorT<S> out,
                      std::shared_ptr<const std::vector<int>> flat_ids, Extent t_len, bool chan) {
    auto* tape = TapeT<S>::active();
    if (!tape) return;
    tape->record("embedding", out, [table, out, flat_ids, t_len, chan]() mutable {
        if (!(table.requires_grad() || table.tape() != nullptr)) return;
        const Extent d = table.dim(1);
        const std::vector<S>& g = out.grad();
        std::vector<S>& dt = table.grad();
        const Extent rows = static_cast<Extent>(flat_ids->size());
        for (Extent r = 0; r < rows; ++r) {
            const int id = (*flat_ids)[static_cast<std::size_t>(r)];
            if (id == 0) continue;  // padding row stays untrained
            S* dst = dt.data() + static_cast<Extent>(id) * d;
            if (!chan) {
                const S* src = g.data() + r * d;
                for (Extent i = 0; i < d; ++i) dst[i] += src[i];
            } else {
                const Extent b = r / t_len, t = r % t_len;
                const S* base = g.data() + b * d * t_len + t;
                for (Extent i = 0; i < d; ++i) dst[i] += base[i * t_len];
            }
        }
    });
}

template <typename S>
TensorT<S> raw_tensor(Shape shape, std::vector<S> values, bool requires_grad) {
    auto data = std::make_shared<TensorDataT<S>>();
    data->shape = std::move(shape);
    data->values = std::move(values);
    data->grad.assign(data->values.size(), S(0));
    data->requires_grad = requires_grad;
    return TensorT<S>(std::move(data));
}

}  // namespace

template <typename S>
EmbeddingT<S>::EmbeddingT(Extent vocab_size, Extent dim, SeededRng& rng) {
    if (vocab_size < 1 || dim < 1) throw std::invalid_argument("embedding: bad sizes");
    table_ = glorot_uniform<S>({vocab_size, dim}, vocab_size, dim, rng, true);
    std::fill(table_.values().begin(), table_.values().begin() + dim, S(0));  // padding row
}

namespace {

std::shared_ptr<std::vector<int>> flatten_ids(const std::vector<std::vector<int>>& ids,
                                              Extent vocab, Extent& b, Extent& t_len) {
    if (ids.empty() || ids.front().empty()) throw data_error("embedding: empty id batch");
    b = static_cast<Extent>(ids.size());
    t_len = static_cast<Extent>(ids.front().size());
    auto flat = std::make_shared<std::vector<int>>();
    flat->reserve(static_cast<std::size_t>(b * t_len));
    for (const auto& row : ids) {
        if (static_cast<Extent>(row.size()) != t_len) {
            throw data_error("embedding: ragged id batch");
        }
        for (int id : row) {
            if (id < 0 || id >= vocab) {
                throw data_error("embedding: id " + std::to_string(id) + " outside vocab of " +
                                 std::to_string(vocab));
            }
            flat->push_back(id);
        }
    }
    return flat;
}

}  // namespace

template <typename S>
TensorT<S> EmbeddingT<S>::lookup_seq(const std::vector<std::vector<int>>& ids) const {
    Extent b = 0, t_len = 0;
    auto flat = flatten_ids(ids, vocab_size(), b, t_len);
    const Extent d = dim();
    std::vector<S> out(static_cast<std::size_t>(b * t_len * d));
    for (Extent r = 0; r < b * t_len; ++r) {
        const S* src = table_.values().data() + static_cast<Extent>((*flat)[r]) * d;
        std::copy(src, src + d, out.data() + r * d);
    }
    TensorT<S> result = raw_tensor<S>({b, t_len, d}, std::move(out), table_.requires_grad());
    record_embedding<S>(table_, result, flat, t_len, false);
    return result;
}

template <typename S>
TensorT<S> EmbeddingT<S>::lookup_chan(const std::vector<std::vector<int>>& ids) const {
    Extent b = 0, t_len = 0;
    auto flat = flatten_ids(ids, vocab_size(), b, t_len);
    const Extent d = dim();
    std::vector<S> out(static_cast<std::size_t>(b * t_len * d));
    for (Extent e = 0; e < b; ++e) {
        for (Extent t = 0; t < t_len; ++t) {
            const S* src =
                table_.values().data() + static_cast<Extent>((*flat)[e * t_len + t]) * d;
            S* dst = out.data() + e * d * t_len + t;
            for (Extent i = 0; i < d; ++i) dst[i * t_len] = src[i];
        }
    }
    TensorT<S> result = raw_tensor<S>({b, d, t_len}, std::move(out), table_.requires_grad());
    record_embedding<S>(table_, result, flat, t_len, true);
    return result;
}

template <typename S>
void EmbeddingT<S>::collect_params(const std::string& prefix, std::vector<ParamT<S>>& out) const {
    out.push_back({prefix + ".table", table_});
}

template <typename S>
ConvBlockT<S>::ConvBlockT(Extent d_in, Extent filters, Extent width, SeededRng& rng,
                          bool same_pad)
    : same_pad_(same_pad) {
    if (d_in < 1 || filters < 1 || width < 1) throw std::invalid_argument("conv_block: bad sizes");
    kernel_ = glorot_uniform<S>({filters, d_in, width}, d_in * width, filters * width, rng, true);
    bias_ = tensor_zeros<S>({filters}, true);
}

template <typename S>
TensorT<S> ConvBlockT<S>::forward(const TensorT<S>& x) const {
    if (!same_pad_) return relu(conv1d(x, kernel_, bias_));
    const Extent h = width();
    const Extent left = (h - 1) / 2;
    return relu(conv1d(pad_last(x, left, h - 1 - left), kernel_, bias_));
}

template <typename S>
void ConvBlockT<S>::collect_params(const std::string& prefix, std::vector<ParamT<S>>& out) const {
    out.push_back({prefix + ".kernel", kernel_});
    out.push_back({prefix + ".bias", bias_});
}

template <typename S>
LSTMT<S>::LSTMT(Extent input_dim, Extent hidden, SeededRng& rng)
    : input_dim_(input_dim), hidden_(hidden) {
    if (input_dim < 1 || hidden < 1) throw std::invalid_argument("lstm: bad sizes");
    for (int g = 0; g < 4; ++g) {
        w_[g] = glorot_uniform<S>({input_dim, hidden}, input_dim, hidden, rng, true);
        u_[g] = glorot_uniform<S>({hidden, hidden}, hidden, hidden, rng, true);
        b_[g] = tensor_zeros<S>({hidden}, true);
    }
    std::fill(b_[1].values().begin(), b_[1].values().end(), S(1));  // forget gate opens
}

template <typename S>
typename LSTMT<S>::Out LSTMT<S>::forward(const TensorT<S>& x, bool reverse) const {
    if (x.rank() != 3 || x.dim(2) != input_dim_) {
        throw std::invalid_argument("lstm: input shape " + shape_to_string(x.shape()) +
                                    " for input_dim " + std::to_string(input_dim_));
    }
    const Extent b = x.dim(0), t_len = x.dim(1);
    // one batched projection per gate covers every timestep
    TensorT<S> x2 = reshape(x, {b * t_len, input_dim_});
    TensorT<S> pre[4];
    for (int g = 0; g < 4; ++g) pre[g] = reshape(matmul(x2, w_[g]), {b, t_len, hidden_});

    std::vector<TensorT<S>> steps(static_cast<std::size_t>(t_len));
    TensorT<S> h, c;
    for (Extent s = 0; s < t_len; ++s) {
        const Extent t = reverse ? t_len - 1 - s : s;
        TensorT<S> z[4];
        for (int g = 0; g < 4; ++g) {
            TensorT<S> zt = select_time(pre[g], t);
            if (s > 0) zt = add(zt, matmul(h, u_[g]));
            z[g] = add(zt, b_[g]);
        }
        TensorT<S> i = sigmoid(z[0]);
        TensorT<S> f = sigmoid(z[1]);
        TensorT<S> g_cand = ctc::tanh(z[2]);
        TensorT<S> o = sigmoid(z[3]);
        c = s == 0 ? mul(i, g_cand) : add(mul(f, c), mul(i, g_cand));
        h = mul(o, ctc::tanh(c));
        steps[static_cast<std::size_t>(t)] = h;
    }
    return Out{stack_time(steps), h, c};
}

template <typename S>
void LSTMT<S>::collect_params(const std::string& prefix, std::vector<ParamT<S>>& out) const {
    static const char* gate[4] = {"i", "f", "g", "o"};
    for (int g = 0; g < 4; ++g) {
        out.push_back({prefix + ".w_" + gate[g], w_[g]});
        out.push_back({prefix + ".u_" + gate[g], u_[g]});
        out.push_back({prefix + ".b_" + gate[g], b_[g]});
    }
}

template <typename S>
BiLSTMT<S>::BiLSTMT(Extent input_dim, Extent hidden, Extent out_dim, SeededRng& rng)
    : fwd_(input_dim, hidden, rng), bwd_(input_dim, hidden, rng) {
    if (out_dim < 1) throw std::invalid_argument("bilstm: bad out_dim");
    wy_f_ = glorot_uniform<S>({hidden, out_dim}, hidden, out_dim, rng, true);
    wy_b_ = glorot_uniform<S>({hidden, out_dim}, hidden, out_dim, rng, true);
    by_ = tensor_zeros<S>({out_dim}, true);
}

template <typename S>
typename BiLSTMT<S>::Out BiLSTMT<S>::forward(const TensorT<S>& x) const {
    auto fo = fwd_.forward(x, false);
    auto bo = bwd_.forward(x, true);
    const Extent b = x.dim(0), t_len = x.dim(1), h = fwd_.hidden();
    const Extent out_dim = wy_f_.dim(1);
    TensorT<S> sf = reshape(fo.states, {b * t_len, h});
    TensorT<S> sb = reshape(bo.states, {b * t_len, h});
    TensorT<S> y = add(add(matmul(sf, wy_f_), matmul(sb, wy_b_)), by_);
    return Out{reshape(y, {b, t_len, out_dim}),
               concat(std::vector<TensorT<S>>{fo.final_hidden, bo.final_hidden})};
}

template <typename S>
void BiLSTMT<S>::collect_params(const std::string& prefix, std::vector<ParamT<S>>& out) const {
    fwd_.collect_params(prefix + ".fwd", out);
    bwd_.collect_params(prefix + ".bwd", out);
    out.push_back({prefix + ".wy_f", wy_f_});
    out.push_back({prefix + ".wy_b", wy_b_});
    out.push_back({prefix + ".by", by_});
}

template <typename S>
DenseT<S>::DenseT(Extent in, Extent out, std::optional<Act> act, SeededRng& rng) : act_(act) {
    if (in < 1 || out < 1) throw std::invalid_argument("dense: bad sizes");
    weight_ = glorot_uniform<S>({in, out}, in, out, rng, true);
    bias_ = tensor_zeros<S>({out}, true);
}

template <typename S>
TensorT<S> DenseT<S>::forward(const TensorT<S>& x) const {
    TensorT<S> y = add(matmul(x, weight_), bias_);
    return act_ ? activation(y, *act_) : y;
}

template <typename S>
void DenseT<S>::collect_params(const std::string& prefix, std::vector<ParamT<S>>& out) const {
    out.push_back({prefix + ".weight", weight_});
    out.push_back({prefix + ".bias", bias_});
}

template Extent param_count<float>(const std::vector<ParamT<float>>&);
template Extent param_count<double>(const std::vector<ParamT<double>>&);
template class EmbeddingT<float>;
template class EmbeddingT<double>;
template class ConvBlockT<float>;
template class ConvBlockT<double>;
template class LSTMT<float>;
template class LSTMT<double>;
template class BiLSTMT<float>;
template class BiLSTMT<double>;
template class DenseT<float>;
template class DenseT<double>;

}  // namespace ctc
