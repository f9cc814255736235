#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctc/init.hpp"
#include "ctc/ops.hpp"
#include "ctc/tensor.hpp"

namespace ctc {

template <typename S>
struct ParamT {
    std::string name;
    TensorT<S> tensor;
};
using Param = ParamT<float>;

template <typename S>
Extent param_count(const std::vector<ParamT<S>>& params);

// Trainable id -> vector table. Row 0 belongs to the padding id: it starts at
// zero and receives no gradient, so it stays zero through training.
template <typename S>
class EmbeddingT {
  public:
    EmbeddingT() = default;
    EmbeddingT(Extent vocab_size, Extent dim, SeededRng& rng);

    // ids is a dense [B, T] grid (every row the same length, T >= 1).
    // seq-major output is [B, T, D] for recurrent nets; channel-major is
    // [B, D, T] for convolutions. Ids outside [0, vocab) raise data_error.
    TensorT<S> lookup_seq(const std::vector<std::vector<int>>& ids) const;
    TensorT<S> lookup_chan(const std::vector<std::vector<int>>& ids) const;

    Extent vocab_size() const { return table_.dim(0); }
    Extent dim() const { return table_.dim(1); }
    TensorT<S>& table() { return table_; }
    const TensorT<S>& table() const { return table_; }
    void collect_params(const std::string& prefix, std::vector<ParamT<S>>& out) const;

  private:
    TensorT<S> table_;  // [V, D]
};

// relu(conv1d(x, kernel, bias)): one width-h filter bank. With same_pad the
// input is zero-padded on the time axis so the output keeps the input extent
// ([B,D,T] -> [B,F,T]); otherwise the correlation is valid ([B,F,T-h+1]).
template <typename S>
class ConvBlockT {
  public:
    ConvBlockT() = default;
    ConvBlockT(Extent d_in, Extent filters, Extent width, SeededRng& rng, bool same_pad = false);

    TensorT<S> forward(const TensorT<S>& x) const;

    Extent width() const { return kernel_.dim(2); }
    Extent filters() const { return kernel_.dim(0); }
    bool same_pad() const { return same_pad_; }
    void collect_params(const std::string& prefix, std::vector<ParamT<S>>& out) const;

    TensorT<S> kernel_;  // [F, D, h]
    TensorT<S> bias_;    // [F]
    bool same_pad_ = false;
};

// Single-direction LSTM. Gates use sigmoid, the candidate uses tanh:
//   i,f,o = sigmoid(x W + h U + b);  g = tanh(x W + h U + b)
//   c_t = f*c_{t-1} + i*g;  h_t = o * tanh(c_t)
// The forget-gate bias starts at 1, everything else follows Glorot/zero.
template <typename S>
class LSTMT {
  public:
    LSTMT() = default;
    LSTMT(Extent input_dim, Extent hidden, SeededRng& rng);

    struct Out {
        TensorT<S> states;        // [B, T, H] hidden states in input time order
        TensorT<S> final_hidden;  // [B, H] state at the last processed step
        TensorT<S> final_cell;    // [B, H]
    };
    // reverse=true runs t = T-1 .. 0 (states still stored at their own t).
    Out forward(const TensorT<S>& x, bool reverse = false) const;  // x: [B, T, D]

    Extent hidden() const { return hidden_; }
    Extent input_dim() const { return input_dim_; }
    void collect_params(const std::string& prefix, std::vector<ParamT<S>>& out) const;

    // gate order: i, f, g (candidate), o
    TensorT<S> w_[4];  // [D, H]
    TensorT<S> u_[4];  // [H, H]
    TensorT<S> b_[4];  // [H]

  private:
    Extent input_dim_ = 0;
    Extent hidden_ = 0;
};

// Two LSTMs over opposite directions plus a per-timestep linear head:
//   y_t = h_fwd_t Wy_f + h_bwd_t Wy_b + by
// `feature` is the concatenation of both final hidden states, [B, 2H].
template <typename S>
class BiLSTMT {
  public:
    BiLSTMT() = default;
    BiLSTMT(Extent input_dim, Extent hidden, Extent out_dim, SeededRng& rng);

    struct Out {
        TensorT<S> outputs;  // [B, T, out_dim]
        TensorT<S> feature;  // [B, 2H]
    };
    Out forward(const TensorT<S>& x) const;  // x: [B, T, D]

    Extent hidden() const { return fwd_.hidden(); }
    void collect_params(const std::string& prefix, std::vector<ParamT<S>>& out) const;

    LSTMT<S> fwd_;
    LSTMT<S> bwd_;
    TensorT<S> wy_f_;  // [H, out]
    TensorT<S> wy_b_;  // [H, out]
    TensorT<S> by_;    // [out]
};

// x [B,in] -> activation(x W + b), W stored [in, out].
template <typename S>
class DenseT {
  public:
    DenseT() = default;
    DenseT(Extent in, Extent out, std::optional<Act> act, SeededRng& rng);

    TensorT<S> forward(const TensorT<S>& x) const;

    Extent in_dim() const { return weight_.dim(0); }
    Extent out_dim() const { return weight_.dim(1); }
    void collect_params(const std::string& prefix, std::vector<ParamT<S>>& out) const;

    TensorT<S> weight_;  // [in, out]
    TensorT<S> bias_;    // [out]
    std::optional<Act> act_;
};

using Embedding = EmbeddingT<float>;
using ConvBlock = ConvBlockT<float>;
using LSTM = LSTMT<float>;
using BiLSTM = BiLSTMT<float>;
using Dense = DenseT<float>;

}  // namespace ctc
