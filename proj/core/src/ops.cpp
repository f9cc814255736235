#include "ctc/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>
#include <utility>

namespace ctc {
namespace {

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MatMap = Eigen::Map<RowMat<S>>;
template <typename S>
using CMatMap = Eigen::Map<const RowMat<S>>;

// Internal constructor for op results; shapes are already validated by the op.
template <typename S>
TensorT<S> wrap(Shape shape, std::vector<S> values, bool requires_grad) {
    auto data = std::make_shared<TensorDataT<S>>();
    data->shape = std::move(shape);
    data->values = std::move(values);
    data->grad.assign(data->values.size(), S(0));
    data->requires_grad = requires_grad;
    return TensorT<S>(std::move(data));
}

template <typename S>
void maybe_record(const char* op, TensorT<S>& out, std::function<void()> fn) {
    if (auto* tape = TapeT<S>::active()) tape->record(op, out, std::move(fn));
}

// Gradient flows into explicit parameters and into tensors produced by
// recorded ops; plain data leaves are left untouched.
template <typename S>
bool wants_grad(const TensorT<S>& t) {
    return t.requires_grad() || t.tape() != nullptr;
}

[[noreturn]] void shape_fail(const char* op, const std::string& detail) {
    throw std::invalid_argument(std::string(op) + ": " + detail);
}

Extent last_extent(const Shape& s) { return s.back(); }

Extent lead_rows(const Shape& s) {
    Extent n = 1;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) n *= s[i];
    return n;
}

}  // namespace

template <typename S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
    const bool broadcast = !same_shape(a.shape(), b.shape());
    if (broadcast) {
        if (b.rank() != 1 || b.dim(0) != last_extent(a.shape())) {
            shape_fail("add", "shapes " + shape_to_string(a.shape()) + " vs " +
                                  shape_to_string(b.shape()));
        }
    }
    std::vector<S> out(a.values());
    if (broadcast) {
        const Extent f = b.dim(0);
        const Extent rows = static_cast<Extent>(out.size()) / f;
        for (Extent r = 0; r < rows; ++r) {
            S* dst = out.data() + r * f;
            const S* src = b.values().data();
            for (Extent i = 0; i < f; ++i) dst[i] += src[i];
        }
    } else {
        const S* src = b.values().data();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += src[i];
    }
    TensorT<S> result = wrap<S>(a.shape(), std::move(out), a.requires_grad() || b.requires_grad());
    check_finite(result, "add");
    maybe_record<S>("add", result, [a = a, b = b, result, broadcast]() mutable {
        const std::vector<S>& g = result.grad();
        if (wants_grad(a)) {
            std::vector<S>& da = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
        }
        if (wants_grad(b)) {
            std::vector<S>& db = b.grad();
            if (broadcast) {
                const std::size_t f = b.values().size();
                for (std::size_t i = 0; i < g.size(); ++i) db[i % f] += g[i];
            } else {
                for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i];
            }
        }
    });
    return result;
}

template <typename S>
TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b) {
    if (!same_shape(a.shape(), b.shape())) {
        shape_fail("mul", "shapes " + shape_to_string(a.shape()) + " vs " +
                              shape_to_string(b.shape()));
    }
    std::vector<S> out(a.values());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.values()[i];
    TensorT<S> result = wrap<S>(a.shape(), std::move(out), a.requires_grad() || b.requires_grad());
    check_finite(result, "mul");
    maybe_record<S>("mul", result, [a = a, b = b, result]() mutable {
        const std::vector<S>& g = result.grad();
        const std::vector<S>& av = a.values();
        const std::vector<S>& bv = b.values();
        if (wants_grad(a)) {
            std::vector<S>& da = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[i];
        }
        if (wants_grad(b)) {
            std::vector<S>& db = b.grad();
            for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[i];
        }
    });
    return result;
}

template <typename S>
TensorT<S> scale(const TensorT<S>& a, S factor) {
    std::vector<S> out(a.values());
    for (S& v : out) v *= factor;
    TensorT<S> result = wrap<S>(a.shape(), std::move(out), a.requires_grad());
    check_finite(result, "scale");
    maybe_record<S>("scale", result, [a = a, result, factor]() mutable {
        if (!wants_grad(a)) return;
        const std::vector<S>& g = result.grad();
        std::vector<S>& da = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * factor;
    });
    return result;
}

template <typename S>
TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        shape_fail("matmul", "shapes " + shape_to_string(a.shape()) + " vs " +
                                 shape_to_string(b.shape()));
    }
    const Extent m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<S> out(static_cast<std::size_t>(m * n));
    {
        CMatMap<S> am(a.values().data(), m, k);
        CMatMap<S> bm(b.values().data(), k, n);
        MatMap<S> om(out.data(), m, n);
        om.noalias() = am * bm;
    }
    TensorT<S> result = wrap<S>({m, n}, std::move(out), a.requires_grad() || b.requires_grad());
    check_finite(result, "matmul");
    maybe_record<S>("matmul", result, [a = a, b = b, result, m, k, n]() mutable {
        CMatMap<S> gm(result.grad().data(), m, n);
        if (wants_grad(a)) {
            CMatMap<S> bm(b.values().data(), k, n);
            MatMap<S> dam(a.grad().data(), m, k);
            dam.noalias() += gm * bm.transpose();
        }
        if (wants_grad(b)) {
            CMatMap<S> am(a.values().data(), m, k);
            MatMap<S> dbm(b.grad().data(), k, n);
            dbm.noalias() += am.transpose() * gm;
        }
    });
    return result;
}

template <typename S>
TensorT<S> transpose(const TensorT<S>& a) {
    if (a.rank() != 2) shape_fail("transpose", "needs rank 2, got " + shape_to_string(a.shape()));
    const Extent m = a.dim(0), n = a.dim(1);
    std::vector<S> out(static_cast<std::size_t>(m * n));
    {
        CMatMap<S> am(a.values().data(), m, n);
        MatMap<S> om(out.data(), n, m);
        om.noalias() = am.transpose();
    }
    TensorT<S> result = wrap<S>({n, m}, std::move(out), a.requires_grad());
    maybe_record<S>("transpose", result, [a = a, result, m, n]() mutable {
        if (!wants_grad(a)) return;
        CMatMap<S> gm(result.grad().data(), n, m);
        MatMap<S> dam(a.grad().data(), m, n);
        dam.noalias() += gm.transpose();
    });
    return result;
}

namespace {

// Gathers sliding windows so conv becomes one GEMM per batch element:
// col[(c*h + j), t] = x[c, t + j]
template <typename S>
RowMat<S> im2col(const S* x, Extent c_in, Extent t_len, Extent h, Extent t_out) {
    RowMat<S> col(c_in * h, t_out);
    for (Extent c = 0; c < c_in; ++c) {
        const S* row = x + c * t_len;
        for (Extent j = 0; j < h; ++j) {
            S* dst = col.data() + (c * h + j) * t_out;
            const S* src = row + j;
            std::copy(src, src + t_out, dst);
        }
    }
    return col;
}

}  // namespace

template <typename S>
TensorT<S> conv1d(const TensorT<S>& x, const TensorT<S>& k, const TensorT<S>& bias) {
    if (k.rank() != 3) shape_fail("conv1d", "kernel must be [C_out,C_in,h]");
    const Extent c_out = k.dim(0), c_in = k.dim(1), h = k.dim(2);
    if (bias.rank() != 1 || bias.dim(0) != c_out) {
        shape_fail("conv1d", "bias shape " + shape_to_string(bias.shape()) + " for C_out=" +
                                 std::to_string(c_out));
    }
    const bool batched = x.rank() == 3;
    if (!batched && x.rank() != 2) {
        shape_fail("conv1d", "input must be [C_in,T] or [B,C_in,T], got " +
                                 shape_to_string(x.shape()));
    }
    const Extent b = batched ? x.dim(0) : 1;
    const Extent xc = batched ? x.dim(1) : x.dim(0);
    const Extent t_len = batched ? x.dim(2) : x.dim(1);
    if (xc != c_in) {
        shape_fail("conv1d", "input channels " + std::to_string(xc) + " vs kernel C_in " +
                                 std::to_string(c_in));
    }
    if (t_len < h) {
        shape_fail("conv1d", "sequence length " + std::to_string(t_len) +
                                 " shorter than kernel width " + std::to_string(h));
    }
    const Extent t_out = t_len - h + 1;
    Shape out_shape = batched ? Shape{b, c_out, t_out} : Shape{c_out, t_out};
    std::vector<S> out(static_cast<std::size_t>(b * c_out * t_out));
    {
        CMatMap<S> km(k.values().data(), c_out, c_in * h);
        for (Extent e = 0; e < b; ++e) {
            RowMat<S> col = im2col<S>(x.values().data() + e * c_in * t_len, c_in, t_len, h, t_out);
            MatMap<S> om(out.data() + e * c_out * t_out, c_out, t_out);
            om.noalias() = km * col;
            for (Extent c = 0; c < c_out; ++c) om.row(c).array() += bias.values()[c];
        }
    }
    TensorT<S> result = wrap<S>(std::move(out_shape), std::move(out),
                                x.requires_grad() || k.requires_grad() || bias.requires_grad());
    check_finite(result, "conv1d");
    maybe_record<S>(
        "conv1d", result, [x = x, k = k, bias = bias, result, b, c_in, c_out, h, t_len, t_out]() mutable {
            CMatMap<S> km(k.values().data(), c_out, c_in * h);
            MatMap<S> dkm(k.grad().data(), c_out, c_in * h);
            const bool dx_wanted = wants_grad(x);
            const bool dk_wanted = wants_grad(k);
            const bool db_wanted = wants_grad(bias);
            for (Extent e = 0; e < b; ++e) {
                CMatMap<S> gm(result.grad().data() + e * c_out * t_out, c_out, t_out);
                if (dk_wanted) {
                    RowMat<S> col =
                        im2col<S>(x.values().data() + e * c_in * t_len, c_in, t_len, h, t_out);
                    dkm.noalias() += gm * col.transpose();
                }
                if (dx_wanted) {
                    RowMat<S> dcol = km.transpose() * gm;
                    S* dx = x.grad().data() + e * c_in * t_len;
                    for (Extent c = 0; c < c_in; ++c) {
                        for (Extent j = 0; j < h; ++j) {
                            const S* src = dcol.data() + (c * h + j) * t_out;
                            S* dst = dx + c * t_len + j;
                            for (Extent t = 0; t < t_out; ++t) dst[t] += src[t];
                        }
                    }
                }
                if (db_wanted) {
                    std::vector<S>& db = bias.grad();
                    for (Extent c = 0; c < c_out; ++c) db[c] += gm.row(c).sum();
                }
            }
        });
    return result;
}

template <typename S>
TensorT<S> activation(const TensorT<S>& x, Act kind) {
    std::vector<S> out(x.values());
    switch (kind) {
        case Act::relu:
            for (S& v : out) v = v > S(0) ? v : S(0);
            break;
        case Act::tanh:
            for (S& v : out) v = std::tanh(v);
            break;
        case Act::sigmoid:
            for (S& v : out) {
                if (v >= S(0)) {
                    v = S(1) / (S(1) + std::exp(-v));
                } else {
                    S e = std::exp(v);
                    v = e / (S(1) + e);
                }
            }
            break;
    }
    const char* name = kind == Act::relu ? "relu" : (kind == Act::tanh ? "tanh" : "sigmoid");
    TensorT<S> result = wrap<S>(x.shape(), std::move(out), x.requires_grad());
    check_finite(result, name);
    maybe_record<S>(name, result, [x = x, result, kind]() mutable {
        if (!wants_grad(x)) return;
        const std::vector<S>& g = result.grad();
        const std::vector<S>& y = result.values();
        const std::vector<S>& xv = x.values();
        std::vector<S>& dx = x.grad();
        switch (kind) {
            case Act::relu:
                for (std::size_t i = 0; i < g.size(); ++i) {
                    if (xv[i] > S(0)) dx[i] += g[i];
                }
                break;
            case Act::tanh:
                for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * (S(1) - y[i] * y[i]);
                break;
            case Act::sigmoid:
                for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * y[i] * (S(1) - y[i]);
                break;
        }
    });
    return result;
}

template <typename S>
TensorT<S> relu(const TensorT<S>& x) {
    return activation(x, Act::relu);
}
template <typename S>
TensorT<S> tanh(const TensorT<S>& x) {
    return activation(x, Act::tanh);
}
template <typename S>
TensorT<S> sigmoid(const TensorT<S>& x) {
    return activation(x, Act::sigmoid);
}

template <typename S>
TensorT<S> pad_last(const TensorT<S>& x, Extent left, Extent right) {
    if (left < 0 || right < 0) shape_fail("pad_last", "padding must be >= 0");
    const Extent t_len = last_extent(x.shape());
    const Extent t_out = left + t_len + right;
    const Extent rows = lead_rows(x.shape());
    Shape out_shape = x.shape();
    out_shape.back() = t_out;
    std::vector<S> out(static_cast<std::size_t>(rows * t_out), S(0));
    for (Extent r = 0; r < rows; ++r) {
        const S* src = x.values().data() + r * t_len;
        S* dst = out.data() + r * t_out + left;
        std::copy(src, src + t_len, dst);
    }
    TensorT<S> result = wrap<S>(std::move(out_shape), std::move(out), x.requires_grad());
    maybe_record<S>("pad_last", result, [x = x, result, left, t_len, t_out]() mutable {
        if (!wants_grad(x)) return;
        const std::vector<S>& g = result.grad();
        std::vector<S>& dx = x.grad();
        const Extent rows = lead_rows(x.shape());
        for (Extent r = 0; r < rows; ++r) {
            const S* gsrc = g.data() + r * t_out + left;
            S* gdst = dx.data() + r * t_len;
            for (Extent t = 0; t < t_len; ++t) gdst[t] += gsrc[t];
        }
    });
    return result;
}

template <typename S>
TensorT<S> max_pool1d(const TensorT<S>& x, Extent window, Extent stride) {
    if (window < 1 || stride < 1) shape_fail("max_pool1d", "window and stride must be >= 1");
    const Extent t_len = last_extent(x.shape());
    if (t_len < window) {
        shape_fail("max_pool1d", "sequence length " + std::to_string(t_len) +
                                     " shorter than window " + std::to_string(window));
    }
    const Extent t_out = (t_len - window) / stride + 1;
    const Extent rows = lead_rows(x.shape());
    Shape out_shape = x.shape();
    out_shape.back() = t_out;
    std::vector<S> out(static_cast<std::size_t>(rows * t_out));
    auto argmax = std::make_shared<std::vector<Extent>>(out.size());
    for (Extent r = 0; r < rows; ++r) {
        const S* src = x.values().data() + r * t_len;
        for (Extent o = 0; o < t_out; ++o) {
            Extent start = o * stride;
            Extent best = start;
            S best_v = src[start];
            for (Extent j = 1; j < window; ++j) {
                if (src[start + j] > best_v) {
                    best_v = src[start + j];
                    best = start + j;
                }
            }
            out[static_cast<std::size_t>(r * t_out + o)] = best_v;
            (*argmax)[static_cast<std::size_t>(r * t_out + o)] = r * t_len + best;
        }
    }
    TensorT<S> result = wrap<S>(std::move(out_shape), std::move(out), x.requires_grad());
    maybe_record<S>("max_pool1d", result, [x = x, result, argmax]() mutable {
        if (!wants_grad(x)) return;
        const std::vector<S>& g = result.grad();
        std::vector<S>& dx = x.grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            dx[static_cast<std::size_t>((*argmax)[i])] += g[i];
        }
    });
    return result;
}

template <typename S>
TensorT<S> global_max_pool(const TensorT<S>& x) {
    if (x.rank() < 2) shape_fail("global_max_pool", "needs rank >= 2");
    const Extent t_len = last_extent(x.shape());
    const Extent rows = lead_rows(x.shape());
    Shape out_shape(x.shape().begin(), x.shape().end() - 1);
    std::vector<S> out(static_cast<std::size_t>(rows));
    auto argmax = std::make_shared<std::vector<Extent>>(out.size());
    for (Extent r = 0; r < rows; ++r) {
        const S* src = x.values().data() + r * t_len;
        Extent best = 0;
        for (Extent j = 1; j < t_len; ++j) {
            if (src[j] > src[best]) best = j;
        }
        out[static_cast<std::size_t>(r)] = src[best];
        (*argmax)[static_cast<std::size_t>(r)] = r * t_len + best;
    }
    TensorT<S> result = wrap<S>(std::move(out_shape), std::move(out), x.requires_grad());
    maybe_record<S>("global_max_pool", result, [x = x, result, argmax]() mutable {
        if (!wants_grad(x)) return;
        const std::vector<S>& g = result.grad();
        std::vector<S>& dx = x.grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            dx[static_cast<std::size_t>((*argmax)[i])] += g[i];
        }
    });
    return result;
}

template <typename S>
TensorT<S> concat(const std::vector<TensorT<S>>& parts) {
    if (parts.empty()) shape_fail("concat", "no inputs");
    const Shape& first = parts.front().shape();
    Extent total_f = 0;
    bool rg = false;
    for (const auto& p : parts) {
        if (p.rank() != first.size()) shape_fail("concat", "rank mismatch");
        for (std::size_t i = 0; i + 1 < first.size(); ++i) {
            if (p.shape()[i] != first[i]) {
                shape_fail("concat", "leading shape mismatch: " + shape_to_string(p.shape()) +
                                         " vs " + shape_to_string(first));
            }
        }
        total_f += last_extent(p.shape());
        rg = rg || p.requires_grad();
    }
    const Extent rows = lead_rows(first);
    Shape out_shape = first;
    out_shape.back() = total_f;
    std::vector<S> out(static_cast<std::size_t>(rows * total_f));
    for (Extent r = 0; r < rows; ++r) {
        S* dst = out.data() + r * total_f;
        for (const auto& p : parts) {
            const Extent f = last_extent(p.shape());
            const S* src = p.values().data() + r * f;
            std::copy(src, src + f, dst);
            dst += f;
        }
    }
    TensorT<S> result = wrap<S>(std::move(out_shape), std::move(out), rg);
    maybe_record<S>("concat", result, [parts = parts, result, rows, total_f]() mutable {
        const std::vector<S>& g = result.grad();
        for (Extent r = 0; r < rows; ++r) {
            const S* src = g.data() + r * total_f;
            for (auto& p : parts) {
                const Extent f = last_extent(p.shape());
                if (wants_grad(p)) {
                    S* dst = p.grad().data() + r * f;
                    for (Extent i = 0; i < f; ++i) dst[i] += src[i];
                }
                src += f;
            }
        }
    });
    return result;
}

template <typename S>
TensorT<S> softmax(const TensorT<S>& x) {
    const Extent k = last_extent(x.shape());
    const Extent rows = lead_rows(x.shape());
    std::vector<S> out(x.values().size());
    for (Extent r = 0; r < rows; ++r) {
        const S* src = x.values().data() + r * k;
        S* dst = out.data() + r * k;
        S mx = src[0];
        for (Extent i = 1; i < k; ++i) mx = std::max(mx, src[i]);
        S total = S(0);
        for (Extent i = 0; i < k; ++i) {
            dst[i] = std::exp(src[i] - mx);
            total += dst[i];
        }
        for (Extent i = 0; i < k; ++i) dst[i] /= total;
    }
    TensorT<S> result = wrap<S>(x.shape(), std::move(out), x.requires_grad());
    check_finite(result, "softmax");
    maybe_record<S>("softmax", result, [x = x, result, rows, k]() mutable {
        if (!wants_grad(x)) return;
        const std::vector<S>& g = result.grad();
        const std::vector<S>& y = result.values();
        std::vector<S>& dx = x.grad();
        for (Extent r = 0; r < rows; ++r) {
            const S* gr = g.data() + r * k;
            const S* yr = y.data() + r * k;
            S dot = S(0);
            for (Extent i = 0; i < k; ++i) dot += gr[i] * yr[i];
            S* dxr = dx.data() + r * k;
            for (Extent i = 0; i < k; ++i) dxr[i] += yr[i] * (gr[i] - dot);
        }
    });
    return result;
}

template <typename S>
TensorT<S> cross_entropy(const TensorT<S>& probs, const std::vector<int>& labels) {
    if (probs.rank() != 2) shape_fail("cross_entropy", "probs must be [B,K]");
    const Extent b = probs.dim(0), k = probs.dim(1);
    if (static_cast<Extent>(labels.size()) != b) {
        shape_fail("cross_entropy",
                   std::to_string(labels.size()) + " labels for batch " + std::to_string(b));
    }
    constexpr S eps = S(1e-12);
    S total = S(0);
    for (Extent i = 0; i < b; ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        if (label < 0 || label >= k) {
            shape_fail("cross_entropy", "label " + std::to_string(label) + " outside [0," +
                                            std::to_string(k) + ")");
        }
        S p = probs.values()[static_cast<std::size_t>(i * k + label)];
        total -= std::log(std::max(p, eps));
    }
    total /= static_cast<S>(b);
    TensorT<S> result = wrap<S>({1}, {total}, probs.requires_grad());
    check_finite(result, "cross_entropy");
    maybe_record<S>("cross_entropy", result, [probs = probs, result, labels = labels, b, k]() mutable {
        if (!wants_grad(probs)) return;
        const S g0 = result.grad()[0];
        std::vector<S>& dp = probs.grad();
        for (Extent i = 0; i < b; ++i) {
            const std::size_t idx =
                static_cast<std::size_t>(i * k + labels[static_cast<std::size_t>(i)]);
            const S p = probs.values()[idx];
            if (p >= S(1e-12)) {
                dp[idx] -= g0 / (static_cast<S>(b) * p);
            }
            // below the clamp the loss is flat in p, so no gradient
        }
    });
    return result;
}

template <typename S>
TensorT<S> sum(const TensorT<S>& x) {
    S total = S(0);
    for (S v : x.values()) total += v;
    TensorT<S> result = wrap<S>({1}, {total}, x.requires_grad());
    check_finite(result, "sum");
    maybe_record<S>("sum", result, [x = x, result]() mutable {
        if (!wants_grad(x)) return;
        const S g0 = result.grad()[0];
        std::vector<S>& dx = x.grad();
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g0;
    });
    return result;
}

template <typename S>
TensorT<S> reshape(const TensorT<S>& x, Shape shape) {
    if (shape_numel(shape) != x.numel()) {
        shape_fail("reshape", shape_to_string(x.shape()) + " -> " + shape_to_string(shape) +
                                  " changes element count");
    }
    TensorT<S> result = wrap<S>(std::move(shape), x.values(), x.requires_grad());
    maybe_record<S>("reshape", result, [x = x, result]() mutable {
        if (!wants_grad(x)) return;
        const std::vector<S>& g = result.grad();
        std::vector<S>& dx = x.grad();
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
    });
    return result;
}

template <typename S>
TensorT<S> select_time(const TensorT<S>& x, Extent t) {
    if (x.rank() != 3) shape_fail("select_time", "needs [B,T,H]");
    const Extent b = x.dim(0), t_len = x.dim(1), h = x.dim(2);
    if (t < 0 || t >= t_len) {
        shape_fail("select_time",
                   "t=" + std::to_string(t) + " outside [0," + std::to_string(t_len) + ")");
    }
    std::vector<S> out(static_cast<std::size_t>(b * h));
    for (Extent e = 0; e < b; ++e) {
        const S* src = x.values().data() + (e * t_len + t) * h;
        std::copy(src, src + h, out.data() + e * h);
    }
    TensorT<S> result = wrap<S>({b, h}, std::move(out), x.requires_grad());
    maybe_record<S>("select_time", result, [x = x, result, b, t_len, h, t]() mutable {
        if (!wants_grad(x)) return;
        const std::vector<S>& g = result.grad();
        std::vector<S>& dx = x.grad();
        for (Extent e = 0; e < b; ++e) {
            S* dst = dx.data() + (e * t_len + t) * h;
            const S* src = g.data() + e * h;
            for (Extent i = 0; i < h; ++i) dst[i] += src[i];
        }
    });
    return result;
}

template <typename S>
TensorT<S> stack_time(const std::vector<TensorT<S>>& steps) {
    if (steps.empty()) shape_fail("stack_time", "no inputs");
    if (steps.front().rank() != 2) shape_fail("stack_time", "steps must be [B,H]");
    const Extent b = steps.front().dim(0), h = steps.front().dim(1);
    bool rg = false;
    for (const auto& s : steps) {
        if (s.rank() != 2 || s.dim(0) != b || s.dim(1) != h) {
            shape_fail("stack_time", "step shape " + shape_to_string(s.shape()));
        }
        rg = rg || s.requires_grad();
    }
    const Extent t_len = static_cast<Extent>(steps.size());
    std::vector<S> out(static_cast<std::size_t>(b * t_len * h));
    for (Extent t = 0; t < t_len; ++t) {
        const std::vector<S>& sv = steps[static_cast<std::size_t>(t)].values();
        for (Extent e = 0; e < b; ++e) {
            std::copy(sv.data() + e * h, sv.data() + (e + 1) * h,
                      out.data() + (e * t_len + t) * h);
        }
    }
    TensorT<S> result = wrap<S>({b, t_len, h}, std::move(out), rg);
    maybe_record<S>("stack_time", result, [steps = steps, result, b, t_len, h]() mutable {
        const std::vector<S>& g = result.grad();
        for (Extent t = 0; t < t_len; ++t) {
            auto& step = steps[static_cast<std::size_t>(t)];
            if (!wants_grad(step)) continue;
            std::vector<S>& ds = step.grad();
            for (Extent e = 0; e < b; ++e) {
                const S* src = g.data() + (e * t_len + t) * h;
                for (Extent i = 0; i < h; ++i) ds[e * h + i] += src[i];
            }
        }
    });
    return result;
}

template <typename S>
std::vector<int> argmax_last(const TensorT<S>& x) {
    const Extent k = last_extent(x.shape());
    const Extent rows = lead_rows(x.shape());
    std::vector<int> out(static_cast<std::size_t>(rows));
    for (Extent r = 0; r < rows; ++r) {
        const S* src = x.values().data() + r * k;
        Extent best = 0;
        for (Extent i = 1; i < k; ++i) {
            if (src[i] > src[best]) best = i;
        }
        out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
}

// gcc 11 drops the std::function conversion for lambdas living inside
// explicitly instantiated function templates, so instantiation is forced
// through odr-use instead.
namespace {

template <typename S>
auto instantiate_ops() {
    return std::make_tuple(&add<S>, &mul<S>, &scale<S>, &matmul<S>, &transpose<S>, &conv1d<S>,
                           &activation<S>, &relu<S>, &ctc::tanh<S>, &sigmoid<S>, &pad_last<S>,
                           &max_pool1d<S>,
                           &global_max_pool<S>, &concat<S>, &softmax<S>, &cross_entropy<S>,
                           &sum<S>, &reshape<S>, &select_time<S>, &stack_time<S>,
                           &argmax_last<S>);
}

[[maybe_unused]] const auto forced_float_ops = instantiate_ops<float>();
[[maybe_unused]] const auto forced_double_ops = instantiate_ops<double>();

}  // namespace

}  // namespace ctc
