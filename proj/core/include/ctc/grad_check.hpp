#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ctc/tensor.hpp"

namespace ctc {

struct GradCheckReport {
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    std::string worst;  // "input 1 elem 7: analytic=.. numeric=.."
    bool ok(double tol) const { return max_rel_err <= tol; }
};

// Compares the tape's gradients against central differences.
//
// `f` must build a fresh graph from `inputs` and return a scalar loss; it is
// run once under a tape for analytic grads, then twice per element (values
// nudged +/- eps) without a tape for the numeric estimate. Relative error per
// element is |a - n| / max(1e-8, |a| + |n|).
template <typename S>
GradCheckReport grad_check(
    const std::function<TensorT<S>(const std::vector<TensorT<S>>&)>& f,
    std::vector<TensorT<S>> inputs, S eps);

}  // namespace ctc
