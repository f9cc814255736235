#include "ctc/grad_check.hpp"

#include <cmath>
#include <sstream>

#include "ctc/tape.hpp"

namespace ctc {

template <typename S>
GradCheckReport grad_check(
    const std::function<TensorT<S>(const std::vector<TensorT<S>>&)>& f,
    std::vector<TensorT<S>> inputs, S eps) {
    for (auto& in : inputs) {
        in.set_requires_grad(true);
        in.zero_grad();
    }

    // analytic pass
    std::vector<std::vector<S>> analytic;
    {
        TapeT<S> tape;
        typename TapeT<S>::Scope scope(tape);
        TensorT<S> loss = f(inputs);
        backward(loss);
        for (auto& in : inputs) analytic.push_back(in.grad());
    }

    GradCheckReport report;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        auto& in = inputs[i];
        for (std::size_t j = 0; j < in.values().size(); ++j) {
            const S saved = in.values()[j];
            in.values()[j] = saved + eps;
            const double up = static_cast<double>(f(inputs).item());
            in.values()[j] = saved - eps;
            const double down = static_cast<double>(f(inputs).item());
            in.values()[j] = saved;

            const double numeric = (up - down) / (2.0 * static_cast<double>(eps));
            const double a = static_cast<double>(analytic[i][j]);
            const double abs_err = std::abs(a - numeric);
            const double rel_err = abs_err / std::max(1e-8, std::abs(a) + std::abs(numeric));
            if (rel_err > report.max_rel_err) {
                report.max_rel_err = rel_err;
                std::ostringstream os;
                os << "input " << i << " elem " << j << ": analytic=" << a
                   << " numeric=" << numeric;
                report.worst = os.str();
            }
            report.max_abs_err = std::max(report.max_abs_err, abs_err);
        }
    }
    return report;
}

template GradCheckReport grad_check<float>(
    const std::function<TensorT<float>(const std::vector<TensorT<float>>&)>&,
    std::vector<TensorT<float>>, float);
template GradCheckReport grad_check<double>(
    const std::function<TensorT<double>(const std::vector<TensorT<double>>&)>&,
    std::vector<TensorT<double>>, double);

}  // namespace ctc
