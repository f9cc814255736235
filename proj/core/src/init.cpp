#include "ctc/init.hpp"

#include <cmath>
#include <stdexcept>

namespace ctc {

template <typename S>
TensorT<S> glorot_uniform(Shape shape, Extent fan_in, Extent fan_out, SeededRng& rng,
                          bool requires_grad) {
    if (fan_in < 1 || fan_out < 1) throw std::invalid_argument("glorot_uniform: bad fan sizes");
    const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<S> values(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& v : values) v = static_cast<S>(rng.uniform(-r, r));
    return tensor_create<S>(std::move(shape), std::move(values), requires_grad);
}

template TensorT<float> glorot_uniform<float>(Shape, Extent, Extent, SeededRng&, bool);
template TensorT<double> glorot_uniform<double>(Shape, Extent, Extent, SeededRng&, bool);

}  // namespace ctc
