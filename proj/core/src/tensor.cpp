#include "ctc/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ctc {

namespace {
std::atomic<bool> g_finite_guard{true};
}

void set_finite_guard(bool enabled) { g_finite_guard.store(enabled, std::memory_order_relaxed); }
bool finite_guard_enabled() { return g_finite_guard.load(std::memory_order_relaxed); }

Extent shape_numel(const Shape& shape) {
    Extent n = 1;
    for (Extent e : shape) n *= e;
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

template <typename S>
S TensorT<S>::item() const {
    if (data_->values.size() != 1) {
        throw std::invalid_argument("item: tensor has " + std::to_string(data_->values.size()) +
                                    " elements, expected 1");
    }
    return data_->values[0];
}

template <typename S>
void check_finite(const TensorT<S>& t, const char* op_name) {
    if (!finite_guard_enabled()) return;
    for (S v : t.values()) {
        if (!std::isfinite(v)) {
            throw std::runtime_error(std::string(op_name) + ": non-finite value in output");
        }
    }
}

template <typename S>
TensorT<S> tensor_create(Shape shape, std::vector<S> values, bool requires_grad) {
    if (shape.empty()) throw std::invalid_argument("tensor_create: empty shape");
    for (Extent e : shape) {
        if (e < 1) {
            throw std::invalid_argument("tensor_create: non-positive extent in " +
                                        shape_to_string(shape));
        }
    }
    Extent n = shape_numel(shape);
    if (static_cast<Extent>(values.size()) != n) {
        throw std::invalid_argument("tensor_create: " + std::to_string(values.size()) +
                                    " values for shape " + shape_to_string(shape) + " (needs " +
                                    std::to_string(n) + ")");
    }
    auto data = std::make_shared<TensorDataT<S>>();
    data->shape = std::move(shape);
    data->values = std::move(values);
    data->grad.assign(data->values.size(), S(0));
    data->requires_grad = requires_grad;
    TensorT<S> t(std::move(data));
    check_finite(t, "tensor_create");
    return t;
}

template <typename S>
TensorT<S> tensor_full(Shape shape, S fill, bool requires_grad) {
    Extent n = shape_numel(shape);
    if (n < 1) throw std::invalid_argument("tensor_full: bad shape " + shape_to_string(shape));
    return tensor_create<S>(std::move(shape), std::vector<S>(static_cast<std::size_t>(n), fill),
                            requires_grad);
}

template <typename S>
TensorT<S> tensor_zeros(Shape shape, bool requires_grad) {
    return tensor_full<S>(std::move(shape), S(0), requires_grad);
}

template <typename S>
TensorT<S> tensor_clone(const TensorT<S>& src) {
    return tensor_create<S>(src.shape(), src.values(), src.requires_grad());
}

template class TensorT<float>;
template class TensorT<double>;
template TensorT<float> tensor_create<float>(Shape, std::vector<float>, bool);
template TensorT<double> tensor_create<double>(Shape, std::vector<double>, bool);
template TensorT<float> tensor_full<float>(Shape, float, bool);
template TensorT<double> tensor_full<double>(Shape, double, bool);
template TensorT<float> tensor_zeros<float>(Shape, bool);
template TensorT<double> tensor_zeros<double>(Shape, bool);
template TensorT<float> tensor_clone<float>(const TensorT<float>&);
template TensorT<double> tensor_clone<double>(const TensorT<double>&);
template void check_finite<float>(const TensorT<float>&, const char*);
template void check_finite<double>(const TensorT<double>&, const char*);

}  // namespace ctc
