#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ctc {

using Extent = std::int64_t;
using Shape = std::vector<Extent>;

Extent shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);
bool same_shape(const Shape& a, const Shape& b);

// When enabled (the default), every op output is checked for NaN/Inf and a
// std::runtime_error is thrown on the first non-finite value. Benchmarks turn
// it off; training keeps it on so divergence is caught at the op that produced
// it rather than epochs later.
void set_finite_guard(bool enabled);
bool finite_guard_enabled();

template <typename S>
struct TensorDataT {
    Shape shape;
    std::vector<S> values;
    std::vector<S> grad;  // same length as values, zero until backward touches it
    bool requires_grad = false;
    const void* tape = nullptr;  // tape that produced this tensor, null for leaves
};

// Shared-ownership handle; copies alias the same storage. Autodiff op results
// hold their inputs alive through recorded closures, so a forward pass can drop
// intermediate handles freely.
template <typename S>
class TensorT {
  public:
    using scalar_type = S;

    TensorT() = default;
    explicit TensorT(std::shared_ptr<TensorDataT<S>> data) : data_(std::move(data)) {}

    bool defined() const { return data_ != nullptr; }
    const Shape& shape() const { return data_->shape; }
    Extent numel() const { return static_cast<Extent>(data_->values.size()); }
    Extent dim(std::size_t axis) const { return data_->shape.at(axis); }
    std::size_t rank() const { return data_->shape.size(); }

    std::vector<S>& values() { return data_->values; }
    const std::vector<S>& values() const { return data_->values; }
    std::vector<S>& grad() { return data_->grad; }
    const std::vector<S>& grad() const { return data_->grad; }

    bool requires_grad() const { return data_->requires_grad; }
    void set_requires_grad(bool flag) { data_->requires_grad = flag; }

    const void* tape() const { return data_->tape; }
    void set_tape(const void* t) { data_->tape = t; }

    // Scalar read; tensor must hold exactly one value.
    S item() const;

    void zero_grad() { std::fill(data_->grad.begin(), data_->grad.end(), S(0)); }

    TensorDataT<S>* get() const { return data_.get(); }
    bool same_storage(const TensorT& other) const { return data_ == other.data_; }

  private:
    std::shared_ptr<TensorDataT<S>> data_;
};

// Validates: rank >= 1 with every extent >= 1, values.size() == product of
// extents, and (while the finite guard is on) all values finite.
template <typename S>
TensorT<S> tensor_create(Shape shape, std::vector<S> values, bool requires_grad = false);

template <typename S>
TensorT<S> tensor_full(Shape shape, S fill, bool requires_grad = false);

template <typename S>
TensorT<S> tensor_zeros(Shape shape, bool requires_grad = false);

// Deep copy of values (grad starts at zero, tape cleared).
template <typename S>
TensorT<S> tensor_clone(const TensorT<S>& src);

template <typename S>
void check_finite(const TensorT<S>& t, const char* op_name);

using Tensor = TensorT<float>;
using DTensor = TensorT<double>;

}  // namespace ctc
