#include "ctc/tape.hpp"

#include <stdexcept>

namespace ctc {

namespace {
template <typename S>
TapeT<S>*& active_slot() {
    thread_local TapeT<S>* slot = nullptr;
    return slot;
}
}  // namespace

template <typename S>
TapeT<S>::Scope::Scope(TapeT& tape) {
    previous_ = active_slot<S>();
    active_slot<S>() = &tape;
}

template <typename S>
TapeT<S>::Scope::~Scope() {
    active_slot<S>() = previous_;
}

template <typename S>
TapeT<S>* TapeT<S>::active() {
    return active_slot<S>();
}

template <typename S>
void TapeT<S>::record(const char* op, TensorT<S> output, std::function<void()> backward) {
    output.set_tape(this);
    records_.push_back(Record{op, std::move(output), std::move(backward)});
}

template <typename S>
void TapeT<S>::clear() {
    records_.clear();
}

template <typename S>
void TapeT<S>::run_backward(TensorT<S>& loss) {
    if (loss.numel() != 1) {
        throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                    shape_to_string(loss.shape()));
    }
    if (loss.tape() != this) {
        throw std::invalid_argument(
            "backward: loss was not recorded on this tape (detached graph)");
    }
    if (records_.empty()) {
        throw std::invalid_argument("backward: tape already consumed");
    }
    loss.grad()[0] = S(1);
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
        if (it->backward) it->backward();
    }
    clear();
}

template <typename S>
void backward(TensorT<S>& loss) {
    TapeT<S>* tape = TapeT<S>::active();
    if (!tape) {
        throw std::invalid_argument("backward: no active tape (detached graph)");
    }
    tape->run_backward(loss);
}

template class TapeT<float>;
template class TapeT<double>;
template void backward<float>(TensorT<float>&);
template void backward<double>(TensorT<double>&);

}  // namespace ctc
