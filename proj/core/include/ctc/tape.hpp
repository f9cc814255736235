#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ctc/tensor.hpp"

namespace ctc {

// Linear record of differentiable ops in execution order. backward() replays
// the records in reverse, then clears the tape: one recorded forward pass
// funds exactly one backward pass.
template <typename S>
class TapeT {
  public:
    struct Record {
        const char* op;
        TensorT<S> output;
        std::function<void()> backward;  // reads output.grad(), accumulates into inputs
    };

    // Makes this tape the active recording target for the current thread while
    // in scope. Scopes nest; the innermost wins.
    class Scope {
      public:
        explicit Scope(TapeT& tape);
        ~Scope();
        Scope(const Scope&) = delete;
        Scope& operator=(const Scope&) = delete;

      private:
        TapeT* previous_;
    };

    static TapeT* active();

    void record(const char* op, TensorT<S> output, std::function<void()> backward);
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    void clear();

    // Seeds loss.grad with 1, walks records newest-to-oldest, then clears.
    // Throws std::invalid_argument if loss is not scalar or was not recorded
    // on this tape (detached graph).
    void run_backward(TensorT<S>& loss);

  private:
    std::vector<Record> records_;
};

// Runs backward on the tape that recorded `loss`; requires an active tape
// scope matching it.
template <typename S>
void backward(TensorT<S>& loss);

using Tape = TapeT<float>;
using DTape = TapeT<double>;

}  // namespace ctc
