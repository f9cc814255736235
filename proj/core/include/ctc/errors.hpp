#pragma once

#include <stdexcept>
#include <string>

namespace ctc {

// Unreadable/malformed input data, bad checkpoints, vocab mismatches.
// The CLI maps this to exit code 2.
struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Training produced a non-finite loss. CLI exit code 3.
struct divergence_error : std::runtime_error {
    divergence_error(int epoch, int batch, const std::string& msg)
        : std::runtime_error(msg), epoch(epoch), batch(batch) {}
    int epoch;
    int batch;
};

}  // namespace ctc
