#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctc/tensor.hpp"

namespace ctc {

struct BenchReport {
    Extent records = 0;
    Extent batch_size = 0;
    double load_seconds = 0.0;     // checkpoint open -> model ready
    double predict_seconds = 0.0;  // first batch in -> last prediction out
    double total_seconds = 0.0;    // load + predict (the timed window)
    double records_per_second = 0.0;
};

// Timed prediction protocol: the clock starts when the checkpoint load
// begins and stops after the last prediction; the encoded records must be
// fully resident beforehand, so data preparation never lands in the window.
// Runs single-threaded for comparable timings.
BenchReport bench_predict(const std::string& checkpoint_path, std::uint64_t vocab_digest,
                          const std::vector<std::vector<int>>& encoded, Extent batch_size);

std::string bench_report_text(const BenchReport& report);
std::string bench_report_csv(const BenchReport& report);

}  // namespace ctc
