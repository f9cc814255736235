#include "ctc/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "ctc/checkpoint.hpp"
#include "ctc/errors.hpp"
#include "ctc/util.hpp"

namespace ctc {

BenchReport bench_predict(const std::string& checkpoint_path, std::uint64_t vocab_digest,
                          const std::vector<std::vector<int>>& encoded, Extent batch_size) {
    if (batch_size < 1) throw std::invalid_argument("bench: batch_size must be >= 1");

    BenchReport report;
    report.records = encoded.size();
    report.batch_size = batch_size;

    // Batches are sliced before the clock starts; the window holds only the
    // checkpoint load and the forward passes.
    std::vector<std::vector<std::vector<int>>> batches;
    for (Extent lo = 0; lo < report.records; lo += batch_size) {
        const Extent hi = std::min<Extent>(report.records, lo + batch_size);
        batches.emplace_back(encoded.begin() + lo, encoded.begin() + hi);
    }

    const double t0 = monotonic_seconds();
    const Model model = load_checkpoint(checkpoint_path, vocab_digest);
    const double t1 = monotonic_seconds();

    std::size_t sink = 0;  // keeps the prediction loop observable
    for (const auto& batch : batches) {
        const Prediction pred = model.predict(batch);
        for (int label : pred.labels) sink += static_cast<std::size_t>(label) + 1;
    }
    const double t2 = monotonic_seconds();
    if (sink == static_cast<std::size_t>(-1)) throw std::runtime_error("unreachable");

    report.load_seconds = t1 - t0;
    report.predict_seconds = t2 - t1;
    report.total_seconds = t2 - t0;
    report.records_per_second =
        report.records > 0 && report.total_seconds > 0.0
            ? static_cast<double>(report.records) / report.total_seconds
            : 0.0;
    return report;
}

std::string bench_report_text(const BenchReport& report) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "records: %llu\nbatch_size: %llu\nload_seconds: %.4f\n"
                  "predict_seconds: %.4f\ntotal_seconds: %.4f\nrecords_per_second: %.2f\n",
                  static_cast<unsigned long long>(report.records),
                  static_cast<unsigned long long>(report.batch_size), report.load_seconds,
                  report.predict_seconds, report.total_seconds, report.records_per_second);
    return buf;
}

std::string bench_report_csv(const BenchReport& report) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "records,batch_size,load_seconds,predict_seconds,total_seconds,"
                  "records_per_second\n%llu,%llu,%.4f,%.4f,%.4f,%.2f\n",
                  static_cast<unsigned long long>(report.records),
                  static_cast<unsigned long long>(report.batch_size), report.load_seconds,
                  report.predict_seconds, report.total_seconds, report.records_per_second);
    return buf;
}

}  // namespace ctc
