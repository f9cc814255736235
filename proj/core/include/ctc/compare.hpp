#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctc/corpus.hpp"
#include "ctc/models.hpp"
#include "ctc/train.hpp"

namespace ctc {

// Side-by-side benchmark of model kinds on one corpus. "kinds" takes model
// names ("concat", "textcnn", "bilstm", "vgg") plus "ensemble" for the
// weighted soft/hard vote over the stock member mix.
struct CompareConfig {
    std::vector<std::string> kinds = {"textcnn", "bilstm", "vgg", "ensemble", "concat"};
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    TrainConfig train;
    bool desk = true;  // desk-scale model dimensions instead of full-size ones
    VoteMode vote = VoteMode::soft;
};

struct CompareRow {
    std::string kind;
    std::vector<double> seed_accuracy;  // test accuracy, one entry per seed
    double mean_accuracy = 0.0;
    double train_seconds = 0.0;    // wall time spent training this row's models
    double predict_seconds = 0.0;  // one full test-set pass (first seed's model)
};

struct CompareReport {
    std::vector<std::uint64_t> seeds;
    std::vector<CompareRow> rows;  // in CompareConfig::kinds order
};

// Trains kinds x seeds, each on a fresh stratified train/val carve of
// train_records, and scores them on test_records. Trained models are shared
// by configuration, so the ensemble reuses members that already exist as
// standalone rows. Accuracies are deterministic for fixed seeds and config;
// the *_seconds fields are wall-clock and are not.
CompareReport compare_models(const std::vector<Record>& train_records,
                             const std::vector<Record>& test_records, const Vocab& vocab,
                             const LabelTable& labels, const CompareConfig& config);

// Accuracy artifacts carry fixed-precision numbers only and are byte-stable
// across reruns; the timing artifacts are reported separately because wall
// time never is.
std::string compare_accuracy_table(const CompareReport& report);
std::string compare_accuracy_csv(const CompareReport& report);
std::string compare_timing_table(const CompareReport& report);
std::string compare_timing_csv(const CompareReport& report);

}  // namespace ctc
