#include "ctc/compare.hpp"

#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ctc/errors.hpp"
#include "ctc/util.hpp"

namespace ctc {

namespace {

struct Cached {
    std::shared_ptr<Model> model;
    double val_acc = 0.0;
    double train_seconds = 0.0;
};

bool known_kind(const std::string& kind) {
    return kind == "concat" || kind == "textcnn" || kind == "bilstm" || kind == "vgg" ||
           kind == "ensemble";
}

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string aligned_table(const std::vector<std::string>& headers,
                          const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths(headers.size());
    for (std::size_t c = 0; c < headers.size(); ++c) widths[c] = headers[c].size();
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    std::ostringstream os;
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) os << "  ";
            if (c == 0)
                os << std::left << std::setw(static_cast<int>(widths[c])) << cells[c];
            else
                os << std::right << std::setw(static_cast<int>(widths[c])) << cells[c];
        }
        os << '\n';
    };
    emit(headers);
    for (const auto& row : rows) emit(row);
    return std::move(os).str();
}

std::string csv_table(const std::vector<std::string>& headers,
                      const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream os;
    for (std::size_t c = 0; c < headers.size(); ++c) os << (c ? "," : "") << headers[c];
    os << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
        os << '\n';
    }
    return std::move(os).str();
}

std::vector<std::string> accuracy_headers(const CompareReport& report) {
    std::vector<std::string> headers{"model"};
    for (auto s : report.seeds) headers.push_back("seed_" + std::to_string(s));
    headers.push_back("mean");
    return headers;
}

std::vector<std::vector<std::string>> accuracy_rows(const CompareReport& report) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : report.rows) {
        std::vector<std::string> cells{row.kind};
        for (double acc : row.seed_accuracy) cells.push_back(fmt4(acc));
        cells.push_back(fmt4(row.mean_accuracy));
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

CompareReport compare_models(const std::vector<Record>& train_records,
                             const std::vector<Record>& test_records, const Vocab& vocab,
                             const LabelTable& labels, const CompareConfig& config) {
    if (config.kinds.empty()) throw std::invalid_argument("compare: no model kinds");
    if (config.seeds.empty()) throw std::invalid_argument("compare: no seeds");
    for (const auto& kind : config.kinds)
        if (!known_kind(kind)) throw data_error("compare: unknown model kind: " + kind);
    if (train_records.empty()) throw data_error("compare: empty training set");
    if (test_records.empty()) throw data_error("compare: empty test set");
    config.train.validate();

    const Extent classes = labels.size();
    // One trained model per distinct (config, seed); the seed rides inside the
    // config json, so the ensemble re-reads members trained for other rows.
    std::map<std::string, Cached> cache;

    auto trained = [&](ModelConfig mc, std::uint64_t seed, const std::vector<Record>& tr,
                       const std::vector<Record>& va) -> Cached& {
        mc.seed = seed;
        const std::string key = config_to_json(mc);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        auto model = std::make_shared<Model>(mc);
        TrainConfig tc = config.train;
        tc.seed = seed;
        const double t0 = monotonic_seconds();
        train(*model, tr, va, vocab, labels, tc);
        Cached entry;
        entry.train_seconds = monotonic_seconds() - t0;
        entry.val_acc = evaluate(*model, va, vocab, labels, tc.seq_cap);
        entry.model = std::move(model);
        return cache.emplace(key, std::move(entry)).first->second;
    };

    CompareReport report;
    report.seeds = config.seeds;
    for (const auto& kind : config.kinds) {
        CompareRow row;
        row.kind = kind;
        bool first_seed = true;
        for (std::uint64_t seed : config.seeds) {
            auto [tr, va] =
                split_stratified(train_records, config.train.val_fraction, derive_seed(seed, "val"));
            double acc = 0.0;
            double t0 = 0.0;
            if (kind == "ensemble") {
                const auto member_configs = ensemble_member_configs(vocab.size(), classes,
                                                                    config.desk);
                static const char* kTags[] = {"textcnn", "textcnn4", "bilstm"};
                std::vector<std::shared_ptr<Model>> members;
                std::vector<double> val_accs;
                for (std::size_t i = 0; i < member_configs.size(); ++i) {
                    Cached& c = trained(member_configs[i], derive_seed(seed, kTags[i]), tr, va);
                    members.push_back(c.model);
                    val_accs.push_back(c.val_acc);
                    row.train_seconds += c.train_seconds;
                }
                const EnsembleSpec spec =
                    make_ensemble(members, normalized_weights(val_accs), config.vote);
                t0 = monotonic_seconds();
                acc = evaluate(spec, test_records, vocab, labels, config.train.seq_cap);
            } else {
                const ModelKind mk = model_kind_from(kind);
                const ModelConfig mc = config.desk ? desk_config(mk, vocab.size(), classes)
                                                   : default_config(mk, vocab.size(), classes);
                Cached& c = trained(mc, derive_seed(seed, kind), tr, va);
                row.train_seconds += c.train_seconds;
                t0 = monotonic_seconds();
                acc = evaluate(*c.model, test_records, vocab, labels, config.train.seq_cap);
            }
            if (first_seed) {
                row.predict_seconds = monotonic_seconds() - t0;
                first_seed = false;
            }
            row.seed_accuracy.push_back(acc);
        }
        double sum = 0.0;
        for (double a : row.seed_accuracy) sum += a;
        row.mean_accuracy = sum / static_cast<double>(row.seed_accuracy.size());
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string compare_accuracy_table(const CompareReport& report) {
    return aligned_table(accuracy_headers(report), accuracy_rows(report));
}

std::string compare_accuracy_csv(const CompareReport& report) {
    return csv_table(accuracy_headers(report), accuracy_rows(report));
}

namespace {

std::vector<std::string> timing_headers() {
    return {"model", "train_seconds", "predict_seconds"};
}

std::vector<std::vector<std::string>> timing_rows(const CompareReport& report) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : report.rows)
        rows.push_back({row.kind, fmt3(row.train_seconds), fmt3(row.predict_seconds)});
    return rows;
}

}  // namespace

std::string compare_timing_table(const CompareReport& report) {
    return aligned_table(timing_headers(), timing_rows(report));
}

std::string compare_timing_csv(const CompareReport& report) {
    return csv_table(timing_headers(), timing_rows(report));
}

}  // namespace ctc
