#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"

#include "ctc/bench.hpp"
#include "ctc/checkpoint.hpp"
#include "ctc/compare.hpp"
#include "ctc/corpus.hpp"
#include "ctc/errors.hpp"
#include "ctc/models.hpp"
#include "ctc/train.hpp"
#include "ctc/util.hpp"

namespace ctc {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- plumbing

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out.good()) throw data_error("write failed for " + path.string());
}

// Settings file: a json object whose keys are the long flag names without the
// leading dashes. Explicit command-line flags always win; unknown keys fail.
class ConfigDoc {
  public:
    ConfigDoc(const CLI::App& cmd, const std::string& path) : cmd_(cmd) {
        recognized_.insert("config");  // the pointer to the file itself
        if (path.empty()) {
            doc_ = json::object();
            return;
        }
        std::ifstream in(path, std::ios::binary);
        if (!in) throw data_error("config file not found: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        try {
            doc_ = json::parse(buf.str());
        } catch (const json::exception& e) {
            throw data_error("config file " + path + ": " + e.what());
        }
        if (!doc_.is_object()) throw data_error("config file " + path + ": not a json object");
    }

    template <typename T>
    void get(const std::string& flag, T& var) {
        const std::string key = flag.substr(2);
        recognized_.insert(key);
        if (!doc_.contains(key) || cmd_.count(flag) > 0) return;
        try {
            var = doc_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw data_error("config key '" + key + "': " + e.what());
        }
    }

    void finish() const {
        for (const auto& item : doc_.items())
            if (!recognized_.count(item.key()))
                throw data_error("config file: unknown key '" + item.key() + "'");
    }

  private:
    const CLI::App& cmd_;
    json doc_;
    std::set<std::string> recognized_;
};

struct Common {
    std::string config;
    std::string out_dir = "run";
};

void add_common(CLI::App* cmd, Common& common) {
    cmd->add_option("--config", common.config,
                    "json settings file (keys = flag names); explicit flags win");
    cmd->add_option("--out-dir", common.out_dir, "directory for artifacts and the run manifest")
        ->capture_default_str();
}

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

fs::path artifact_path(const Common& common, const std::string& option_value,
                       const char* fallback_name) {
    if (!option_value.empty()) return option_value;
    return fs::path(common.out_dir) / fallback_name;
}

// Echoes the resolved settings to the run log and pins them in the manifest.
void start_run(std::ostream& out, const json& resolved) {
    out << "resolved config: " << resolved.dump() << "\n";
}

void finish_run(const Common& common, const char* subcommand, const json& resolved,
                const std::vector<std::string>& artifacts) {
    json manifest;
    manifest["subcommand"] = subcommand;
    manifest["config"] = resolved;
    manifest["artifacts"] = artifacts;
    write_text(fs::path(common.out_dir) / "run_manifest.json", manifest.dump(2) + "\n");
}

std::vector<Record> apply_bucket(std::vector<Record> records, int bucket) {
    if (bucket == 0) return records;
    std::vector<Record> kept;
    kept.reserve(records.size());
    for (auto& r : records)
        if (bucket_keeps(bucket, r.length)) kept.push_back(std::move(r));
    return kept;
}

std::vector<Record> load_filtered(const std::string& path, int bucket, std::ostream& out) {
    LoadReport report = load_corpus(path);
    if (report.malformed > 0)
        out << "skipped " << report.malformed << " malformed line(s) in " << path << "\n";
    std::vector<Record> records = apply_bucket(std::move(report.records), bucket);
    if (records.empty())
        throw data_error("no records left from " + path + " after bucket filter");
    return records;
}

LabelTable load_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot read labels file: " + path);
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) names.push_back(line);
    }
    if (names.empty()) throw data_error("labels file is empty: " + path);
    return LabelTable(std::move(names));
}

std::string labels_text(const LabelTable& labels) {
    std::string text;
    for (const auto& name : labels.names()) {
        text += name;
        text += '\n';
    }
    return text;
}

Extent shared_cap(const std::vector<Record>& records, Extent seq_cap, Extent min_len) {
    Extent longest = 1;
    for (const auto& r : records) longest = std::max(longest, r.length);
    if (seq_cap > 0) longest = std::min(longest, seq_cap);
    return std::max(longest, min_len);
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    for (const auto& item : split_csv(csv)) {
        try {
            std::size_t used = 0;
            seeds.push_back(std::stoull(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad seed '" + item + "' in --seeds");
        }
    }
    if (seeds.empty()) throw std::invalid_argument("--seeds is empty");
    return seeds;
}

// ------------------------------------------------------- training settings

struct TrainOpts {
    std::string optimizer = "adam";
    double learning_rate = 1e-3;
    Extent batch_size = 32;
    Extent max_epochs = 20;
    Extent patience = 5;
    std::string precision = "f32";
    double momentum = 0.9;
    double clip_norm = 5.0;
    Extent seq_cap = 0;
    double val_fraction = 0.15;
};

void add_train_options(CLI::App* cmd, TrainOpts& o) {
    cmd->add_option("--optimizer", o.optimizer, "adam or sgd_momentum")
        ->check(CLI::IsMember({"adam", "sgd_momentum"}))
        ->capture_default_str();
    cmd->add_option("--lr", o.learning_rate, "learning rate; 0 freezes the parameters")
        ->capture_default_str();
    cmd->add_option("--batch-size", o.batch_size, "mini-batch size")->capture_default_str();
    cmd->add_option("--max-epochs", o.max_epochs, "epoch ceiling")->capture_default_str();
    cmd->add_option("--patience", o.patience,
                    "epochs without a validation-accuracy high before stopping")
        ->capture_default_str();
    cmd->add_option("--precision", o.precision, "optimizer accumulator width: f32 or f64")
        ->check(CLI::IsMember({"f32", "f64"}))
        ->capture_default_str();
    cmd->add_option("--momentum", o.momentum, "sgd momentum")->capture_default_str();
    cmd->add_option("--clip-norm", o.clip_norm, "global gradient-norm ceiling; <= 0 disables")
        ->capture_default_str();
    cmd->add_option("--seq-cap", o.seq_cap, "truncate sequences to this many characters; 0 = off")
        ->capture_default_str();
    cmd->add_option("--val-fraction", o.val_fraction,
                    "share of the training records carved off for validation")
        ->capture_default_str();
}

void config_train_options(ConfigDoc& cfg, TrainOpts& o) {
    cfg.get("--optimizer", o.optimizer);
    cfg.get("--lr", o.learning_rate);
    cfg.get("--batch-size", o.batch_size);
    cfg.get("--max-epochs", o.max_epochs);
    cfg.get("--patience", o.patience);
    cfg.get("--precision", o.precision);
    cfg.get("--momentum", o.momentum);
    cfg.get("--clip-norm", o.clip_norm);
    cfg.get("--seq-cap", o.seq_cap);
    cfg.get("--val-fraction", o.val_fraction);
}

TrainConfig to_train_config(const TrainOpts& o, std::uint64_t seed) {
    TrainConfig tc;
    tc.optimizer = optimizer_kind_from(o.optimizer);
    tc.learning_rate = o.learning_rate;
    tc.batch_size = o.batch_size;
    tc.max_epochs = o.max_epochs;
    tc.patience = o.patience;
    tc.seed = seed;
    tc.precision = o.precision == "f64" ? Precision::f64 : Precision::f32;
    tc.momentum = o.momentum;
    tc.clip_norm = o.clip_norm;
    tc.seq_cap = o.seq_cap;
    tc.val_fraction = o.val_fraction;
    tc.validate();
    return tc;
}

json train_opts_json(const TrainOpts& o) {
    json j;
    j["optimizer"] = o.optimizer;
    j["lr"] = o.learning_rate;
    j["batch-size"] = o.batch_size;
    j["max-epochs"] = o.max_epochs;
    j["patience"] = o.patience;
    j["precision"] = o.precision;
    j["momentum"] = o.momentum;
    j["clip-norm"] = o.clip_norm;
    j["seq-cap"] = o.seq_cap;
    j["val-fraction"] = o.val_fraction;
    return j;
}

// ------------------------------------------------------------ subcommands

struct SynthOpts {
    Common common;
    Extent classes = 5;
    Extent per_class = 500;
    Extent len_lo = 80;
    Extent len_hi = 120;
    double order_fraction = 0.5;
    bool both_cues = false;
    std::uint64_t seed = 1;
    std::string out;
};

void run_synth(const CLI::App& cmd, SynthOpts& o, std::ostream& out) {
    ConfigDoc cfg(cmd, o.common.config);
    cfg.get("--out-dir", o.common.out_dir);
    cfg.get("--classes", o.classes);
    cfg.get("--per-class", o.per_class);
    cfg.get("--len-lo", o.len_lo);
    cfg.get("--len-hi", o.len_hi);
    cfg.get("--order-fraction", o.order_fraction);
    cfg.get("--both-cues", o.both_cues);
    cfg.get("--seed", o.seed);
    cfg.get("--out", o.out);
    cfg.finish();

    const fs::path path = artifact_path(o.common, o.out, "synth.tsv");
    json resolved{{"classes", o.classes},        {"per-class", o.per_class},
                  {"len-lo", o.len_lo},          {"len-hi", o.len_hi},
                  {"order-fraction", o.order_fraction}, {"both-cues", o.both_cues},
                  {"seed", o.seed},              {"out", path.string()},
                  {"out-dir", o.common.out_dir}};
    start_run(out, resolved);

    SynthConfig sc;
    sc.classes = o.classes;
    sc.per_class = o.per_class;
    sc.len_lo = o.len_lo;
    sc.len_hi = o.len_hi;
    sc.order_fraction = o.order_fraction;
    sc.both_cues = o.both_cues;
    sc.seed = o.seed;
    const std::vector<Record> records = make_synthetic(sc);
    ensure_parent(path);
    save_corpus(records, path.string());
    out << "wrote " << records.size() << " records to " << path.string() << "\n";
    finish_run(o.common, "synth", resolved, {path.string()});
}

struct VocabOpts {
    Common common;
    std::string input;
    Extent min_freq = 1;
    std::string out;
};

void run_vocab(const CLI::App& cmd, VocabOpts& o, std::ostream& out) {
    ConfigDoc cfg(cmd, o.common.config);
    cfg.get("--out-dir", o.common.out_dir);
    cfg.get("--input", o.input);
    cfg.get("--min-freq", o.min_freq);
    cfg.get("--out", o.out);
    cfg.finish();
    if (o.input.empty()) throw std::invalid_argument("--input is required");

    const fs::path path = artifact_path(o.common, o.out, "vocab.txt");
    json resolved{{"input", o.input},
                  {"min-freq", o.min_freq},
                  {"out", path.string()},
                  {"out-dir", o.common.out_dir}};
    start_run(out, resolved);

    const std::vector<Record> records = load_filtered(o.input, 0, out);
    const Vocab vocab = Vocab::build(records, o.min_freq);
    ensure_parent(path);
    vocab.save(path.string());
    out << "vocab size " << vocab.size() << ", digest " << to_hex(vocab.digest()) << ", wrote "
        << path.string() << "\n";
    finish_run(o.common, "vocab", resolved, {path.string()});
}

struct PrepareOpts {
    Common common;
    std::string input;
    int bucket = 1;
    double test_fraction = 0.2;
    std::uint64_t seed = 1;
    Extent train_cap = 0;
};

void run_prepare(const CLI::App& cmd, PrepareOpts& o, std::ostream& out) {
    ConfigDoc cfg(cmd, o.common.config);
    cfg.get("--out-dir", o.common.out_dir);
    cfg.get("--input", o.input);
    cfg.get("--bucket", o.bucket);
    cfg.get("--test-fraction", o.test_fraction);
    cfg.get("--seed", o.seed);
    cfg.get("--train-cap", o.train_cap);
    cfg.finish();
    if (o.input.empty()) throw std::invalid_argument("--input is required");
    if (o.bucket < 0 || o.bucket > 3) throw std::invalid_argument("--bucket must be 0..3");

    json resolved{{"input", o.input},   {"bucket", o.bucket},
                  {"test-fraction", o.test_fraction}, {"seed", o.seed},
                  {"train-cap", o.train_cap},         {"out-dir", o.common.out_dir}};
    start_run(out, resolved);

    LoadReport report = load_corpus(o.input);
    if (report.malformed > 0)
        out << "skipped " << report.malformed << " malformed line(s) in " << o.input << "\n";
    const BucketReport buckets = filter_and_bucket(report.records);
    const fs::path manifest_path = fs::path(o.common.out_dir) / "bucket_manifest.txt";
    write_text(manifest_path, bucket_manifest(buckets));

    const std::vector<Record> chosen = apply_bucket(std::move(report.records), o.bucket);
    if (chosen.empty()) throw data_error("no records in bucket " + std::to_string(o.bucket));
    auto [train_set, test_set] =
        split_stratified(chosen, o.test_fraction, derive_seed(o.seed, "split"), o.train_cap);
    const fs::path train_path = fs::path(o.common.out_dir) / "train.tsv";
    const fs::path test_path = fs::path(o.common.out_dir) / "test.tsv";
    ensure_parent(train_path);
    save_corpus(train_set, train_path.string());
    save_corpus(test_set, test_path.string());
    out << "bucket " << o.bucket << ": " << chosen.size() << " records -> "
        << train_set.size() << " train, " << test_set.size() << " test\n";
    finish_run(o.common, "prepare", resolved,
               {train_path.string(), test_path.string(), manifest_path.string()});
}

struct TrainCmdOpts {
    Common common;
    std::string input;
    std::string val_input;
    std::string vocab;
    std::string kind = "concat";
    bool desk = false;
    int bucket = 0;
    std::uint64_t seed = 1;
    TrainOpts train;
    std::string checkpoint_out;
    std::string metrics_out;
};

void run_train(const CLI::App& cmd, TrainCmdOpts& o, std::ostream& out) {
    ConfigDoc cfg(cmd, o.common.config);
    cfg.get("--out-dir", o.common.out_dir);
    cfg.get("--input", o.input);
    cfg.get("--val-input", o.val_input);
    cfg.get("--vocab", o.vocab);
    cfg.get("--kind", o.kind);
    cfg.get("--desk", o.desk);
    cfg.get("--bucket", o.bucket);
    cfg.get("--seed", o.seed);
    config_train_options(cfg, o.train);
    cfg.get("--checkpoint-out", o.checkpoint_out);
    cfg.get("--metrics-out", o.metrics_out);
    cfg.finish();
    if (o.input.empty()) throw std::invalid_argument("--input is required");
    if (o.vocab.empty()) throw std::invalid_argument("--vocab is required");
    if (o.bucket < 0 || o.bucket > 3) throw std::invalid_argument("--bucket must be 0..3");

    const fs::path ckpt_path = artifact_path(o.common, o.checkpoint_out, "model.ckpt");
    const fs::path metrics_path = artifact_path(o.common, o.metrics_out, "metrics.ndjson");
    const fs::path labels_path = fs::path(o.common.out_dir) / "labels.txt";

    json resolved = train_opts_json(o.train);
    resolved["input"] = o.input;
    resolved["val-input"] = o.val_input;
    resolved["vocab"] = o.vocab;
    resolved["kind"] = o.kind;
    resolved["desk"] = o.desk;
    resolved["bucket"] = o.bucket;
    resolved["seed"] = o.seed;
    resolved["checkpoint-out"] = ckpt_path.string();
    resolved["metrics-out"] = metrics_path.string();
    resolved["out-dir"] = o.common.out_dir;
    start_run(out, resolved);

    const Vocab vocab = Vocab::load(o.vocab);
    std::vector<Record> records = load_filtered(o.input, o.bucket, out);
    const LabelTable labels = LabelTable::build(records);

    std::vector<Record> train_set, val_set;
    if (o.val_input.empty()) {
        const TrainOpts& t = o.train;
        std::tie(train_set, val_set) =
            split_stratified(records, t.val_fraction, derive_seed(o.seed, "val"));
    } else {
        train_set = std::move(records);
        val_set = load_filtered(o.val_input, o.bucket, out);
    }

    ModelConfig mc = o.desk ? desk_config(model_kind_from(o.kind), vocab.size(), labels.size())
                            : default_config(model_kind_from(o.kind), vocab.size(), labels.size());
    mc.seed = o.seed;
    Model model(mc);
    out << "model " << o.kind << ": " << model.param_count() << " parameters, training on "
        << train_set.size() << " records (" << val_set.size() << " validation)\n";

    fs::create_directories(o.common.out_dir);
    std::ofstream metrics(metrics_path, std::ios::binary | std::ios::trunc);
    if (!metrics) throw data_error("cannot write " + metrics_path.string());
    const History history =
        train(model, train_set, val_set, vocab, labels, to_train_config(o.train, o.seed),
              &metrics);

    ensure_parent(ckpt_path);
    save_checkpoint(model, vocab.digest(), ckpt_path.string());
    write_text(labels_path, labels_text(labels));
    char line[128];
    std::snprintf(line, sizeof(line), "best val_acc %.4f at epoch %llu (%zu epochs run%s)\n",
                  history.best_val_acc, static_cast<unsigned long long>(history.best_epoch),
                  history.epochs.size(), history.early_stopped ? ", early stop" : "");
    out << line;
    out << "checkpoint: " << ckpt_path.string() << "\n";
    finish_run(o.common, "train", resolved,
               {ckpt_path.string(), metrics_path.string(), labels_path.string()});
}

struct EvalOpts {
    Common common;
    std::string input;
    std::string vocab;
    std::string checkpoint;
    std::string labels;
    int bucket = 0;
    Extent seq_cap = 0;
    Extent batch_size = 64;
    std::string out_file;
};

void run_eval(const CLI::App& cmd, EvalOpts& o, std::ostream& out) {
    ConfigDoc cfg(cmd, o.common.config);
    cfg.get("--out-dir", o.common.out_dir);
    cfg.get("--input", o.input);
    cfg.get("--vocab", o.vocab);
    cfg.get("--checkpoint", o.checkpoint);
    cfg.get("--labels", o.labels);
    cfg.get("--bucket", o.bucket);
    cfg.get("--seq-cap", o.seq_cap);
    cfg.get("--batch-size", o.batch_size);
    cfg.get("--out", o.out_file);
    cfg.finish();
    for (const auto& [flag, value] :
         {std::pair{"--input", o.input}, {"--vocab", o.vocab}, {"--checkpoint", o.checkpoint},
          {"--labels", o.labels}})
        if (value.empty()) throw std::invalid_argument(std::string(flag) + " is required");
    if (o.bucket < 0 || o.bucket > 3) throw std::invalid_argument("--bucket must be 0..3");

    const fs::path out_path = artifact_path(o.common, o.out_file, "eval.json");
    json resolved{{"input", o.input},     {"vocab", o.vocab},
                  {"checkpoint", o.checkpoint}, {"labels", o.labels},
                  {"bucket", o.bucket},   {"seq-cap", o.seq_cap},
                  {"batch-size", o.batch_size}, {"out", out_path.string()},
                  {"out-dir", o.common.out_dir}};
    start_run(out, resolved);

    const Vocab vocab = Vocab::load(o.vocab);
    const LabelTable labels = load_labels(o.labels);
    const Model model = load_checkpoint(o.checkpoint, vocab.digest());
    if (labels.size() != model.config().classes)
        throw data_error("labels file lists " + std::to_string(labels.size()) +
                         " classes, checkpoint expects " +
                         std::to_string(model.config().classes));
    const std::vector<Record> records = load_filtered(o.input, o.bucket, out);
    const double acc = evaluate(model, records, vocab, labels, o.seq_cap, o.batch_size);

    char line[64];
    std::snprintf(line, sizeof(line), "accuracy: %.4f\n", acc);
    out << line << "records: " << records.size() << "\n";
    json result{{"accuracy", acc}, {"records", records.size()}};
    write_text(out_path, result.dump(2) + "\n");
    finish_run(o.common, "eval", resolved, {out_path.string()});
}

struct PredictOpts {
    Common common;
    std::string input;
    std::string vocab;
    std::string checkpoint;
    std::string labels;
    int bucket = 0;
    Extent seq_cap = 0;
    Extent batch_size = 64;
    std::string out_file;
};

void run_predict(const CLI::App& cmd, PredictOpts& o, std::ostream& out) {
    ConfigDoc cfg(cmd, o.common.config);
    cfg.get("--out-dir", o.common.out_dir);
    cfg.get("--input", o.input);
    cfg.get("--vocab", o.vocab);
    cfg.get("--checkpoint", o.checkpoint);
    cfg.get("--labels", o.labels);
    cfg.get("--bucket", o.bucket);
    cfg.get("--seq-cap", o.seq_cap);
    cfg.get("--batch-size", o.batch_size);
    cfg.get("--out", o.out_file);
    cfg.finish();
    for (const auto& [flag, value] :
         {std::pair{"--input", o.input}, {"--vocab", o.vocab}, {"--checkpoint", o.checkpoint},
          {"--labels", o.labels}})
        if (value.empty()) throw std::invalid_argument(std::string(flag) + " is required");
    if (o.bucket < 0 || o.bucket > 3) throw std::invalid_argument("--bucket must be 0..3");
    if (o.batch_size < 1) throw std::invalid_argument("--batch-size must be >= 1");

    const fs::path out_path = artifact_path(o.common, o.out_file, "predictions.tsv");
    json resolved{{"input", o.input},     {"vocab", o.vocab},
                  {"checkpoint", o.checkpoint}, {"labels", o.labels},
                  {"bucket", o.bucket},   {"seq-cap", o.seq_cap},
                  {"batch-size", o.batch_size}, {"out", out_path.string()},
                  {"out-dir", o.common.out_dir}};
    start_run(out, resolved);

    const Vocab vocab = Vocab::load(o.vocab);
    const LabelTable labels = load_labels(o.labels);
    const Model model = load_checkpoint(o.checkpoint, vocab.digest());
    if (labels.size() != model.config().classes)
        throw data_error("labels file lists " + std::to_string(labels.size()) +
                         " classes, checkpoint expects " +
                         std::to_string(model.config().classes));
    const std::vector<Record> records = load_filtered(o.input, o.bucket, out);
    const Extent cap = shared_cap(records, o.seq_cap, model.min_seq_len());

    std::string lines;
    const Extent n = records.size();
    for (Extent lo = 0; lo < n; lo += o.batch_size) {
        const Extent hi = std::min(n, lo + o.batch_size);
        std::vector<std::vector<int>> ids;
        ids.reserve(hi - lo);
        for (Extent i = lo; i < hi; ++i)
            ids.push_back(encode_text(records[i].text, vocab, cap));
        const Prediction pred = model.predict(ids);
        const auto& probs = pred.probs.values();
        const Extent classes = pred.probs.dim(1);
        for (std::size_t r = 0; r < pred.labels.size(); ++r) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "\t%.6f\n",
                          probs[r * classes + static_cast<std::size_t>(pred.labels[r])]);
            lines += labels.name(pred.labels[r]);
            lines += buf;
        }
    }
    write_text(out_path, lines);
    out << "wrote " << n << " predictions to " << out_path.string() << "\n";
    finish_run(o.common, "predict", resolved, {out_path.string()});
}

struct BenchOpts {
    Common common;
    std::string input;
    std::string vocab;
    std::string checkpoint;
    int bucket = 0;
    Extent seq_cap = 0;
    Extent batch_size = 64;
};

void run_bench(const CLI::App& cmd, BenchOpts& o, std::ostream& out) {
    ConfigDoc cfg(cmd, o.common.config);
    cfg.get("--out-dir", o.common.out_dir);
    cfg.get("--input", o.input);
    cfg.get("--vocab", o.vocab);
    cfg.get("--checkpoint", o.checkpoint);
    cfg.get("--bucket", o.bucket);
    cfg.get("--seq-cap", o.seq_cap);
    cfg.get("--batch-size", o.batch_size);
    cfg.finish();
    for (const auto& [flag, value] : {std::pair{"--input", o.input}, {"--vocab", o.vocab},
                                      {"--checkpoint", o.checkpoint}})
        if (value.empty()) throw std::invalid_argument(std::string(flag) + " is required");
    if (o.bucket < 0 || o.bucket > 3) throw std::invalid_argument("--bucket must be 0..3");

    json resolved{{"input", o.input},   {"vocab", o.vocab},
                  {"checkpoint", o.checkpoint}, {"bucket", o.bucket},
                  {"seq-cap", o.seq_cap},       {"batch-size", o.batch_size},
                  {"out-dir", o.common.out_dir}};
    start_run(out, resolved);

    const Vocab vocab = Vocab::load(o.vocab);
    const CheckpointMeta meta = read_checkpoint_meta(o.checkpoint);
    const ModelConfig mc = config_from_json(meta.model_config_json);
    const std::vector<Record> records = load_filtered(o.input, o.bucket, out);
    const Extent cap = shared_cap(records, o.seq_cap, model_min_seq_len(mc));

    // everything encoded up front: the timed window holds load + predict only
    std::vector<std::vector<int>> encoded;
    encoded.reserve(records.size());
    for (const auto& r : records) encoded.push_back(encode_text(r.text, vocab, cap));

    const BenchReport report =
        bench_predict(o.checkpoint, vocab.digest(), encoded, o.batch_size);
    out << bench_report_text(report);
    const fs::path text_path = fs::path(o.common.out_dir) / "bench.txt";
    const fs::path csv_path = fs::path(o.common.out_dir) / "bench.csv";
    write_text(text_path, bench_report_text(report));
    write_text(csv_path, bench_report_csv(report));
    finish_run(o.common, "bench", resolved, {text_path.string(), csv_path.string()});
}

struct CompareOpts {
    Common common;
    std::string input;
    std::string vocab;
    std::string kinds = "textcnn,bilstm,vgg,ensemble,concat";
    std::string seeds = "1,2,3";
    int bucket = 0;
    double test_fraction = 0.2;
    std::uint64_t seed = 1;
    bool desk = false;
    std::string vote = "soft";
    TrainOpts train;
};

void run_compare(const CLI::App& cmd, CompareOpts& o, std::ostream& out) {
    ConfigDoc cfg(cmd, o.common.config);
    cfg.get("--out-dir", o.common.out_dir);
    cfg.get("--input", o.input);
    cfg.get("--vocab", o.vocab);
    cfg.get("--kinds", o.kinds);
    cfg.get("--seeds", o.seeds);
    cfg.get("--bucket", o.bucket);
    cfg.get("--test-fraction", o.test_fraction);
    cfg.get("--seed", o.seed);
    cfg.get("--desk", o.desk);
    cfg.get("--vote", o.vote);
    config_train_options(cfg, o.train);
    cfg.finish();
    if (o.input.empty()) throw std::invalid_argument("--input is required");
    if (o.bucket < 0 || o.bucket > 3) throw std::invalid_argument("--bucket must be 0..3");
    const std::vector<std::string> kinds = split_csv(o.kinds);
    for (const auto& kind : kinds)
        if (kind != "concat" && kind != "textcnn" && kind != "bilstm" && kind != "vgg" &&
            kind != "ensemble")
            throw std::invalid_argument("unknown kind '" + kind + "' in --kinds");

    json resolved = train_opts_json(o.train);
    resolved["input"] = o.input;
    resolved["vocab"] = o.vocab;
    resolved["kinds"] = o.kinds;
    resolved["seeds"] = o.seeds;
    resolved["bucket"] = o.bucket;
    resolved["test-fraction"] = o.test_fraction;
    resolved["seed"] = o.seed;
    resolved["desk"] = o.desk;
    resolved["vote"] = o.vote;
    resolved["out-dir"] = o.common.out_dir;
    start_run(out, resolved);

    const std::vector<Record> records = load_filtered(o.input, o.bucket, out);
    auto [train_set, test_set] =
        split_stratified(records, o.test_fraction, derive_seed(o.seed, "test"));
    const Vocab vocab = o.vocab.empty() ? Vocab::build(train_set, 1) : Vocab::load(o.vocab);
    const LabelTable labels = LabelTable::build(records);

    CompareConfig cc;
    cc.kinds = kinds;
    cc.seeds = parse_seeds(o.seeds);
    cc.train = to_train_config(o.train, o.seed);
    cc.desk = o.desk;
    cc.vote = vote_mode_from(o.vote);
    const CompareReport report = compare_models(train_set, test_set, vocab, labels, cc);

    const std::string acc_table = compare_accuracy_table(report);
    const std::string timing_table = compare_timing_table(report);
    out << acc_table << "\n" << timing_table;
    const fs::path acc_txt = fs::path(o.common.out_dir) / "accuracy_table.txt";
    const fs::path acc_csv = fs::path(o.common.out_dir) / "accuracy.csv";
    const fs::path time_txt = fs::path(o.common.out_dir) / "timing_table.txt";
    const fs::path time_csv = fs::path(o.common.out_dir) / "timing.csv";
    write_text(acc_txt, acc_table);
    write_text(acc_csv, compare_accuracy_csv(report));
    write_text(time_txt, timing_table);
    write_text(time_csv, compare_timing_csv(report));
    finish_run(o.common, "compare", resolved,
               {acc_txt.string(), acc_csv.string(), time_txt.string(), time_csv.string()});
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{
        "character-level text classification: corpus prep, training, evaluation, "
        "benchmarks. CONCAT_TEXTCLASS_THREADS caps worker threads."};
    app.require_subcommand(1);

    SynthOpts synth;
    auto* synth_cmd = app.add_subcommand("synth", "emit a synthetic labeled corpus");
    add_common(synth_cmd, synth.common);
    synth_cmd->add_option("--classes", synth.classes, "number of classes")->capture_default_str();
    synth_cmd->add_option("--per-class", synth.per_class, "records per class")
        ->capture_default_str();
    synth_cmd->add_option("--len-lo", synth.len_lo, "shortest record length")
        ->capture_default_str();
    synth_cmd->add_option("--len-hi", synth.len_hi, "longest record length")
        ->capture_default_str();
    synth_cmd
        ->add_option("--order-fraction", synth.order_fraction,
                     "share of records carrying the marker-order cue")
        ->capture_default_str();
    synth_cmd->add_flag("--both-cues", synth.both_cues, "plant both signal families per record");
    synth_cmd->add_option("--seed", synth.seed, "generator seed")->capture_default_str();
    synth_cmd->add_option("--out", synth.out, "output corpus path (default: <out-dir>/synth.tsv)");

    VocabOpts vocab;
    auto* vocab_cmd = app.add_subcommand("vocab", "build a character vocabulary file");
    add_common(vocab_cmd, vocab.common);
    vocab_cmd->add_option("--input", vocab.input, "corpus file (label<TAB>text lines)");
    vocab_cmd->add_option("--min-freq", vocab.min_freq, "drop characters seen fewer times")
        ->capture_default_str();
    vocab_cmd->add_option("--out", vocab.out, "vocab file path (default: <out-dir>/vocab.txt)");

    PrepareOpts prepare;
    auto* prepare_cmd =
        app.add_subcommand("prepare", "length-filter, bucket, and split a corpus");
    add_common(prepare_cmd, prepare.common);
    prepare_cmd->add_option("--input", prepare.input, "corpus file");
    prepare_cmd
        ->add_option("--bucket", prepare.bucket,
                     "1 = kept 10..5000, 2 = short <=500, 3 = long >500, 0 = no filter")
        ->check(CLI::Range(0, 3))
        ->capture_default_str();
    prepare_cmd->add_option("--test-fraction", prepare.test_fraction, "test share per class")
        ->capture_default_str();
    prepare_cmd->add_option("--seed", prepare.seed, "split seed")->capture_default_str();
    prepare_cmd
        ->add_option("--train-cap", prepare.train_cap, "per-class training record cap; 0 = off")
        ->capture_default_str();

    TrainCmdOpts traincmd;
    auto* train_cmd = app.add_subcommand("train", "train one model kind and write a checkpoint");
    add_common(train_cmd, traincmd.common);
    train_cmd->add_option("--input", traincmd.input, "training corpus file");
    train_cmd->add_option("--val-input", traincmd.val_input,
                          "validation corpus; omitted = carve --val-fraction from --input");
    train_cmd->add_option("--vocab", traincmd.vocab, "vocab file from the vocab subcommand");
    train_cmd->add_option("--kind", traincmd.kind, "model kind")
        ->check(CLI::IsMember({"concat", "textcnn", "bilstm", "vgg"}))
        ->capture_default_str();
    train_cmd->add_flag("--desk", traincmd.desk, "desk-scale dimensions instead of full size");
    train_cmd->add_option("--bucket", traincmd.bucket, "length bucket filter; 0 = none")
        ->check(CLI::Range(0, 3))
        ->capture_default_str();
    train_cmd->add_option("--seed", traincmd.seed, "master seed (init, shuffle, splits)")
        ->capture_default_str();
    add_train_options(train_cmd, traincmd.train);
    train_cmd->add_option("--checkpoint-out", traincmd.checkpoint_out,
                          "checkpoint path (default: <out-dir>/model.ckpt)");
    train_cmd->add_option("--metrics-out", traincmd.metrics_out,
                          "ndjson epoch log (default: <out-dir>/metrics.ndjson)");

    EvalOpts evalo;
    auto* eval_cmd = app.add_subcommand("eval", "accuracy of a checkpoint on a corpus");
    add_common(eval_cmd, evalo.common);
    eval_cmd->add_option("--input", evalo.input, "corpus file");
    eval_cmd->add_option("--vocab", evalo.vocab, "vocab file");
    eval_cmd->add_option("--checkpoint", evalo.checkpoint, "checkpoint file");
    eval_cmd->add_option("--labels", evalo.labels, "labels file written by train");
    eval_cmd->add_option("--bucket", evalo.bucket, "length bucket filter; 0 = none")
        ->check(CLI::Range(0, 3))
        ->capture_default_str();
    eval_cmd->add_option("--seq-cap", evalo.seq_cap, "sequence truncation cap; 0 = off")
        ->capture_default_str();
    eval_cmd->add_option("--batch-size", evalo.batch_size, "prediction batch size")
        ->capture_default_str();
    eval_cmd->add_option("--out", evalo.out_file, "result json (default: <out-dir>/eval.json)");

    PredictOpts predict;
    auto* predict_cmd =
        app.add_subcommand("predict", "label a corpus file as TSV label<TAB>confidence");
    add_common(predict_cmd, predict.common);
    predict_cmd->add_option("--input", predict.input, "corpus file");
    predict_cmd->add_option("--vocab", predict.vocab, "vocab file");
    predict_cmd->add_option("--checkpoint", predict.checkpoint, "checkpoint file");
    predict_cmd->add_option("--labels", predict.labels, "labels file written by train");
    predict_cmd->add_option("--bucket", predict.bucket, "length bucket filter; 0 = none")
        ->check(CLI::Range(0, 3))
        ->capture_default_str();
    predict_cmd->add_option("--seq-cap", predict.seq_cap, "sequence truncation cap; 0 = off")
        ->capture_default_str();
    predict_cmd->add_option("--batch-size", predict.batch_size, "prediction batch size")
        ->capture_default_str();
    predict_cmd->add_option("--out", predict.out_file,
                            "predictions path (default: <out-dir>/predictions.tsv)");

    BenchOpts bench;
    auto* bench_cmd = app.add_subcommand(
        "bench", "timed checkpoint-load + predict pass over a pre-encoded corpus");
    add_common(bench_cmd, bench.common);
    bench_cmd->add_option("--input", bench.input, "corpus file");
    bench_cmd->add_option("--vocab", bench.vocab, "vocab file");
    bench_cmd->add_option("--checkpoint", bench.checkpoint, "checkpoint file");
    bench_cmd->add_option("--bucket", bench.bucket, "length bucket filter; 0 = none")
        ->check(CLI::Range(0, 3))
        ->capture_default_str();
    bench_cmd->add_option("--seq-cap", bench.seq_cap, "sequence truncation cap; 0 = off")
        ->capture_default_str();
    bench_cmd->add_option("--batch-size", bench.batch_size, "prediction batch size")
        ->capture_default_str();

    CompareOpts compare;
    auto* compare_cmd =
        app.add_subcommand("compare", "train kinds x seeds and tabulate test accuracy");
    add_common(compare_cmd, compare.common);
    compare_cmd->add_option("--input", compare.input, "corpus file (split internally)");
    compare_cmd->add_option("--vocab", compare.vocab,
                            "vocab file; omitted = build from the train split");
    compare_cmd->add_option("--kinds", compare.kinds,
                            "comma list from concat,textcnn,bilstm,vgg,ensemble")
        ->capture_default_str();
    compare_cmd->add_option("--seeds", compare.seeds, "comma list of seeds")
        ->capture_default_str();
    compare_cmd->add_option("--bucket", compare.bucket, "length bucket filter; 0 = none")
        ->check(CLI::Range(0, 3))
        ->capture_default_str();
    compare_cmd->add_option("--test-fraction", compare.test_fraction, "test share per class")
        ->capture_default_str();
    compare_cmd->add_option("--seed", compare.seed, "split seed")->capture_default_str();
    compare_cmd->add_flag("--desk", compare.desk, "desk-scale dimensions instead of full size");
    compare_cmd->add_option("--vote", compare.vote, "ensemble vote: soft or hard")
        ->check(CLI::IsMember({"soft", "hard"}))
        ->capture_default_str();
    add_train_options(compare_cmd, compare.train);

    synth_cmd->callback([&] { run_synth(*synth_cmd, synth, out); });
    vocab_cmd->callback([&] { run_vocab(*vocab_cmd, vocab, out); });
    prepare_cmd->callback([&] { run_prepare(*prepare_cmd, prepare, out); });
    train_cmd->callback([&] { run_train(*train_cmd, traincmd, out); });
    eval_cmd->callback([&] { run_eval(*eval_cmd, evalo, out); });
    predict_cmd->callback([&] { run_predict(*predict_cmd, predict, out); });
    bench_cmd->callback([&] { run_bench(*bench_cmd, bench, out); });
    compare_cmd->callback([&] { run_compare(*compare_cmd, compare, out); });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    } catch (const divergence_error& e) {
        err << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const data_error& e) {
        err << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace ctc
