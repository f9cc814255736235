#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ctc/corpus.hpp"
#include "ctc/models.hpp"

namespace ctc {

enum class OptimizerKind { adam, sgd_momentum };
enum class Precision { f32, f64 };  // width of the optimizer accumulators

OptimizerKind optimizer_kind_from(const std::string& name);  // data_error on unknown names
const char* to_string(OptimizerKind kind);

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::adam;
    double learning_rate = 1e-3;  // >= 0; exactly 0 freezes the parameters
    Extent batch_size = 32;
    Extent max_epochs = 20;
    Extent patience = 5;  // epochs without a validation-accuracy high before stopping
    std::uint64_t seed = 1;
    Precision precision = Precision::f32;
    double momentum = 0.9;      // sgd_momentum only
    double beta1 = 0.9;         // adam
    double beta2 = 0.999;       // adam
    double epsilon = 1e-8;      // adam
    double clip_norm = 5.0;     // global gradient-norm ceiling; <= 0 disables
    Extent seq_cap = 0;         // truncation cap; 0 = longest record per batch
    double val_fraction = 0.15; // used by callers that carve validation data out of train
    double target_train_acc = 0.0;  // stop once epoch train accuracy reaches this; 0 = off

    void validate() const;  // std::invalid_argument on out-of-range settings
};

struct EpochRecord {
    Extent epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double seconds = 0.0;  // wall time; the only nondeterministic field
};

struct History {
    std::vector<EpochRecord> epochs;
    Extent best_epoch = 0;  // epoch whose parameters the model ends with
    double best_val_acc = 0.0;
    bool early_stopped = false;
};

// one line per epoch: {"epoch":..,"train_loss":..,"train_acc":..,"val_acc":..,"seconds":..}
std::string history_to_ndjson(const History& history);

// Mini-batch cross-entropy descent. Per-epoch order is a seed-derived shuffle;
// batches are encoded to the longest record in the batch (never below the
// model minimum, truncated at config.seq_cap when set) on a prefetch thread
// when more than one worker is allowed. Validation accuracy drives early
// stopping; the parameters from the best validation epoch are restored before
// returning. A non-finite loss raises divergence_error with epoch and batch.
// When `metrics` is given, each epoch appends one NDJSON line to it.
History train(Model& model, const std::vector<Record>& train_records,
              const std::vector<Record>& val_records, const Vocab& vocab,
              const LabelTable& labels, const TrainConfig& config,
              std::ostream* metrics = nullptr);

// Adam or SGD-with-momentum over named parameter handles. step() consumes the
// gradients currently stored on the tensors.
class Optimizer {
  public:
    Optimizer(std::vector<Param> params, const TrainConfig& config);

    void zero_grad();
    void step();
    Extent steps() const { return steps_; }

  private:
    struct Slot {
        Tensor tensor;
        std::vector<float> m32, v32;   // f32 accumulators (adam: moment pair; sgd: m = velocity)
        std::vector<double> m64, v64;  // f64 accumulators
    };
    TrainConfig config_;
    std::vector<Slot> slots_;
    Extent steps_ = 0;
};

double grad_global_norm(const std::vector<Param>& params);
// scales every gradient by max_norm/norm when the global norm exceeds the
// ceiling; no-op for max_norm <= 0
void clip_gradients(const std::vector<Param>& params, double max_norm);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

// Accuracy over a labeled record set. All records are encoded to one shared
// cap (longest record, clamped to the model minimum, truncated at seq_cap>0),
// so results are independent of data order and of the sharding across worker
// threads. data_error on empty data.
double evaluate(const Model& model, const std::vector<Record>& records, const Vocab& vocab,
                const LabelTable& labels, Extent seq_cap = 0, Extent batch_size = 64);
double evaluate(const EnsembleSpec& spec, const std::vector<Record>& records, const Vocab& vocab,
                const LabelTable& labels, Extent seq_cap = 0, Extent batch_size = 64);

}  // namespace ctc
