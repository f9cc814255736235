#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctc/layers.hpp"
#include "ctc/tensor.hpp"

namespace ctc {

enum class ModelKind { concat, textcnn, bilstm, vgg };
enum class SubnetKind { textcnn, lstm, bilstm };

const char* to_string(ModelKind kind);
const char* to_string(SubnetKind kind);
ModelKind model_kind_from(const std::string& name);    // data_error on unknown names
SubnetKind subnet_kind_from(const std::string& name);  // data_error on unknown names

// One parallel branch of a concatenation model. A textcnn branch stacks
// `blocks` filter banks of one width with no pooling in between: the first
// correlation is valid, later ones keep the time extent, and a global max
// pool reduces to one feature per filter. Recurrent branches contribute final
// hidden states: lstm -> H features, bilstm -> 2H (both directions).
struct SubnetConfig {
    SubnetKind kind = SubnetKind::textcnn;
    Extent blocks = 2;        // textcnn
    Extent kernel_width = 3;  // textcnn
    Extent filters = 128;     // textcnn
    Extent hidden = 250;      // lstm / bilstm
};

struct ModelConfig {
    ModelKind kind = ModelKind::concat;
    Extent vocab_size = 0;
    Extent embed_dim = 128;
    Extent classes = 25;
    std::vector<Extent> head_hidden;    // relu dense widths between features and the output layer
    std::vector<SubnetConfig> subnets;  // concat branches; one entry for textcnn/bilstm baselines
    std::vector<Extent> vgg_channels;   // vgg conv plan (width-3 blocks, pool after every 2nd)
    bool strict_paper = false;  // require the 3 textcnn + 1 lstm + 1 bilstm mix and 25 classes
    std::uint64_t seed = 1;

    void validate() const;  // std::invalid_argument on inconsistent combinations
};

// Canonical configurations at published dimensions.
ModelConfig concat_config(Extent vocab_size, Extent classes = 25);
ModelConfig textcnn_config(Extent vocab_size, Extent classes = 25);
ModelConfig bilstm_config(Extent vocab_size, Extent classes = 25);
ModelConfig vgg_config(Extent vocab_size, Extent classes = 25);
ModelConfig default_config(ModelKind kind, Extent vocab_size, Extent classes = 25);
// Same layouts at scaled-down dimensions for fast single-core experiments.
ModelConfig desk_config(ModelKind kind, Extent vocab_size, Extent classes = 25);

// Versioned JSON document; config_from_json raises data_error on malformed or
// inconsistent input.
std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& text);

// Shortest sequence the configured network accepts (widest first-layer
// correlation window, plus the pooling ladder for the deep conv stack).
Extent model_min_seq_len(const ModelConfig& config);

struct Prediction {
    std::vector<int> labels;  // argmax per row, ties to the lowest class index
    Tensor probs;             // [B, K]
};

// Character classifier: embedding -> parallel branches -> feature concat ->
// dense head -> softmax. Identical (config, seed) builds identical parameters.
// Prediction from const methods is safe across threads; training mutates the
// parameters from one thread.
class Model {
  public:
    explicit Model(ModelConfig config);
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;
    Model(Model&&) = default;
    Model& operator=(Model&&) = default;

    // ids: rectangular [B][T] grid from encode_batch; T must reach
    // min_seq_len() (data_error otherwise).
    Tensor logits(const std::vector<std::vector<int>>& ids) const;
    Tensor forward(const std::vector<std::vector<int>>& ids) const;  // softmax rows [B, K]
    Prediction predict(const std::vector<std::vector<int>>& ids) const;

    std::vector<Param> params() const;  // named handles in stable build order
    Extent param_count() const;
    // Estimated float32 bytes to run one [batch, seq_len] forward pass: all
    // parameter values plus the dominant activation grids (embedding outputs,
    // per-block convolution + relu maps, pooling outputs, recurrent gate
    // projections and state sequences at ~16 H-wide grids per step, feature
    // concat and head outputs). Reverse-mode state keeps those grids alive
    // until backward; gradients double the figure.
    Extent memory_estimate(Extent batch, Extent seq_len) const;
    Extent min_seq_len() const { return min_seq_len_; }
    Extent feature_width() const;  // concatenated width in front of the head
    const ModelConfig& config() const { return config_; }

  private:
    struct Branch {
        SubnetConfig config;
        std::vector<ConvBlock> blocks;  // textcnn
        std::optional<LSTM> fwd, bwd;   // lstm uses fwd only
    };

    Tensor branch_forward(const Branch& branch, const Tensor& chan_x, const Tensor& seq_x) const;
    Tensor vgg_forward(const Tensor& chan_x) const;
    void compute_min_seq_len();

    ModelConfig config_;
    Embedding embed_;
    std::vector<Branch> branches_;
    std::vector<ConvBlock> vgg_blocks_;
    std::vector<Dense> head_;  // hidden relu layers, then the class output layer
    Extent min_seq_len_ = 1;
};

enum class VoteMode { soft, hard };
VoteMode vote_mode_from(const std::string& name);  // data_error on unknown names
const char* to_string(VoteMode mode);

// Member probability grids [B, K] -> combined row-stochastic scores [B, K].
// Weights must be nonnegative with a positive sum and are normalized
// internally. soft: weighted mean of probabilities. hard: each member casts
// its weight for its own argmax class (ties to the lowest index).
Tensor combine_probs(const std::vector<Tensor>& member_probs, const std::vector<double>& weights,
                     VoteMode mode);

// weights proportional to nonnegative scores (e.g. validation accuracies);
// an all-zero score vector falls back to uniform weights.
std::vector<double> normalized_weights(const std::vector<double>& scores);

struct EnsembleSpec {
    std::vector<std::shared_ptr<Model>> members;
    std::vector<double> weights;  // normalized: nonnegative, sum 1 within 1e-9
    VoteMode mode = VoteMode::soft;
};

// scores empty -> uniform weights; otherwise one nonnegative score per member.
EnsembleSpec make_ensemble(std::vector<std::shared_ptr<Model>> members,
                           const std::vector<double>& scores, VoteMode mode);

Prediction ensemble_predict(const EnsembleSpec& spec, const std::vector<std::vector<int>>& ids);

// Canonical voting-ensemble mix: two textcnn variants (kernel widths 3 and 4)
// and one bilstm, in that order.
std::vector<ModelConfig> ensemble_member_configs(Extent vocab_size, Extent classes = 25,
                                                 bool desk = false);

}  // namespace ctc
