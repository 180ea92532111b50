#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dagi/dataio.hpp"
#include "dagi/graph.hpp"
#include "dagi/layers.hpp"
#include "dagi/matrix.hpp"
#include "dagi/tape.hpp"

namespace dagi {

enum class EncoderKind { Gin, Gcn };

std::string encoder_kind_name(EncoderKind kind);          // "gin" / "gcn"
EncoderKind encoder_kind_from_name(const std::string& s); // ConfigError otherwise

struct ModelConfig {
    std::size_t v = 34;
    std::size_t p = 3;
    std::size_t q = 2;
    std::size_t embed_width = 32;      // node-embedding width r
    std::size_t classifier_hidden = 16;
    EncoderKind encoder = EncoderKind::Gin;

    void validate() const;
};

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 32;
    std::size_t epochs = 300;
    double lambda_cls = 1.0;
    std::uint64_t seed = 1;
    /// false trains with the imputation loss alone (the GI ablation) and
    /// the resulting model refuses classifier queries.
    bool classifier_enabled = true;

    void validate() const;
};

struct EpochStats {
    std::size_t epoch = 0; // 1-based
    double loss_imputation = 0.0;
    double loss_classifier = 0.0;
    double loss_total = 0.0;
};

struct TrainLog {
    std::vector<EpochStats> epochs;
    std::string to_csv() const; // epoch,loss_imputation,loss_classifier,loss_total
};

struct ForwardResult {
    Matrix x_hat;                  // v x q, raw target units
    Matrix embeddings;             // v x r, last encoder layer
    std::optional<double> sex_prob;
};

/// Graph encoder + imputation decoder + optional demographic classifier.
/// Construction draws all parameters (classifier included, whatever the
/// training mode, so parameter streams never depend on flags); train() fits
/// them and freezes normalization statistics for eval-mode use.
struct DagiModel {
    ModelConfig cfg;
    RoiGraph graph;
    Matrix norm_adj; // degree-normalized adjacency, GCN encoder only

    GinLayer enc1, enc2; // GIN path
    GcnLayer genc1, genc2; // GCN path
    BatchNorm bn1, bn2;
    GinLayer dec;    // GIN decoder: one aggregation, 4-dense MLP
    Mlp gdec_mlp;    // GCN decoder MLP over degree-normalized aggregation
    Mlp classifier;  // pooled embedding -> hidden -> 1 logit

    Matrix feat_mean, feat_sd; // v x p input standardization (training stats)
    bool classifier_active = true;
    bool trained = false; // set by a train() run of at least one epoch
    TrainConfig train_cfg;
    double final_loss_imputation = 0.0;
    double final_loss_classifier = 0.0;
    double final_loss_total = 0.0;
    std::uint64_t fingerprint = 0; // schema identity the model was fit to
    std::vector<std::string> shared_names, target_names;

    DagiModel() = default;
    DagiModel(const ModelConfig& config, const RoiGraph& g, SeededRng& init_rng);

    /// Tape-recorded forward pass. Training mode uses per-graph batch
    /// normalization (updating running statistics); eval mode is frozen.
    struct Vars {
        Var x_hat;
        Var embeddings;
        Var sex_prob; // valid only when the model classifies
        bool has_sex_prob = false;
    };
    Vars forward_vars(ParamBinder& pb, const Matrix& x_shared_raw, bool train_mode);

    /// Forward pass with every neighbor contribution scaled by its edge
    /// weight (one weight per undirected edge of graph.edge_list, as a 1 x E
    /// row). h0 is the already-standardized shared block, bound by the
    /// caller so it controls gradient tracking. Weights fixed at exactly 1
    /// reproduce forward_vars bit-identically. GIN encoders only: the GCN
    /// path aggregates through a dense normalized adjacency, which has no
    /// per-edge factorization to mask.
    Vars forward_vars_masked(ParamBinder& pb, Var h0_standardized, Var edge_weights,
                             bool train_mode);

    /// Eval-mode forward for one subject's raw shared block.
    ForwardResult forward(const Matrix& x_shared_raw);

    /// Sex probability alone; ContractError on a classifier-disabled model.
    double classify(const Matrix& x_shared_raw);

    /// (x - mean) / sd with the stored training statistics.
    Matrix standardize(const Matrix& x_shared_raw) const;

    void visit_params(const ParamVisitor& v); // trainable tensors, fixed order
    void visit_state(const ParamVisitor& v);  // + running stats + feature stats
};

/// Squared Euclidean distance over the whole block (sum of squared
/// entrywise differences).
double loss_imputation(const Matrix& x_hat, const Matrix& x_true);
Var loss_imputation_var(Tape& t, Var x_hat, const Matrix& x_true);

/// Binary cross-entropy -[y log g + (1-y) log(1-g)] with the tape's log
/// clamping; minimization improves classification.
double loss_classifier(double sex_prob, int y);
Var loss_classifier_var(Tape& t, Var sex_prob, int y);

struct TrainResult {
    DagiModel model;
    TrainLog log;
};

/// Adam-fit on a cohort that carries shared blocks, target blocks, and
/// (when the classifier is enabled) labels. Deterministic given cfg.seed:
/// one stream initializes parameters, another shuffles subject order.
TrainResult train(const Cohort& data, const ModelConfig& mcfg, const TrainConfig& tcfg,
                  const RoiGraph& graph);

struct ImputeResult {
    PredictionBlock block;
    std::vector<double> sex_probs; // empty when the classifier is disabled
};

/// Eval-mode predictions for every subject. The cohort's schema must carry
/// the fingerprint the model was trained on; mismatches are refused with a
/// column diff. Input data is never modified.
ImputeResult impute(DagiModel& model, const Cohort& cohort, const std::string& method_tag);

/// Checkpoint round-trip: a loaded model reproduces eval-mode forward
/// outputs bit-exactly.
void save_model(DagiModel& model, const std::string& path);
DagiModel load_model(const std::string& path);

} // namespace dagi
