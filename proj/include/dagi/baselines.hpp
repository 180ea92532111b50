#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dagi/dataio.hpp"
#include "dagi/layers.hpp"
#include "dagi/matrix.hpp"
#include "dagi/model.hpp"

namespace dagi {

enum class LinearScope { Direct, PerRoi };

std::string linear_scope_name(LinearScope scope);          // "direct" / "per-roi"
LinearScope linear_scope_from_name(const std::string& s);  // ConfigError otherwise

/// Least-squares imputer. Direct scope maps the flattened v*p input vector to
/// the flattened v*q target vector through one weight matrix; per-ROI scope
/// fits an independent p -> q map for every node. Flattening is row-major
/// (node-major), matching Matrix storage.
struct LinearModel {
    LinearScope scope = LinearScope::Direct;
    std::size_t v = 0, p = 0, q = 0;

    Matrix weight; // direct: (v*p) x (v*q)
    Matrix bias;   // direct: 1 x (v*q)
    std::vector<Matrix> roi_weights; // per-roi: v blocks, p x q
    std::vector<Matrix> roi_biases;  // per-roi: v blocks, 1 x q

    bool ridge_used = false; // least-squares needed the ridge fallback
    std::uint64_t fingerprint = 0;
    std::vector<std::string> roi_names, shared_names, target_names;

    /// v x q prediction for one subject's raw shared block.
    Matrix predict(const Matrix& x_shared) const;
};

/// Ordinary least squares through the normal equations. A singular Gram
/// matrix (collinear inputs or fewer subjects than coefficients) falls back
/// to ridge with lambda = 1e-8 and flags the model.
LinearModel fit_linear(const Cohort& train, LinearScope scope);

struct MlpTrainConfig {
    std::vector<std::size_t> hidden = {128};
    std::size_t epochs = 300;
    double learning_rate = 0.01;
    std::size_t batch_size = 32; // capped at the cohort size
    std::uint64_t seed = 1;

    void validate() const;
};

/// Fully-connected regressor over the flattened shared block; inputs are
/// standardized by training statistics like the graph models, targets stay
/// in raw units.
struct MlpRegressor {
    std::size_t v = 0, p = 0, q = 0;
    Mlp net;
    Matrix feat_mean, feat_sd; // v x p
    MlpTrainConfig cfg;
    double final_loss = 0.0;
    std::uint64_t fingerprint = 0;
    std::vector<std::string> roi_names, shared_names, target_names;

    Matrix predict(const Matrix& x_shared);
};

struct MlpFitResult {
    MlpRegressor model;
    TrainLog log; // classifier column stays 0
};

/// Adam-fit squared-error regressor; deterministic given cfg.seed. Zero
/// epochs returns the freshly initialized model.
MlpFitResult fit_mlp_regressor(const Cohort& train, const MlpTrainConfig& cfg);

/// Cohort-level prediction with the same schema-fingerprint refusal as the
/// graph models.
PredictionBlock impute(const LinearModel& model, const Cohort& cohort,
                       const std::string& method_tag);
PredictionBlock impute(MlpRegressor& model, const Cohort& cohort,
                       const std::string& method_tag);

/// Baselines share the graph models' checkpoint container; the header's
/// model-kind tag ("linear-direct", "linear-roi", "mlp", "gin", "gcn")
/// dispatches loading.
void save_baseline(const LinearModel& model, const std::string& path);
void save_baseline(MlpRegressor& model, const std::string& path);
LinearModel load_linear(const std::string& path);
MlpRegressor load_mlp(const std::string& path);
std::string checkpoint_model_kind(const std::string& path);

} // namespace dagi
