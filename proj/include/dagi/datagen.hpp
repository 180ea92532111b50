#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dagi/dataio.hpp"
#include "dagi/graph.hpp"
#include "dagi/matrix.hpp"

namespace dagi {

/// Scenario scale and effect knobs for the synthetic two-cohort setup: both
/// cohorts share p measurement columns; q further columns exist only in the
/// source cohort.
struct SynthConfig {
    std::size_t v = 34;
    std::size_t p = 3;
    std::size_t q = 2;
    std::size_t n_source = 256;
    std::size_t n_target = 128;
    double sex_effect_size = 1.0;      // additive shift on affected ROIs' targets
    double neighbor_coupling = 0.0;    // c in [0,1]: graph smoothing + target term
    double noise_sd = 0.1;             // target measurement noise
    double affected_roi_fraction = 0.5;
    /// How much of the demographic signal bleeds into the shared columns.
    /// At 0 the shared block is statistically independent of the label, so
    /// no imputation method, however good, can recover the sex shift; the
    /// default leaves a weak trace for models to amplify.
    double sex_signal_shared = 0.5;
    std::uint64_t seed = 1;

    void validate() const; // ConfigError on nonpositive counts / bad fractions
};

/// Everything the generator knows that the standard loaders must not see:
/// true target blocks for the target cohort, the affected-ROI mask, and the
/// generating coefficients.
struct GroundTruth {
    PredictionBlock truth;            // tag "truth", one v x q block per target subject
    std::vector<int> affected_mask;   // per ROI, 1 = carries the sex shift
    std::vector<std::string> affected_rois;
    Matrix shared_intercept;          // v x p
    Matrix shared_slope;              // v x p, multiplies the latent z
    Matrix shared_sex;                // v x p, multiplies sex_signal_shared * y
    Matrix target_intercept;          // v x q
    std::vector<Matrix> target_self;      // q blocks, v x p: weights on own-ROI shared
    std::vector<Matrix> target_neighbor;  // q blocks, v x p: weights on neighbor means
};

struct GeneratedData {
    Cohort source; // carries x_target
    Cohort target; // shared columns only
    GroundTruth truth;
};

/// Deterministic given (config, seed). Per-subject draws use a stream keyed
/// by (seed, cohort, subject index), so growing a cohort extends it without
/// altering earlier subjects, and the two cohorts never share a stream.
GeneratedData generate(const SynthConfig& cfg, const RoiGraph& graph);

struct ColumnStats {
    std::string name;
    double mean = 0.0, sd = 0.0, min = 0.0, max = 0.0;
};

struct CohortSummary {
    std::size_t n = 0;
    bool has_labels = false;
    std::size_t positives = 0, negatives = 0;
    std::vector<ColumnStats> columns; // confounds then value columns, file order
    std::string to_string() const;
};

CohortSummary describe(const Cohort& cohort);

} // namespace dagi
