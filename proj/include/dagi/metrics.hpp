#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dagi/matrix.hpp"

namespace dagi {

/// Error scores pooled over all entries of a prediction/truth pair set.
/// mre is the aggregate relative absolute error in percent,
/// 100 * sum|err| / sum|truth|; when the truth magnitudes sum to zero with
/// nonzero error the score is undefined and mre_infinite is set instead.
struct ErrorStats {
    double mse = 0.0;
    double mae = 0.0;
    double mre = 0.0;
    bool mre_infinite = false;
};

enum class MreKind {
    Aggregate,     // 100 * sum|err| / sum|truth|
    PerEntryMean,  // 100 * mean(|err_i| / |truth_i|), sensitivity variant
};

/// Pooled scores plus a per-column (measurement) breakdown. Inputs are one
/// v x q block per subject, all of identical shape.
struct ErrorReport {
    ErrorStats overall;
    std::vector<ErrorStats> per_measurement; // length q
};

ErrorReport error_triple(const std::vector<Matrix>& pred, const std::vector<Matrix>& truth,
                         MreKind kind = MreKind::Aggregate);

/// Partition of n subjects into k folds. fold_of[i] is subject i's fold.
struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::size_t> fold_of;
    std::uint64_t seed = 0;
    bool stratified = false;

    std::vector<std::size_t> test_indices(std::size_t fold) const;
    std::vector<std::size_t> train_indices(std::size_t fold) const;
};

/// Seeded shuffle + contiguous split; sizes differ by at most one. With
/// labels, the split is stratified per class (ratios preserved within one
/// subject), extras going to the least-loaded fold.
FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed,
               const std::vector<int>* labels = nullptr);

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::string kind; // "paired-t" | "mcnemar-exact" | "mcnemar-chi2"
    std::string note;
};

/// Two-sided paired t-test on equal-length samples (n >= 2). All-zero
/// differences give t=0, p=1; zero-variance nonzero-mean differences are a
/// degenerate distribution and rejected.
TestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

/// Order-1 distance between two empirical 1-D distributions (quantile-
/// function integral; for equal sizes the mean |a_(i) - b_(i)|).
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

/// Mean of per-class recalls; truth must contain both classes.
double balanced_accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

/// Paired test on discordant correctness flags: exact binomial when the
/// discordant count is under 25, else chi-squared with continuity
/// correction.
TestResult mcnemar(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b);

/// Sample Pearson correlation; both inputs must vary.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

/// Two-sided p-value of a Student-t statistic (regularized incomplete beta,
/// continued-fraction evaluation). Exposed for reuse and oracle testing.
double student_t_two_sided_p(double t, double df);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// P(X <= k) for X ~ Binomial(n, 1/2); exact for the n used by mcnemar.
double binomial_half_cdf(std::size_t k, std::size_t n);

} // namespace dagi
