#include "dagi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dagi/errors.hpp"
#include "dagi/rng.hpp"

namespace dagi {

namespace {

struct ErrorAccumulator {
    double sq = 0.0;
    double abs = 0.0;
    double truth_abs = 0.0;
    double ratio = 0.0;
    std::size_t n = 0;
    bool ratio_infinite = false;

    void add(double pred, double truth) {
        const double e = pred - truth;
        sq += e * e;
        abs += std::fabs(e);
        truth_abs += std::fabs(truth);
        if (truth != 0.0)
            ratio += std::fabs(e) / std::fabs(truth);
        else if (e != 0.0)
            ratio_infinite = true;
        ++n;
    }

    ErrorStats stats(MreKind kind) const {
        ErrorStats s;
        if (n == 0) return s;
        s.mse = sq / static_cast<double>(n);
        s.mae = abs / static_cast<double>(n);
        if (kind == MreKind::Aggregate) {
            if (truth_abs > 0.0)
                s.mre = 100.0 * abs / truth_abs;
            else if (abs > 0.0)
                s.mre_infinite = true;
        } else {
            if (!ratio_infinite)
                s.mre = 100.0 * ratio / static_cast<double>(n);
            else
                s.mre_infinite = true;
        }
        return s;
    }
};

} // namespace

ErrorReport error_triple(const std::vector<Matrix>& pred, const std::vector<Matrix>& truth,
                         MreKind kind) {
    if (pred.size() != truth.size())
        throw DimensionError("error_triple: " + std::to_string(pred.size()) + " vs " +
                             std::to_string(truth.size()) + " subjects");
    if (pred.empty())
        throw ContractError("error_triple: empty input");
    const std::size_t q = pred[0].cols();
    ErrorAccumulator overall;
    std::vector<ErrorAccumulator> per_col(q);
    for (std::size_t s = 0; s < pred.size(); ++s) {
        if (!pred[s].same_shape(truth[s]) || pred[s].cols() != q ||
            !pred[s].same_shape(pred[0]))
            throw DimensionError("error_triple: subject " + std::to_string(s) + " blocks " +
                                 pred[s].shape() + " vs " + truth[s].shape());
        for (std::size_t i = 0; i < pred[s].rows(); ++i)
            for (std::size_t j = 0; j < q; ++j) {
                overall.add(pred[s](i, j), truth[s](i, j));
                per_col[j].add(pred[s](i, j), truth[s](i, j));
            }
    }
    ErrorReport report;
    report.overall = overall.stats(kind);
    for (const auto& acc : per_col) report.per_measurement.push_back(acc.stats(kind));
    return report;
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] != fold) out.push_back(i);
    return out;
}

namespace {

/// Deals `members` (already shuffled) into folds: the first `rem` folds in
/// `priority` order get one extra member.
void assign_contiguous(const std::vector<std::size_t>& members, std::size_t k,
                       const std::vector<std::size_t>& priority, std::vector<std::size_t>& fold_of,
                       std::vector<std::size_t>& load) {
    const std::size_t base = members.size() / k;
    const std::size_t rem = members.size() % k;
    std::vector<std::size_t> take(k, base);
    for (std::size_t r = 0; r < rem; ++r) ++take[priority[r]];
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f)
        for (std::size_t c = 0; c < take[f]; ++c) {
            fold_of[members[pos++]] = f;
            ++load[f];
        }
}

} // namespace

FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed,
               const std::vector<int>* labels) {
    if (k < 2)
        throw ContractError("kfold: k must be at least 2, got " + std::to_string(k));
    if (k > n)
        throw ContractError("kfold: k=" + std::to_string(k) + " exceeds " + std::to_string(n) +
                            " subjects");
    if (labels != nullptr && labels->size() != n)
        throw DimensionError("kfold: " + std::to_string(labels->size()) + " labels vs " +
                             std::to_string(n) + " subjects");
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.stratified = labels != nullptr;
    plan.fold_of.assign(n, 0);
    SeededRng rng(mix_seed(seed, "kfold"));
    std::vector<std::size_t> load(k, 0);

    if (labels == nullptr) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        std::vector<std::size_t> priority(k);
        std::iota(priority.begin(), priority.end(), 0);
        assign_contiguous(order, k, priority, plan.fold_of, load);
        return plan;
    }

    std::vector<int> classes = *labels;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    for (int cls : classes) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i)
            if ((*labels)[i] == cls) members.push_back(i);
        rng.shuffle(members);
        // Extras go to the least-loaded folds so total sizes stay within one.
        std::vector<std::size_t> priority(k);
        std::iota(priority.begin(), priority.end(), 0);
        std::stable_sort(priority.begin(), priority.end(),
                         [&](std::size_t a, std::size_t b) { return load[a] < load[b]; });
        assign_contiguous(members, k, priority, plan.fold_of, load);
    }
    return plan;
}

double incomplete_beta(double a, double b, double x) {
    if (x < 0.0 || x > 1.0)
        throw ContractError("incomplete_beta: x outside [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    // Converges fastest for x < (a+1)/(a+b+2); otherwise use the symmetry
    // I_x(a,b) = 1 - I_{1-x}(b,a).
    if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);

    const double log_front = a * std::log(x) + b * std::log1p(-x) - std::log(a) -
                             (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    // Modified Lentz evaluation of the standard continued fraction.
    const double tiny = 1e-300;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const double dm = static_cast<double>(m);
        double num = dm * (b - dm) * x / ((a + 2.0 * dm - 1.0) * (a + 2.0 * dm));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        num = -(a + dm) * (a + b + dm) * x / ((a + 2.0 * dm) * (a + 2.0 * dm + 1.0));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-15) break;
    }
    return std::exp(log_front) * h;
}

double student_t_two_sided_p(double t, double df) {
    if (df <= 0.0)
        throw ContractError("t-test: degrees of freedom must be positive");
    if (!std::isfinite(t)) return 0.0;
    const double x = df / (df + t * t);
    double p = incomplete_beta(df / 2.0, 0.5, x);
    if (p < 0.0) p = 0.0;
    if (p > 1.0) p = 1.0;
    return p;
}

TestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw DimensionError("t-test: sample sizes " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    const std::size_t n = a.size();
    if (n < 2)
        throw ContractError("t-test: need at least 2 pairs");
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i] - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    TestResult r;
    r.kind = "paired-t";
    if (sd == 0.0) {
        if (mean != 0.0)
            throw ContractError("t-test: zero-variance nonzero-mean differences");
        r.statistic = 0.0;
        r.p_value = 1.0;
        return r;
    }
    r.statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
    r.p_value = student_t_two_sided_p(r.statistic, static_cast<double>(n - 1));
    return r;
}

double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw ContractError("wasserstein: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::size_t n = a.size(), m = b.size();
    // Integrate |A^{-1}(u) - B^{-1}(u)| over u in (0,1): both quantile
    // functions are step functions with breakpoints at i/n and j/m.
    double total = 0.0;
    std::size_t i = 0, j = 0;
    double u = 0.0;
    while (i < n && j < m) {
        const double ua = static_cast<double>(i + 1) / static_cast<double>(n);
        const double ub = static_cast<double>(j + 1) / static_cast<double>(m);
        const double next = std::min(ua, ub);
        total += (next - u) * std::fabs(a[i] - b[j]);
        if (ua <= next + 1e-18 && ua <= ub) ++i;
        if (ub <= next + 1e-18 && ub <= ua) ++j;
        u = next;
    }
    return total;
}

double balanced_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size())
        throw DimensionError("balanced_accuracy: " + std::to_string(pred.size()) + " vs " +
                             std::to_string(truth.size()));
    if (truth.empty())
        throw ContractError("balanced_accuracy: empty input");
    std::size_t pos = 0, neg = 0, tp = 0, tn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 1) {
            ++pos;
            if (pred[i] == 1) ++tp;
        } else {
            ++neg;
            if (pred[i] != 1) ++tn;
        }
    }
    if (pos == 0 || neg == 0)
        throw ContractError("balanced_accuracy: truth contains a single class");
    return 0.5 * (static_cast<double>(tp) / static_cast<double>(pos) +
                  static_cast<double>(tn) / static_cast<double>(neg));
}

double binomial_half_cdf(std::size_t k, std::size_t n) {
    if (k >= n) return 1.0;
    // Exact in doubles for the small n used here: coefficients and 2^n stay
    // well under 2^53.
    double coeff = 1.0; // C(n, 0)
    double sum = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
        coeff *= static_cast<double>(n - i + 1) / static_cast<double>(i);
        sum += coeff;
    }
    return sum * std::pow(0.5, static_cast<double>(n));
}

TestResult mcnemar(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b) {
    if (correct_a.size() != correct_b.size())
        throw DimensionError("mcnemar: " + std::to_string(correct_a.size()) + " vs " +
                             std::to_string(correct_b.size()));
    std::size_t b = 0, c = 0;
    for (std::size_t i = 0; i < correct_a.size(); ++i) {
        if (correct_a[i] && !correct_b[i]) ++b;
        if (!correct_a[i] && correct_b[i]) ++c;
    }
    TestResult r;
    const std::size_t nd = b + c;
    if (nd == 0) {
        r.kind = "mcnemar-exact";
        r.statistic = 0.0;
        r.p_value = 1.0;
        r.note = "no discordant pairs";
        return r;
    }
    if (nd < 25) {
        r.kind = "mcnemar-exact";
        const std::size_t lo = std::min(b, c);
        r.statistic = static_cast<double>(lo);
        r.p_value = std::min(1.0, 2.0 * binomial_half_cdf(lo, nd));
        return r;
    }
    r.kind = "mcnemar-chi2";
    const double diff = std::fabs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
    const double chi2 = diff * diff / static_cast<double>(nd);
    r.statistic = chi2;
    r.p_value = std::erfc(std::sqrt(chi2 / 2.0));
    return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw DimensionError("pearson: " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    const std::size_t n = a.size();
    if (n < 2)
        throw ContractError("pearson: need at least 2 samples");
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0)
        throw ContractError("pearson: constant input");
    return sab / std::sqrt(saa * sbb);
}

} // namespace dagi
