#include "dagi/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dagi/errors.hpp"
#include "dagi/rng.hpp"

namespace dagi {

namespace {

/// Scale of the per-ROI noise that the graph smoothing diffuses. Internal:
/// it controls how much target-relevant signal lives only in neighbor
/// columns (information a ROI-local view cannot explain away).
constexpr double kSharedNoiseSd = 0.5;

std::vector<std::string> shared_names(std::size_t p) {
    const std::vector<std::string> base{"thickness", "area", "volume"};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < p; ++i)
        out.push_back(i < base.size() ? base[i] : "shared" + std::to_string(i));
    return out;
}

std::vector<std::string> target_names(std::size_t q) {
    const std::vector<std::string> base{"curv", "gauscurv"};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < q; ++i)
        out.push_back(i < base.size() ? base[i] : "target" + std::to_string(i));
    return out;
}

/// Row-wise neighbor mean; isolated nodes keep their own row.
Matrix neighbor_mean(const Matrix& x, const NeighborIndex& nbr) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto& list = nbr.lists[i];
        if (list.empty()) {
            for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j);
            continue;
        }
        for (const std::uint32_t n : list)
            for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) += x(n, j);
        for (std::size_t j = 0; j < x.cols(); ++j)
            out(i, j) /= static_cast<double>(list.size());
    }
    return out;
}

} // namespace

void SynthConfig::validate() const {
    auto positive = [](std::size_t value, const char* name) {
        if (value == 0)
            throw ConfigError(std::string(name) + " must be positive");
    };
    positive(v, "v");
    positive(p, "p");
    positive(q, "q");
    positive(n_source, "n-source");
    positive(n_target, "n-target");
    auto fraction = [](double value, const char* name) {
        if (!(value >= 0.0 && value <= 1.0))
            throw ConfigError(std::string(name) + " must lie in [0,1]");
    };
    fraction(neighbor_coupling, "neighbor-coupling");
    fraction(affected_roi_fraction, "affected-roi-fraction");
    if (!(noise_sd >= 0.0)) throw ConfigError("noise-sd must be nonnegative");
    if (!(sex_effect_size >= 0.0)) throw ConfigError("sex-effect-size must be nonnegative");
    if (!(sex_signal_shared >= 0.0))
        throw ConfigError("sex-signal-shared must be nonnegative");
}

GeneratedData generate(const SynthConfig& cfg, const RoiGraph& graph) {
    cfg.validate();
    if (graph.node_names.size() != cfg.v)
        throw ConfigError("graph has " + std::to_string(graph.node_names.size()) +
                          " nodes but the configuration says v=" + std::to_string(cfg.v));

    DatasetSchema schema;
    schema.roi_names = graph.node_names;
    schema.shared_measurements = shared_names(cfg.p);
    schema.target_measurements = target_names(cfg.q);
    schema.label_column = "label";
    schema.validate();

    // Generating coefficients: one stream, fixed draw order.
    SeededRng coeff_rng(mix_seed(cfg.seed, "coefficients"));
    GroundTruth truth;
    truth.shared_intercept = coeff_rng.uniform_matrix(cfg.v, cfg.p, 1.0, 3.0);
    truth.shared_slope = coeff_rng.uniform_matrix(cfg.v, cfg.p, 0.5, 1.5);
    truth.shared_sex = coeff_rng.uniform_matrix(cfg.v, cfg.p, -1.0, 1.0);
    truth.target_intercept = coeff_rng.uniform_matrix(cfg.v, cfg.q, 1.0, 3.0);
    for (std::size_t m = 0; m < cfg.q; ++m)
        truth.target_self.push_back(coeff_rng.uniform_matrix(cfg.v, cfg.p, -1.0, 1.0));
    for (std::size_t m = 0; m < cfg.q; ++m)
        truth.target_neighbor.push_back(coeff_rng.uniform_matrix(cfg.v, cfg.p, -1.0, 1.0));

    // Seeded affected subset, independent of the coefficient draws.
    SeededRng mask_rng(mix_seed(cfg.seed, "affected"));
    std::vector<std::size_t> order(cfg.v);
    std::iota(order.begin(), order.end(), 0);
    mask_rng.shuffle(order);
    const auto n_affected =
        static_cast<std::size_t>(std::llround(cfg.affected_roi_fraction *
                                              static_cast<double>(cfg.v)));
    truth.affected_mask.assign(cfg.v, 0);
    for (std::size_t i = 0; i < n_affected && i < cfg.v; ++i)
        truth.affected_mask[order[i]] = 1;
    for (std::size_t i = 0; i < cfg.v; ++i)
        if (truth.affected_mask[i]) truth.affected_rois.push_back(graph.node_names[i]);

    const double c = cfg.neighbor_coupling;
    auto make_subject = [&](const char* tag, std::size_t index, Matrix& target_out) {
        SeededRng rng(mix_seed(mix_seed(cfg.seed, tag), static_cast<std::uint64_t>(index)));
        const double z = rng.normal();
        const int y = rng.bernoulli(0.5) ? 1 : 0;
        const Matrix eta_shared = rng.normal_matrix(cfg.v, cfg.p, 0.0, kSharedNoiseSd);
        const Matrix eta_target = rng.normal_matrix(cfg.v, cfg.q, 0.0, 1.0);

        Matrix raw(cfg.v, cfg.p);
        for (std::size_t i = 0; i < cfg.v; ++i)
            for (std::size_t m = 0; m < cfg.p; ++m)
                raw(i, m) = truth.shared_intercept(i, m) + truth.shared_slope(i, m) * z +
                            cfg.sex_signal_shared * truth.shared_sex(i, m) * y +
                            eta_shared(i, m);
        const Matrix smoothed_nbr = neighbor_mean(raw, graph.neighbors);
        Matrix x(cfg.v, cfg.p);
        for (std::size_t i = 0; i < cfg.v; ++i)
            for (std::size_t m = 0; m < cfg.p; ++m)
                x(i, m) = (1.0 - c) * raw(i, m) + c * smoothed_nbr(i, m);

        const Matrix x_nbr = neighbor_mean(x, graph.neighbors);
        target_out = Matrix(cfg.v, cfg.q);
        for (std::size_t m = 0; m < cfg.q; ++m)
            for (std::size_t i = 0; i < cfg.v; ++i) {
                double t = truth.target_intercept(i, m);
                for (std::size_t k = 0; k < cfg.p; ++k) {
                    t += truth.target_self[m](i, k) * x(i, k);
                    t += c * truth.target_neighbor[m](i, k) * x_nbr(i, k);
                }
                if (truth.affected_mask[i]) t += cfg.sex_effect_size * static_cast<double>(y);
                t += cfg.noise_sd * eta_target(i, m);
                target_out(i, m) = t;
            }

        SubjectTable s;
        s.subject_id = std::string(tag) + "-" + std::to_string(index);
        s.label = y;
        s.x_shared = std::move(x);
        return s;
    };

    GeneratedData data;
    data.source.schema = schema;
    data.source.has_targets = true;
    for (std::size_t i = 0; i < cfg.n_source; ++i) {
        Matrix t;
        SubjectTable s = make_subject("src", i, t);
        s.x_target = std::move(t);
        data.source.subjects.push_back(std::move(s));
    }

    data.target.schema = schema;
    data.target.has_targets = false;
    truth.truth.method_tag = "truth";
    truth.truth.roi_names = schema.roi_names;
    truth.truth.measurement_names = schema.target_measurements;
    for (std::size_t i = 0; i < cfg.n_target; ++i) {
        Matrix t;
        SubjectTable s = make_subject("tgt", i, t);
        truth.truth.subject_ids.push_back(s.subject_id);
        truth.truth.values.push_back(std::move(t));
        data.target.subjects.push_back(std::move(s));
    }
    data.truth = std::move(truth);
    return data;
}

CohortSummary describe(const Cohort& cohort) {
    CohortSummary summary;
    summary.n = cohort.size();
    summary.has_labels = !cohort.schema.label_column.empty();
    if (cohort.subjects.empty()) return summary;

    if (summary.has_labels)
        for (const int label : cohort.labels())
            (label == 1 ? summary.positives : summary.negatives)++;

    struct Acc {
        double sum = 0.0, sumsq = 0.0;
        double min = 0.0, max = 0.0;
        bool first = true;
        void add(double x) {
            sum += x;
            sumsq += x * x;
            min = first ? x : std::min(min, x);
            max = first ? x : std::max(max, x);
            first = false;
        }
    };
    std::vector<std::string> names;
    std::vector<Acc> accs;
    auto column = [&](const std::string& name) {
        names.push_back(name);
        accs.emplace_back();
        return accs.size() - 1;
    };
    for (const auto& cname : cohort.schema.confound_columns) column(cname);
    const auto& schema = cohort.schema;
    for (std::size_t m = 0; m < schema.p(); ++m)
        for (std::size_t r = 0; r < schema.v(); ++r)
            column(schema.roi_names[r] + "." + schema.shared_measurements[m]);
    if (cohort.has_targets)
        for (std::size_t m = 0; m < schema.q(); ++m)
            for (std::size_t r = 0; r < schema.v(); ++r)
                column(schema.roi_names[r] + "." + schema.target_measurements[m]);

    for (const auto& s : cohort.subjects) {
        std::size_t c = 0;
        for (const double cv : s.confounds) accs[c++].add(cv);
        for (std::size_t m = 0; m < schema.p(); ++m)
            for (std::size_t r = 0; r < schema.v(); ++r) accs[c++].add(s.x_shared(r, m));
        if (cohort.has_targets)
            for (std::size_t m = 0; m < schema.q(); ++m)
                for (std::size_t r = 0; r < schema.v(); ++r)
                    accs[c++].add(s.x_target->operator()(r, m));
    }

    const auto n = static_cast<double>(cohort.size());
    for (std::size_t c = 0; c < names.size(); ++c) {
        ColumnStats stats;
        stats.name = names[c];
        stats.mean = accs[c].sum / n;
        if (cohort.size() > 1) {
            const double ss = accs[c].sumsq - n * stats.mean * stats.mean;
            stats.sd = std::sqrt(std::max(0.0, ss / (n - 1.0)));
        }
        stats.min = accs[c].min;
        stats.max = accs[c].max;
        summary.columns.push_back(std::move(stats));
    }
    return summary;
}

std::string CohortSummary::to_string() const {
    std::ostringstream out;
    out << "subjects: " << n << "\n";
    if (has_labels && n > 0)
        out << "labels: " << positives << " positive, " << negatives << " negative\n";
    for (const auto& col : columns)
        out << col.name << ": mean " << col.mean << ", sd " << col.sd << ", min " << col.min
            << ", max " << col.max << "\n";
    return out.str();
}

} // namespace dagi
