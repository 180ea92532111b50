#include "dagi/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <utility>

#include "dagi/adam.hpp"
#include "dagi/checkpoint.hpp"
#include "dagi/errors.hpp"
#include "dagi/rng.hpp"
#include "dagi/tape.hpp"

#include <nlohmann/json.hpp>

namespace dagi {

namespace {

constexpr double kRidgeLambda = 1e-8;
constexpr double kSdFloor = 1e-12;

void check_trainable(const Cohort& data, std::size_t min_subjects, const char* who) {
    if (data.size() < min_subjects)
        throw ContractError(std::string(who) + " needs at least " + std::to_string(min_subjects) +
                            " training subjects, got " + std::to_string(data.size()));
    if (!data.has_targets)
        throw ContractError(std::string(who) + " needs target measurements on every subject");
    for (const SubjectTable& s : data.subjects)
        if (!s.x_target.has_value())
            throw ContractError("subject '" + s.subject_id + "' lacks a target block");
    if (data.schema.q() == 0)
        throw ContractError(std::string(who) + " needs at least one target measurement");
}

void stamp_schema(std::uint64_t& fingerprint, std::vector<std::string>& roi,
                  std::vector<std::string>& shared, std::vector<std::string>& target,
                  const DatasetSchema& schema) {
    fingerprint = schema.fingerprint();
    roi = schema.roi_names;
    shared = schema.shared_measurements;
    target = schema.target_measurements;
}

/// Solves (X^T X) beta = X^T Y; on a singular Gram matrix retries with
/// +lambda I and reports the fallback through `ridge_used`.
Matrix normal_equations(const Matrix& x, const Matrix& y, bool& ridge_used) {
    Matrix gram(x.cols(), x.cols());
    matmul_atb_into(gram, x, x, false);
    Matrix xty(x.cols(), y.cols());
    matmul_atb_into(xty, x, y, false);
    Matrix beta;
    if (cholesky_solve(gram, xty, beta)) return beta;
    ridge_used = true;
    for (std::size_t i = 0; i < gram.rows(); ++i) gram(i, i) += kRidgeLambda;
    if (!cholesky_solve(gram, xty, beta))
        throw TrainingError("normal equations unsolvable even with the ridge fallback");
    return beta;
}

void check_input_shape(std::size_t v, std::size_t p, const Matrix& x) {
    if (x.rows() != v || x.cols() != p)
        throw ContractError("shared block is " + x.shape() + ", expected " + std::to_string(v) +
                            "x" + std::to_string(p));
}

void check_fingerprint(std::uint64_t fingerprint, const std::vector<std::string>& roi,
                       const std::vector<std::string>& shared, const Cohort& cohort) {
    if (cohort.schema.fingerprint() == fingerprint) return;
    std::string msg = "dataset does not match the columns this model was fit to";
    for (const std::string& d :
         {name_list_diff("node names", roi, cohort.schema.roi_names),
          name_list_diff("shared measurements", shared, cohort.schema.shared_measurements)})
        if (!d.empty()) msg += "; " + d;
    throw SchemaError(msg);
}

Matrix flatten_row(const Matrix& block) {
    Matrix row(1, block.size());
    std::copy(block.data(), block.data() + block.size(), row.data());
    return row;
}

template <typename Model, typename Predict>
PredictionBlock impute_with(const Model& model, const Cohort& cohort,
                            const std::string& method_tag, Predict&& predict) {
    check_fingerprint(model.fingerprint, model.roi_names, model.shared_names, cohort);
    PredictionBlock block;
    block.method_tag = method_tag;
    block.roi_names = model.roi_names;
    block.measurement_names = model.target_names;
    for (const SubjectTable& s : cohort.subjects) {
        block.subject_ids.push_back(s.subject_id);
        block.values.push_back(predict(s.x_shared));
    }
    block.validate();
    return block;
}

nlohmann::ordered_json schema_header(const std::vector<std::string>& roi,
                                     const std::vector<std::string>& shared,
                                     const std::vector<std::string>& target) {
    return {{"roi_names", roi}, {"shared_measurements", shared}, {"target_measurements", target}};
}

void read_schema_header(const Checkpoint& ckpt, std::uint64_t& fingerprint,
                        std::vector<std::string>& roi, std::vector<std::string>& shared,
                        std::vector<std::string>& target) {
    fingerprint = ckpt.field("fingerprint").get<std::uint64_t>();
    const auto& js = ckpt.field("schema");
    roi = js.at("roi_names").get<std::vector<std::string>>();
    shared = js.at("shared_measurements").get<std::vector<std::string>>();
    target = js.at("target_measurements").get<std::vector<std::string>>();
}

void expect_kind(const Checkpoint& ckpt, const std::string& want_a, const std::string& want_b) {
    const std::string kind = ckpt.field("model_kind").get<std::string>();
    if (kind != want_a && (want_b.empty() || kind != want_b))
        throw FormatError("checkpoint holds a '" + kind + "' model, expected '" + want_a +
                          (want_b.empty() ? "'" : "' or '" + want_b + "'"));
}

} // namespace

std::string linear_scope_name(LinearScope scope) {
    return scope == LinearScope::Direct ? "direct" : "per-roi";
}

LinearScope linear_scope_from_name(const std::string& s) {
    if (s == "direct") return LinearScope::Direct;
    if (s == "per-roi") return LinearScope::PerRoi;
    throw ConfigError("unknown linear scope '" + s + "' (expected 'direct' or 'per-roi')");
}

Matrix LinearModel::predict(const Matrix& x_shared) const {
    check_input_shape(v, p, x_shared);
    Matrix out(v, q);
    if (scope == LinearScope::Direct) {
        Matrix flat = flatten_row(x_shared);
        Matrix y = bias;
        matmul_into(y, flat, weight, true);
        std::copy(y.data(), y.data() + y.size(), out.data());
    } else {
        for (std::size_t i = 0; i < v; ++i)
            for (std::size_t m = 0; m < q; ++m) {
                double acc = roi_biases[i](0, m);
                for (std::size_t j = 0; j < p; ++j) acc += x_shared(i, j) * roi_weights[i](j, m);
                out(i, m) = acc;
            }
    }
    return out;
}

LinearModel fit_linear(const Cohort& train, LinearScope scope) {
    check_trainable(train, 2, "least-squares fitting");
    const DatasetSchema& schema = train.schema;
    LinearModel model;
    model.scope = scope;
    model.v = schema.v();
    model.p = schema.p();
    model.q = schema.q();
    stamp_schema(model.fingerprint, model.roi_names, model.shared_names, model.target_names,
                 schema);
    const std::size_t n = train.size();

    if (scope == LinearScope::Direct) {
        const std::size_t d = model.v * model.p + 1;
        Matrix x(n, d), y(n, model.v * model.q);
        for (std::size_t k = 0; k < n; ++k) {
            const SubjectTable& s = train.subjects[k];
            std::copy(s.x_shared.data(), s.x_shared.data() + s.x_shared.size(), x.data() + k * d);
            x(k, d - 1) = 1.0; // intercept column
            std::copy(s.x_target->data(), s.x_target->data() + s.x_target->size(),
                      y.data() + k * y.cols());
        }
        Matrix beta = normal_equations(x, y, model.ridge_used);
        model.weight = Matrix(d - 1, y.cols());
        std::copy(beta.data(), beta.data() + model.weight.size(), model.weight.data());
        model.bias = Matrix(1, y.cols());
        std::copy(beta.data() + model.weight.size(), beta.data() + beta.size(),
                  model.bias.data());
    } else {
        const std::size_t d = model.p + 1;
        Matrix x(n, d), y(n, model.q);
        for (std::size_t i = 0; i < model.v; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                const SubjectTable& s = train.subjects[k];
                for (std::size_t j = 0; j < model.p; ++j) x(k, j) = s.x_shared(i, j);
                x(k, d - 1) = 1.0;
                for (std::size_t m = 0; m < model.q; ++m) y(k, m) = (*s.x_target)(i, m);
            }
            Matrix beta = normal_equations(x, y, model.ridge_used);
            Matrix w(model.p, model.q), b(1, model.q);
            std::copy(beta.data(), beta.data() + w.size(), w.data());
            std::copy(beta.data() + w.size(), beta.data() + beta.size(), b.data());
            model.roi_weights.push_back(std::move(w));
            model.roi_biases.push_back(std::move(b));
        }
    }
    return model;
}

void MlpTrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning rate must be positive and finite");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    for (const std::size_t h : hidden)
        if (h == 0) throw ConfigError("hidden widths must be positive");
}

Matrix MlpRegressor::predict(const Matrix& x_shared) {
    check_input_shape(v, p, x_shared);
    Matrix z(v, p);
    for (std::size_t i = 0; i < v; ++i)
        for (std::size_t j = 0; j < p; ++j)
            z(i, j) = (x_shared(i, j) - feat_mean(i, j)) / feat_sd(i, j);
    Tape t;
    ParamBinder pb(t, /*track=*/false);
    Var out = net.forward(pb, t.constant(flatten_row(z)));
    Matrix pred(v, q);
    const Matrix& row = t.value(out);
    std::copy(row.data(), row.data() + row.size(), pred.data());
    return pred;
}

MlpFitResult fit_mlp_regressor(const Cohort& train, const MlpTrainConfig& cfg) {
    cfg.validate();
    check_trainable(train, 1, "regressor fitting");
    const DatasetSchema& schema = train.schema;
    const std::size_t n = train.size();

    MlpFitResult res;
    MlpRegressor& model = res.model;
    model.v = schema.v();
    model.p = schema.p();
    model.q = schema.q();
    model.cfg = cfg;
    stamp_schema(model.fingerprint, model.roi_names, model.shared_names, model.target_names,
                 schema);

    model.feat_mean = Matrix(model.v, model.p);
    model.feat_sd = Matrix::constant(model.v, model.p, 1.0);
    for (std::size_t i = 0; i < model.v; ++i)
        for (std::size_t j = 0; j < model.p; ++j) {
            double mean = 0.0;
            for (const SubjectTable& s : train.subjects) mean += s.x_shared(i, j);
            mean /= static_cast<double>(n);
            double ss = 0.0;
            for (const SubjectTable& s : train.subjects) {
                const double d = s.x_shared(i, j) - mean;
                ss += d * d;
            }
            const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
            model.feat_mean(i, j) = mean;
            model.feat_sd(i, j) = sd < kSdFloor ? 1.0 : sd;
        }

    std::vector<std::size_t> dims{model.v * model.p};
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(model.v * model.q);
    SeededRng init_rng(mix_seed(cfg.seed, "init"));
    model.net = Mlp(dims, init_rng);

    // Standardized inputs and flattened raw targets, computed once.
    std::vector<Matrix> xs, ys;
    xs.reserve(n);
    ys.reserve(n);
    for (const SubjectTable& s : train.subjects) {
        Matrix z(model.v, model.p);
        for (std::size_t i = 0; i < model.v; ++i)
            for (std::size_t j = 0; j < model.p; ++j)
                z(i, j) = (s.x_shared(i, j) - model.feat_mean(i, j)) / model.feat_sd(i, j);
        xs.push_back(flatten_row(z));
        ys.push_back(flatten_row(*s.x_target));
    }

    AdamOptimizer adam({cfg.learning_rate, 0.9, 0.999, 1e-8});
    SeededRng shuffle_rng(mix_seed(cfg.seed, "shuffle"));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = std::min(cfg.batch_size, n);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0, batch_no = 1; start < n; start += batch, ++batch_no) {
            const std::size_t stop = std::min(start + batch, n);
            Tape tape;
            ParamBinder pb(tape);
            Var total;
            for (std::size_t k = start; k < stop; ++k) {
                Var pred = model.net.forward(pb, tape.constant(xs[order[k]]));
                Var li = tape.sum(tape.square(tape.sub(pred, tape.constant(ys[order[k]]))));
                total = total.valid() ? tape.add(total, li) : li;
            }
            const double batch_sum = tape.value(total)(0, 0);
            if (!std::isfinite(batch_sum))
                throw TrainingError("loss became non-finite at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(batch_no));
            loss_sum += batch_sum;
            Var mean = tape.mul_const(total, 1.0 / static_cast<double>(stop - start));
            tape.backward(mean);
            adam.begin_step();
            model.net.visit("net", [&](const std::string& name, Matrix& param) {
                adam.update(name, param, tape.gradient(pb.var_of(param)));
            });
        }
        EpochStats st;
        st.epoch = epoch;
        st.loss_imputation = loss_sum / static_cast<double>(n);
        st.loss_total = st.loss_imputation;
        res.log.epochs.push_back(st);
    }
    if (!res.log.epochs.empty()) model.final_loss = res.log.epochs.back().loss_total;
    return res;
}

PredictionBlock impute(const LinearModel& model, const Cohort& cohort,
                       const std::string& method_tag) {
    return impute_with(model, cohort, method_tag,
                       [&](const Matrix& x) { return model.predict(x); });
}

PredictionBlock impute(MlpRegressor& model, const Cohort& cohort,
                       const std::string& method_tag) {
    return impute_with(model, cohort, method_tag,
                       [&](const Matrix& x) { return model.predict(x); });
}

void save_baseline(const LinearModel& model, const std::string& path) {
    Checkpoint ckpt;
    nlohmann::ordered_json& h = ckpt.header;
    h["model_kind"] = model.scope == LinearScope::Direct ? "linear-direct" : "linear-roi";
    h["config"] = {{"v", model.v}, {"p", model.p}, {"q", model.q}};
    h["ridge_used"] = model.ridge_used;
    h["fingerprint"] = model.fingerprint;
    h["schema"] = schema_header(model.roi_names, model.shared_names, model.target_names);
    if (model.scope == LinearScope::Direct) {
        ckpt.matrices.emplace_back("weight", model.weight);
        ckpt.matrices.emplace_back("bias", model.bias);
    } else {
        for (std::size_t i = 0; i < model.v; ++i) {
            ckpt.matrices.emplace_back("roi" + std::to_string(i) + ".w", model.roi_weights[i]);
            ckpt.matrices.emplace_back("roi" + std::to_string(i) + ".b", model.roi_biases[i]);
        }
    }
    save_checkpoint(ckpt, path);
}

void save_baseline(MlpRegressor& model, const std::string& path) {
    Checkpoint ckpt;
    nlohmann::ordered_json& h = ckpt.header;
    h["model_kind"] = "mlp";
    h["config"] = {{"v", model.v},
                   {"p", model.p},
                   {"q", model.q},
                   {"hidden", model.cfg.hidden},
                   {"epochs", model.cfg.epochs},
                   {"learning_rate", model.cfg.learning_rate},
                   {"batch_size", model.cfg.batch_size},
                   {"seed", model.cfg.seed}};
    h["final_loss"] = model.final_loss;
    h["fingerprint"] = model.fingerprint;
    h["schema"] = schema_header(model.roi_names, model.shared_names, model.target_names);
    model.net.visit("net", [&](const std::string& name, Matrix& m) {
        ckpt.matrices.emplace_back(name, m);
    });
    ckpt.matrices.emplace_back("feat.mean", model.feat_mean);
    ckpt.matrices.emplace_back("feat.sd", model.feat_sd);
    save_checkpoint(ckpt, path);
}

LinearModel load_linear(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    expect_kind(ckpt, "linear-direct", "linear-roi");
    LinearModel model;
    model.scope = ckpt.field("model_kind").get<std::string>() == "linear-direct"
                      ? LinearScope::Direct
                      : LinearScope::PerRoi;
    const auto& jc = ckpt.field("config");
    model.v = jc.at("v").get<std::size_t>();
    model.p = jc.at("p").get<std::size_t>();
    model.q = jc.at("q").get<std::size_t>();
    model.ridge_used = ckpt.field("ridge_used").get<bool>();
    read_schema_header(ckpt, model.fingerprint, model.roi_names, model.shared_names,
                       model.target_names);

    std::map<std::string, Matrix> by_name;
    for (auto& [name, m] : ckpt.matrices) {
        if (!by_name.emplace(name, std::move(m)).second)
            throw FormatError("checkpoint carries tensor '" + name + "' twice");
    }
    auto take = [&](const std::string& name, std::size_t r, std::size_t c) {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw FormatError("checkpoint is missing tensor '" + name + "'");
        Matrix m = std::move(it->second);
        by_name.erase(it);
        if (m.rows() != r || m.cols() != c)
            throw FormatError("tensor '" + name + "' is " + m.shape() + ", expected " +
                              std::to_string(r) + "x" + std::to_string(c));
        return m;
    };
    if (model.scope == LinearScope::Direct) {
        model.weight = take("weight", model.v * model.p, model.v * model.q);
        model.bias = take("bias", 1, model.v * model.q);
    } else {
        for (std::size_t i = 0; i < model.v; ++i) {
            model.roi_weights.push_back(take("roi" + std::to_string(i) + ".w", model.p, model.q));
            model.roi_biases.push_back(take("roi" + std::to_string(i) + ".b", 1, model.q));
        }
    }
    if (!by_name.empty())
        throw FormatError("checkpoint carries unknown tensor '" + by_name.begin()->first + "'");
    return model;
}

MlpRegressor load_mlp(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    expect_kind(ckpt, "mlp", "");
    MlpRegressor model;
    const auto& jc = ckpt.field("config");
    model.v = jc.at("v").get<std::size_t>();
    model.p = jc.at("p").get<std::size_t>();
    model.q = jc.at("q").get<std::size_t>();
    model.cfg.hidden = jc.at("hidden").get<std::vector<std::size_t>>();
    model.cfg.epochs = jc.at("epochs").get<std::size_t>();
    model.cfg.learning_rate = jc.at("learning_rate").get<double>();
    model.cfg.batch_size = jc.at("batch_size").get<std::size_t>();
    model.cfg.seed = jc.at("seed").get<std::uint64_t>();
    model.final_loss = ckpt.field("final_loss").get<double>();
    read_schema_header(ckpt, model.fingerprint, model.roi_names, model.shared_names,
                       model.target_names);

    std::vector<std::size_t> dims{model.v * model.p};
    dims.insert(dims.end(), model.cfg.hidden.begin(), model.cfg.hidden.end());
    dims.push_back(model.v * model.q);
    SeededRng scratch_rng(0);
    model.net = Mlp(dims, scratch_rng);
    model.feat_mean = Matrix(model.v, model.p);
    model.feat_sd = Matrix(model.v, model.p);

    std::map<std::string, Matrix*> slots;
    model.net.visit("net", [&](const std::string& name, Matrix& m) { slots[name] = &m; });
    slots["feat.mean"] = &model.feat_mean;
    slots["feat.sd"] = &model.feat_sd;
    std::set<std::string> filled;
    for (auto& [name, value] : ckpt.matrices) {
        auto it = slots.find(name);
        if (it == slots.end())
            throw FormatError("checkpoint carries unknown tensor '" + name + "'");
        if (!filled.insert(name).second)
            throw FormatError("checkpoint carries tensor '" + name + "' twice");
        if (it->second->rows() != value.rows() || it->second->cols() != value.cols())
            throw FormatError("tensor '" + name + "' is " + value.shape() + ", expected " +
                              it->second->shape());
        *it->second = std::move(value);
    }
    for (const auto& [name, ptr] : slots)
        if (!filled.count(name)) throw FormatError("checkpoint is missing tensor '" + name + "'");
    return model;
}

std::string checkpoint_model_kind(const std::string& path) {
    return load_checkpoint(path).field("model_kind").get<std::string>();
}

} // namespace dagi
