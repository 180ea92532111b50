#include "dagi/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "dagi/adam.hpp"
#include "dagi/checkpoint.hpp"
#include "dagi/errors.hpp"
#include "dagi/rng.hpp"

#include <nlohmann/json.hpp>

namespace dagi {

namespace {

constexpr double kProbFloor = 1e-12; // matches the tape's log/sigmoid clamping
constexpr double kSdFloor = 1e-12;   // stddev below this standardizes by 1

void require(bool ok, const std::string& what) {
    if (!ok) throw ContractError(what);
}

} // namespace

std::string encoder_kind_name(EncoderKind kind) {
    return kind == EncoderKind::Gin ? "gin" : "gcn";
}

EncoderKind encoder_kind_from_name(const std::string& s) {
    if (s == "gin") return EncoderKind::Gin;
    if (s == "gcn") return EncoderKind::Gcn;
    throw ConfigError("unknown encoder kind '" + s + "' (expected 'gin' or 'gcn')");
}

void ModelConfig::validate() const {
    if (v == 0) throw ConfigError("model needs at least one node");
    if (p == 0) throw ConfigError("model needs at least one shared measurement");
    if (q == 0) throw ConfigError("model needs at least one target measurement");
    if (embed_width == 0) throw ConfigError("embedding width must be positive");
    if (classifier_hidden == 0) throw ConfigError("classifier hidden width must be positive");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning rate must be positive and finite");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (!(lambda_cls >= 0.0) || !std::isfinite(lambda_cls))
        throw ConfigError("classifier loss weight must be nonnegative and finite");
}

std::string TrainLog::to_csv() const {
    std::string out = "epoch,loss_imputation,loss_classifier,loss_total\n";
    for (const EpochStats& e : epochs) {
        out += std::to_string(e.epoch);
        out += ',';
        out += format_double(e.loss_imputation);
        out += ',';
        out += format_double(e.loss_classifier);
        out += ',';
        out += format_double(e.loss_total);
        out += '\n';
    }
    return out;
}

DagiModel::DagiModel(const ModelConfig& config, const RoiGraph& g, SeededRng& init_rng)
    : cfg(config), graph(g) {
    cfg.validate();
    if (graph.node_count() != cfg.v)
        throw ConfigError("graph has " + std::to_string(graph.node_count()) +
                          " nodes but the model expects " + std::to_string(cfg.v));
    const std::size_t r = cfg.embed_width;
    // The classifier is always drawn, whatever the training mode, so the
    // parameter stream (and with it every other tensor) is mode-independent.
    if (cfg.encoder == EncoderKind::Gin) {
        enc1 = GinLayer({cfg.p, r, r}, init_rng);
        enc2 = GinLayer({r, r, r}, init_rng);
        dec = GinLayer({r, r, r, r, cfg.q}, init_rng);
        classifier = Mlp({r, cfg.classifier_hidden, 1}, init_rng);
    } else {
        norm_adj = gcn_normalized_adjacency(graph.adjacency);
        genc1 = GcnLayer(cfg.p, r, init_rng);
        genc2 = GcnLayer(r, r, init_rng);
        gdec_mlp = Mlp({r, r, r, r, cfg.q}, init_rng);
        classifier = Mlp({r, cfg.classifier_hidden, 1}, init_rng);
    }
    bn1 = BatchNorm(r);
    bn2 = BatchNorm(r);
    feat_mean = Matrix(cfg.v, cfg.p);
    feat_sd = Matrix::constant(cfg.v, cfg.p, 1.0);
    shared_names.resize(cfg.p);
    target_names.resize(cfg.q);
}

Matrix DagiModel::standardize(const Matrix& x_shared_raw) const {
    if (x_shared_raw.rows() != cfg.v || x_shared_raw.cols() != cfg.p)
        throw ContractError("shared block is " + std::to_string(x_shared_raw.rows()) + "x" +
                            std::to_string(x_shared_raw.cols()) + ", expected " +
                            std::to_string(cfg.v) + "x" + std::to_string(cfg.p));
    Matrix out(x_shared_raw.rows(), x_shared_raw.cols());
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j)
            out(i, j) = (x_shared_raw(i, j) - feat_mean(i, j)) / feat_sd(i, j);
    return out;
}

namespace {

DagiModel::Vars gin_pipeline(DagiModel& m, ParamBinder& pb, Var h0, const Aggregation& agg,
                             bool train_mode) {
    Tape& t = pb.tape();
    Var h1 = t.relu(m.bn1.forward(pb, m.enc1.forward(pb, h0, agg), train_mode));
    Var h2 = t.relu(m.bn2.forward(pb, m.enc2.forward(pb, h1, agg), train_mode));
    DagiModel::Vars out;
    out.x_hat = m.dec.forward(pb, h2, agg);
    out.embeddings = h2;
    if (m.classifier_active) {
        Var pooled = global_mean_pool(t, h2);
        out.sex_prob = t.sigmoid(m.classifier.forward(pb, pooled));
        out.has_sex_prob = true;
    }
    return out;
}

} // namespace

DagiModel::Vars DagiModel::forward_vars(ParamBinder& pb, const Matrix& x_shared_raw,
                                        bool train_mode) {
    Tape& t = pb.tape();
    Var h0 = t.constant(standardize(x_shared_raw));
    if (cfg.encoder == EncoderKind::Gin)
        return gin_pipeline(*this, pb, h0, Aggregation::over(graph.neighbors), train_mode);
    Var h1 = t.relu(bn1.forward(pb, genc1.propagate(pb, h0, norm_adj), train_mode));
    Var h2 = t.relu(bn2.forward(pb, genc2.propagate(pb, h1, norm_adj), train_mode));
    Vars out;
    out.x_hat = gdec_mlp.forward(pb, t.matmul(t.constant(norm_adj), h2));
    out.embeddings = h2;
    if (classifier_active) {
        Var pooled = global_mean_pool(t, h2);
        out.sex_prob = t.sigmoid(classifier.forward(pb, pooled));
        out.has_sex_prob = true;
    }
    return out;
}

DagiModel::Vars DagiModel::forward_vars_masked(ParamBinder& pb, Var h0_standardized,
                                               Var edge_weights, bool train_mode) {
    if (cfg.encoder != EncoderKind::Gin)
        throw ContractError("edge masking requires a GIN-aggregation model; this model "
                            "uses the '" + encoder_kind_name(cfg.encoder) + "' encoder");
    return gin_pipeline(*this, pb, h0_standardized,
                        Aggregation::masked(graph.edge_list, edge_weights), train_mode);
}

ForwardResult DagiModel::forward(const Matrix& x_shared_raw) {
    Tape t;
    ParamBinder pb(t, /*track=*/false);
    Vars v = forward_vars(pb, x_shared_raw, /*train_mode=*/false);
    ForwardResult out;
    out.x_hat = t.value(v.x_hat);
    out.embeddings = t.value(v.embeddings);
    if (v.has_sex_prob) out.sex_prob = t.value(v.sex_prob)(0, 0);
    return out;
}

double DagiModel::classify(const Matrix& x_shared_raw) {
    if (!classifier_active)
        throw ContractError("this model was trained without its classifier head; "
                            "it cannot produce demographic probabilities");
    return *forward(x_shared_raw).sex_prob;
}

void DagiModel::visit_params(const ParamVisitor& v) {
    if (cfg.encoder == EncoderKind::Gin) {
        enc1.visit("enc1", v);
        bn1.visit("bn1", v);
        enc2.visit("enc2", v);
        bn2.visit("bn2", v);
        dec.visit("dec", v);
    } else {
        genc1.visit("enc1", v);
        bn1.visit("bn1", v);
        genc2.visit("enc2", v);
        bn2.visit("bn2", v);
        gdec_mlp.visit("dec", v);
    }
    if (classifier_active) classifier.visit("cls", v);
}

void DagiModel::visit_state(const ParamVisitor& v) {
    if (cfg.encoder == EncoderKind::Gin) {
        enc1.visit("enc1", v);
        bn1.visit_state("bn1", v);
        enc2.visit("enc2", v);
        bn2.visit_state("bn2", v);
        dec.visit("dec", v);
    } else {
        genc1.visit("enc1", v);
        bn1.visit_state("bn1", v);
        genc2.visit("enc2", v);
        bn2.visit_state("bn2", v);
        gdec_mlp.visit("dec", v);
    }
    if (classifier_active) classifier.visit("cls", v);
    v("feat.mean", feat_mean);
    v("feat.sd", feat_sd);
}

double loss_imputation(const Matrix& x_hat, const Matrix& x_true) {
    if (x_hat.rows() != x_true.rows() || x_hat.cols() != x_true.cols())
        throw ContractError("imputation loss needs matching shapes");
    double s = 0.0;
    for (std::size_t i = 0; i < x_hat.size(); ++i) {
        const double d = x_hat.data()[i] - x_true.data()[i];
        s += d * d;
    }
    return s;
}

Var loss_imputation_var(Tape& t, Var x_hat, const Matrix& x_true) {
    return t.sum(t.square(t.sub(x_hat, t.constant(x_true))));
}

double loss_classifier(double sex_prob, int y) {
    if (y != 0 && y != 1) throw ContractError("label must be 0 or 1");
    const double p = std::clamp(sex_prob, kProbFloor, 1.0 - kProbFloor);
    return y == 1 ? -std::log(p) : -std::log(1.0 - p);
}

Var loss_classifier_var(Tape& t, Var sex_prob, int y) {
    if (y != 0 && y != 1) throw ContractError("label must be 0 or 1");
    // 1x1 probability; the tape's log clamping keeps the loss finite at the
    // sigmoid's saturation limits.
    Var p = y == 1 ? sex_prob : t.add_const(t.mul_const(sex_prob, -1.0), 1.0);
    return t.mul_const(t.log_clamped(p), -1.0);
}

TrainResult train(const Cohort& data, const ModelConfig& mcfg, const TrainConfig& tcfg,
                  const RoiGraph& graph) {
    mcfg.validate();
    tcfg.validate();
    const DatasetSchema& schema = data.schema;
    if (schema.v() != mcfg.v || schema.p() != mcfg.p || schema.q() != mcfg.q)
        throw ConfigError("model dimensions (" + std::to_string(mcfg.v) + " nodes, " +
                          std::to_string(mcfg.p) + " shared, " + std::to_string(mcfg.q) +
                          " target) do not match the dataset (" + std::to_string(schema.v()) +
                          ", " + std::to_string(schema.p()) + ", " + std::to_string(schema.q()) +
                          ")");
    {
        const std::string d = name_list_diff("graph nodes vs dataset rows", graph.node_names,
                                         schema.roi_names);
        if (!d.empty()) throw SchemaError(d);
    }
    const std::size_t n = data.size();
    require(n >= 1, "training needs at least one subject");
    require(data.has_targets, "training needs target measurements on every subject");
    for (const SubjectTable& s : data.subjects)
        require(s.x_target.has_value(),
                "subject '" + s.subject_id + "' lacks a target block");
    if (tcfg.batch_size > n)
        throw ConfigError("batch size " + std::to_string(tcfg.batch_size) +
                          " exceeds the " + std::to_string(n) + "-subject cohort");
    std::vector<int> labels;
    if (tcfg.classifier_enabled) labels = data.labels();

    SeededRng init_rng(mix_seed(tcfg.seed, "init"));
    TrainResult res{DagiModel(mcfg, graph, init_rng), TrainLog{}};
    DagiModel& model = res.model;
    model.train_cfg = tcfg;
    model.classifier_active = tcfg.classifier_enabled;
    model.fingerprint = schema.fingerprint();
    model.shared_names = schema.shared_measurements;
    model.target_names = schema.target_measurements;

    // Input standardization statistics per (node, measurement), from the
    // training cohort only; near-constant columns standardize by 1.
    for (std::size_t i = 0; i < mcfg.v; ++i) {
        for (std::size_t j = 0; j < mcfg.p; ++j) {
            double mean = 0.0;
            for (const SubjectTable& s : data.subjects) mean += s.x_shared(i, j);
            mean /= static_cast<double>(n);
            double ss = 0.0;
            for (const SubjectTable& s : data.subjects) {
                const double d = s.x_shared(i, j) - mean;
                ss += d * d;
            }
            const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
            model.feat_mean(i, j) = mean;
            model.feat_sd(i, j) = sd < kSdFloor ? 1.0 : sd;
        }
    }

    AdamOptimizer adam({tcfg.learning_rate, 0.9, 0.999, 1e-8});
    SeededRng shuffle_rng(mix_seed(tcfg.seed, "shuffle"));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double imp_sum = 0.0, cls_sum = 0.0;
        for (std::size_t start = 0, batch_no = 1; start < n; start += tcfg.batch_size, ++batch_no) {
            const std::size_t stop = std::min(start + tcfg.batch_size, n);
            const double inv = 1.0 / static_cast<double>(stop - start);
            Tape tape;
            ParamBinder pb(tape);
            Var imp_total, cls_total;
            for (std::size_t k = start; k < stop; ++k) {
                const SubjectTable& subj = data.subjects[order[k]];
                DagiModel::Vars fv = model.forward_vars(pb, subj.x_shared, /*train_mode=*/true);
                Var li = loss_imputation_var(tape, fv.x_hat, *subj.x_target);
                imp_total = imp_total.valid() ? tape.add(imp_total, li) : li;
                if (tcfg.classifier_enabled) {
                    Var lc = loss_classifier_var(tape, fv.sex_prob, labels[order[k]]);
                    cls_total = cls_total.valid() ? tape.add(cls_total, lc) : lc;
                }
            }
            Var total = tape.mul_const(imp_total, inv);
            if (tcfg.classifier_enabled)
                total = tape.add(total, tape.mul_const(tape.mul_const(cls_total, inv),
                                                       tcfg.lambda_cls));
            const double total_value = tape.value(total)(0, 0);
            if (!std::isfinite(total_value))
                throw TrainingError("loss became non-finite at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(batch_no));
            imp_sum += tape.value(imp_total)(0, 0);
            if (tcfg.classifier_enabled) cls_sum += tape.value(cls_total)(0, 0);

            tape.backward(total);
            adam.begin_step();
            model.visit_params([&](const std::string& name, Matrix& param) {
                adam.update(name, param, tape.gradient(pb.var_of(param)));
            });
        }
        EpochStats st;
        st.epoch = epoch;
        st.loss_imputation = imp_sum / static_cast<double>(n);
        st.loss_classifier = cls_sum / static_cast<double>(n);
        st.loss_total = st.loss_imputation + tcfg.lambda_cls * st.loss_classifier;
        res.log.epochs.push_back(st);
    }
    if (!res.log.epochs.empty()) {
        const EpochStats& last = res.log.epochs.back();
        model.final_loss_imputation = last.loss_imputation;
        model.final_loss_classifier = last.loss_classifier;
        model.final_loss_total = last.loss_total;
        model.trained = true;
    }
    return res;
}

ImputeResult impute(DagiModel& model, const Cohort& cohort, const std::string& method_tag) {
    if (cohort.schema.fingerprint() != model.fingerprint) {
        std::string msg = "dataset does not match the columns this model was fit to";
        for (const std::string& d :
             {name_list_diff("node names", model.graph.node_names, cohort.schema.roi_names),
              name_list_diff("shared measurements", model.shared_names,
                             cohort.schema.shared_measurements)})
            if (!d.empty()) msg += "; " + d;
        throw SchemaError(msg);
    }
    ImputeResult out;
    out.block.method_tag = method_tag;
    out.block.roi_names = model.graph.node_names;
    out.block.measurement_names = model.target_names;
    for (const SubjectTable& subj : cohort.subjects) {
        ForwardResult fr = model.forward(subj.x_shared);
        out.block.subject_ids.push_back(subj.subject_id);
        out.block.values.push_back(std::move(fr.x_hat));
        if (fr.sex_prob) out.sex_probs.push_back(*fr.sex_prob);
    }
    out.block.validate();
    return out;
}

void save_model(DagiModel& model, const std::string& path) {
    Checkpoint ckpt;
    nlohmann::ordered_json& h = ckpt.header;
    h["model_kind"] = encoder_kind_name(model.cfg.encoder);
    h["config"] = {{"v", model.cfg.v},
                   {"p", model.cfg.p},
                   {"q", model.cfg.q},
                   {"embed_width", model.cfg.embed_width},
                   {"classifier_hidden", model.cfg.classifier_hidden}};
    h["classifier_enabled"] = model.classifier_active;
    h["trained"] = model.trained;
    h["train_config"] = {{"learning_rate", model.train_cfg.learning_rate},
                         {"batch_size", model.train_cfg.batch_size},
                         {"epochs", model.train_cfg.epochs},
                         {"lambda_cls", model.train_cfg.lambda_cls},
                         {"seed", model.train_cfg.seed},
                         {"classifier_enabled", model.train_cfg.classifier_enabled}};
    h["final_losses"] = {{"imputation", model.final_loss_imputation},
                         {"classifier", model.final_loss_classifier},
                         {"total", model.final_loss_total}};
    h["fingerprint"] = model.fingerprint;
    h["schema"] = {{"roi_names", model.graph.node_names},
                   {"shared_measurements", model.shared_names},
                   {"target_measurements", model.target_names}};
    nlohmann::ordered_json edges = nlohmann::ordered_json::array();
    for (const auto& [a, b] : model.graph.edge_list) edges.push_back({a, b});
    h["graph_edges"] = std::move(edges);
    model.visit_state([&](const std::string& name, Matrix& m) {
        ckpt.matrices.emplace_back(name, m);
    });
    save_checkpoint(ckpt, path);
}

DagiModel load_model(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);

    ModelConfig mcfg;
    mcfg.encoder = encoder_kind_from_name(ckpt.field("model_kind").get<std::string>());
    const auto& jc = ckpt.field("config");
    mcfg.v = jc.at("v").get<std::size_t>();
    mcfg.p = jc.at("p").get<std::size_t>();
    mcfg.q = jc.at("q").get<std::size_t>();
    mcfg.embed_width = jc.at("embed_width").get<std::size_t>();
    mcfg.classifier_hidden = jc.at("classifier_hidden").get<std::size_t>();
    mcfg.validate();

    const auto& js = ckpt.field("schema");
    std::vector<std::string> roi_names = js.at("roi_names").get<std::vector<std::string>>();
    EdgeList edges;
    for (const auto& e : ckpt.field("graph_edges"))
        edges.emplace_back(e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>());
    RoiGraph graph = make_graph(std::move(roi_names), edges);

    SeededRng scratch_rng(0); // every drawn tensor is overwritten below
    DagiModel model(mcfg, graph, scratch_rng);
    model.classifier_active = ckpt.field("classifier_enabled").get<bool>();
    model.trained = ckpt.field("trained").get<bool>();
    const auto& jt = ckpt.field("train_config");
    model.train_cfg.learning_rate = jt.at("learning_rate").get<double>();
    model.train_cfg.batch_size = jt.at("batch_size").get<std::size_t>();
    model.train_cfg.epochs = jt.at("epochs").get<std::size_t>();
    model.train_cfg.lambda_cls = jt.at("lambda_cls").get<double>();
    model.train_cfg.seed = jt.at("seed").get<std::uint64_t>();
    model.train_cfg.classifier_enabled = jt.at("classifier_enabled").get<bool>();
    const auto& jl = ckpt.field("final_losses");
    model.final_loss_imputation = jl.at("imputation").get<double>();
    model.final_loss_classifier = jl.at("classifier").get<double>();
    model.final_loss_total = jl.at("total").get<double>();
    model.fingerprint = ckpt.field("fingerprint").get<std::uint64_t>();
    model.shared_names = js.at("shared_measurements").get<std::vector<std::string>>();
    model.target_names = js.at("target_measurements").get<std::vector<std::string>>();
    if (model.shared_names.size() != mcfg.p || model.target_names.size() != mcfg.q)
        throw FormatError("checkpoint schema lists " + std::to_string(model.shared_names.size()) +
                          " shared and " + std::to_string(model.target_names.size()) +
                          " target measurements, inconsistent with its own config");

    std::map<std::string, Matrix*> slots;
    model.visit_state([&](const std::string& name, Matrix& m) { slots[name] = &m; });
    std::set<std::string> filled;
    for (auto& [name, value] : ckpt.matrices) {
        auto it = slots.find(name);
        if (it == slots.end())
            throw FormatError("checkpoint carries unknown tensor '" + name + "'");
        if (!filled.insert(name).second)
            throw FormatError("checkpoint carries tensor '" + name + "' twice");
        if (it->second->rows() != value.rows() || it->second->cols() != value.cols())
            throw FormatError("tensor '" + name + "' is " + std::to_string(value.rows()) + "x" +
                              std::to_string(value.cols()) + ", expected " +
                              std::to_string(it->second->rows()) + "x" +
                              std::to_string(it->second->cols()));
        *it->second = std::move(value);
    }
    for (const auto& [name, ptr] : slots)
        if (!filled.count(name)) throw FormatError("checkpoint is missing tensor '" + name + "'");
    return model;
}

} // namespace dagi
