#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <doctest.h>

#include "dagi/checkpoint.hpp"
#include "dagi/datagen.hpp"
#include "dagi/errors.hpp"
#include "dagi/metrics.hpp"
#include "dagi/model.hpp"
#include "testutil.hpp"

using namespace dagi;

namespace {

std::string tmp_path(const std::string& name) { return "/tmp/dagi_test_" + name; }

RoiGraph ring_graph(std::size_t v) {
    std::vector<std::string> names;
    EdgeList edges;
    for (std::size_t i = 0; i < v; ++i) {
        names.push_back("node" + std::to_string(i));
        edges.emplace_back(static_cast<std::uint32_t>(i),
                           static_cast<std::uint32_t>((i + 1) % v));
    }
    return make_graph(names, edges);
}

SynthConfig small_cfg(std::size_t n_source, std::size_t n_target, std::uint64_t seed = 3) {
    SynthConfig cfg;
    cfg.v = 8;
    cfg.n_source = n_source;
    cfg.n_target = n_target;
    cfg.neighbor_coupling = 0.4;
    cfg.noise_sd = 0.1;
    cfg.seed = seed;
    return cfg;
}

ModelConfig small_model_cfg(std::size_t v = 8, std::size_t embed = 16) {
    ModelConfig m;
    m.v = v;
    m.embed_width = embed;
    m.classifier_hidden = 8;
    return m;
}

TrainConfig quick_train(std::size_t epochs, std::uint64_t seed = 11, std::size_t batch = 8) {
    TrainConfig t;
    t.epochs = epochs;
    t.batch_size = batch;
    t.seed = seed;
    return t;
}

std::map<std::string, Matrix> snapshot(DagiModel& m) {
    std::map<std::string, Matrix> out;
    m.visit_state([&](const std::string& name, Matrix& v) { out.emplace(name, v); });
    return out;
}

} // namespace

TEST_CASE("fresh model: finite outputs and a probability strictly inside (0,1)") {
    RoiGraph g = ring_graph(8);
    SeededRng init(5);
    DagiModel model(small_model_cfg(), g, init);
    SeededRng in_rng(9);
    const Matrix x = in_rng.normal_matrix(8, 3);
    ForwardResult fr = model.forward(x);
    REQUIRE(fr.sex_prob.has_value());
    CHECK(*fr.sex_prob > 0.0);
    CHECK(*fr.sex_prob < 1.0);
    CHECK(fr.x_hat.rows() == 8);
    CHECK(fr.x_hat.cols() == 2);
    CHECK(fr.embeddings.rows() == 8);
    CHECK(fr.embeddings.cols() == 16);
    for (std::size_t i = 0; i < fr.x_hat.size(); ++i) CHECK(std::isfinite(fr.x_hat.data()[i]));
    for (std::size_t i = 0; i < fr.embeddings.size(); ++i)
        CHECK(std::isfinite(fr.embeddings.data()[i]));

    SUBCASE("identical inputs give identical eval outputs") {
        ForwardResult again = model.forward(x);
        CHECK(again.x_hat == fr.x_hat);
        CHECK(again.embeddings == fr.embeddings);
        CHECK(*again.sex_prob == *fr.sex_prob);
    }
    SUBCASE("wrong input shape is refused") {
        CHECK_THROWS_AS(model.forward(Matrix(8, 4)), ContractError);
        CHECK_THROWS_AS(model.forward(Matrix(7, 3)), ContractError);
    }
}

TEST_CASE("every single input entry reaches the outputs") {
    RoiGraph g = ring_graph(8);
    SeededRng init(17);
    DagiModel model(small_model_cfg(), g, init);
    SeededRng in_rng(2);
    const Matrix base = in_rng.normal_matrix(8, 3);
    const Matrix ref = model.forward(base).x_hat;
    for (std::size_t i = 0; i < 8; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            Matrix bumped = base;
            bumped(i, j) += 1.0;
            const Matrix out = model.forward(bumped).x_hat;
            CAPTURE(i);
            CAPTURE(j);
            CHECK(!(out == ref));
        }
    }
}

TEST_CASE("imputation loss: identity, hand arithmetic, analytic gradient") {
    SeededRng rng(23);
    const Matrix a = rng.normal_matrix(4, 3);
    CHECK(loss_imputation(a, a) == 0.0);

    const Matrix ones = Matrix::constant(2, 3, 1.0);
    CHECK(loss_imputation(ones, Matrix(2, 3)) == 6.0);
    CHECK_THROWS_AS(loss_imputation(Matrix(2, 3), Matrix(3, 2)), ContractError);

    const Matrix x_hat = testutil::safe_normal_matrix(rng, 3, 2);
    const Matrix x_true = testutil::safe_normal_matrix(rng, 3, 2);
    Tape t;
    Var vh = t.leaf(x_hat, true);
    Var loss = loss_imputation_var(t, vh, x_true);
    CHECK(t.value(loss)(0, 0) == doctest::Approx(loss_imputation(x_hat, x_true)).epsilon(1e-14));
    t.backward(loss);
    const Matrix& grad = t.gradient(vh);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(grad(i, j) == doctest::Approx(2.0 * (x_hat(i, j) - x_true(i, j))).epsilon(1e-12));

    auto fd = testutil::fd_check({x_hat}, [&](Tape& tape, const std::vector<Var>& vars) {
        return loss_imputation_var(tape, vars[0], x_true);
    });
    INFO(fd.worst);
    CHECK(fd.pass);
}

TEST_CASE("classifier loss: ln 2 center, saturation limits, logit gradient p - y") {
    CHECK(loss_classifier(0.5, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(loss_classifier(0.5, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(loss_classifier(1.0, 1) < 1e-9);   // y=1, prob -> 1: loss -> 0
    CHECK(loss_classifier(0.0, 0) < 1e-9);
    CHECK(std::isfinite(loss_classifier(0.0, 1))); // clamped, never infinite
    CHECK(std::isfinite(loss_classifier(1.0, 0)));
    CHECK_THROWS_AS(loss_classifier(0.5, 2), ContractError);

    for (const double logit : {-2.0, -0.3, 0.0, 0.7, 3.1}) {
        for (const int y : {0, 1}) {
            Tape t;
            Var vl = t.leaf(Matrix(1, 1, {logit}), true);
            Var prob = t.sigmoid(vl);
            Var loss = loss_classifier_var(t, prob, y);
            const double p = t.value(prob)(0, 0);
            CHECK(t.value(loss)(0, 0) == doctest::Approx(loss_classifier(p, y)).epsilon(1e-12));
            t.backward(loss);
            CHECK(t.gradient(vl)(0, 0) == doctest::Approx(p - y).epsilon(1e-10));
        }
    }

    auto fd = testutil::fd_check({Matrix(1, 1, {0.42})},
                                 [](Tape& tape, const std::vector<Var>& vars) {
                                     return loss_classifier_var(tape, tape.sigmoid(vars[0]), 1);
                                 });
    INFO(fd.worst);
    CHECK(fd.pass);
}

TEST_CASE("training standardizes inputs by per-entry training statistics") {
    RoiGraph g = ring_graph(8);
    GeneratedData data = generate(small_cfg(6, 2), g);
    // A constant column: stddev floors to 1 instead of dividing by ~0.
    for (SubjectTable& s : data.source.subjects) s.x_shared(0, 0) = 42.0;

    TrainResult tr = train(data.source, small_model_cfg(), quick_train(0, 1, 6), g);
    const std::size_t n = data.source.size();
    for (std::size_t i = 0; i < 8; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            double mean = 0.0;
            for (const SubjectTable& s : data.source.subjects) mean += s.x_shared(i, j);
            mean /= double(n);
            double ss = 0.0;
            for (const SubjectTable& s : data.source.subjects) {
                const double d = s.x_shared(i, j) - mean;
                ss += d * d;
            }
            CHECK(tr.model.feat_mean(i, j) == doctest::Approx(mean).epsilon(1e-14));
            const double sd = std::sqrt(ss / double(n - 1));
            if (i == 0 && j == 0)
                CHECK(tr.model.feat_sd(0, 0) == 1.0);
            else
                CHECK(tr.model.feat_sd(i, j) == doctest::Approx(sd).epsilon(1e-12));
        }
    }
    const Matrix z = tr.model.standardize(tr.model.feat_mean);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(z.data()[i] == 0.0);
}

TEST_CASE("training logs both losses and the exact weighted total") {
    RoiGraph g = ring_graph(8);
    GeneratedData data = generate(small_cfg(12, 2), g);
    TrainConfig tcfg = quick_train(3, 11, 5); // 12 subjects -> batches of 5/5/2
    tcfg.lambda_cls = 0.7;
    TrainResult tr = train(data.source, small_model_cfg(), tcfg, g);
    REQUIRE(tr.log.epochs.size() == 3);
    for (const EpochStats& e : tr.log.epochs) {
        CHECK(std::isfinite(e.loss_total));
        CHECK(e.loss_imputation >= 0.0);
        CHECK(e.loss_classifier >= 0.0);
        CHECK(e.loss_total == e.loss_imputation + 0.7 * e.loss_classifier);
    }
    CHECK(tr.model.final_loss_total == tr.log.epochs.back().loss_total);
    const std::string csv = tr.log.to_csv();
    CHECK(csv.find("epoch,loss_imputation,loss_classifier,loss_total\n") == 0);
    CHECK(csv.find("\n3,") != std::string::npos);
}

TEST_CASE("training is bit-reproducible for a fixed seed and moves with the seed") {
    RoiGraph g = ring_graph(8);
    GeneratedData data = generate(small_cfg(10, 2), g);
    TrainResult a = train(data.source, small_model_cfg(), quick_train(4, 21, 4), g);
    TrainResult b = train(data.source, small_model_cfg(), quick_train(4, 21, 4), g);
    REQUIRE(a.log.epochs.size() == b.log.epochs.size());
    for (std::size_t i = 0; i < a.log.epochs.size(); ++i) {
        CHECK(a.log.epochs[i].loss_total == b.log.epochs[i].loss_total);
        CHECK(a.log.epochs[i].loss_imputation == b.log.epochs[i].loss_imputation);
    }
    auto sa = snapshot(a.model), sb = snapshot(b.model);
    REQUIRE(sa.size() == sb.size());
    for (const auto& [name, m] : sa) {
        CAPTURE(name);
        CHECK(m == sb.at(name));
    }

    TrainResult c = train(data.source, small_model_cfg(), quick_train(4, 22, 4), g);
    auto sc = snapshot(c.model);
    bool any_differs = false;
    for (const auto& [name, m] : sa) any_differs = any_differs || !(m == sc.at(name));
    CHECK(any_differs);
}

TEST_CASE("zero classifier weight matches the classifier-free ablation exactly") {
    RoiGraph g = ring_graph(8);
    GeneratedData data = generate(small_cfg(10, 2), g);

    TrainConfig with_zero = quick_train(4, 31, 5);
    with_zero.lambda_cls = 0.0;
    TrainResult a = train(data.source, small_model_cfg(), with_zero, g);

    TrainConfig disabled = quick_train(4, 31, 5);
    disabled.classifier_enabled = false;
    TrainResult b = train(data.source, small_model_cfg(), disabled, g);

    REQUIRE(a.log.epochs.size() == b.log.epochs.size());
    for (std::size_t i = 0; i < a.log.epochs.size(); ++i)
        CHECK(a.log.epochs[i].loss_imputation == b.log.epochs[i].loss_imputation);
    CHECK(a.model.final_loss_imputation == b.model.final_loss_imputation);

    // Shared tensors agree bit-for-bit; only the classifier head is extra.
    auto sa = snapshot(a.model), sb = snapshot(b.model);
    for (const auto& [name, m] : sb) {
        CAPTURE(name);
        CHECK(m == sa.at(name));
    }
    CHECK(sa.size() == sb.size() + 4); // two dense classifier layers
}

TEST_CASE("training rejects bad setups with specific errors") {
    RoiGraph g = ring_graph(8);
    GeneratedData data = generate(small_cfg(6, 3), g);

    SUBCASE("batch larger than the cohort") {
        CHECK_THROWS_AS(train(data.source, small_model_cfg(), quick_train(1, 1, 7), g),
                        ConfigError);
    }
    SUBCASE("no target blocks") {
        CHECK_THROWS_AS(train(data.target, small_model_cfg(), quick_train(1, 1, 2), g),
                        ContractError);
    }
    SUBCASE("missing label with the classifier enabled") {
        Cohort c = data.source;
        c.subjects[2].label.reset();
        CHECK_THROWS_AS(train(c, small_model_cfg(), quick_train(1, 1, 2), g), ContractError);
        TrainConfig no_cls = quick_train(1, 1, 2);
        no_cls.classifier_enabled = false;
        CHECK_NOTHROW(train(c, small_model_cfg(), no_cls, g));
    }
    SUBCASE("dimension mismatch with the dataset") {
        ModelConfig wrong = small_model_cfg();
        wrong.p = 5;
        CHECK_THROWS_AS(train(data.source, wrong, quick_train(1, 1, 2), g), ConfigError);
    }
    SUBCASE("graph nodes disagree with dataset rows") {
        RoiGraph other = ring_graph(8);
        other.node_names[3] = "elsewhere";
        Cohort c = data.source;
        CHECK_THROWS_AS(train(c, small_model_cfg(), quick_train(1, 1, 2), other), SchemaError);
    }
    SUBCASE("exploding loss aborts with epoch context") {
        Cohort c = data.source;
        for (SubjectTable& s : c.subjects) *s.x_target = Matrix::constant(8, 2, 1e200);
        try {
            train(c, small_model_cfg(), quick_train(2, 1, 3), g);
            FAIL("expected a training error");
        } catch (const TrainingError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("epoch 1") != std::string::npos);
            CHECK(msg.find("batch") != std::string::npos);
        }
    }
}

TEST_CASE("eval-mode forwards are independent of tape co-tenants") {
    RoiGraph g = ring_graph(8);
    SeededRng init(41);
    DagiModel model(small_model_cfg(), g, init);
    SeededRng in_rng(6);
    std::vector<Matrix> inputs;
    for (int k = 0; k < 4; ++k) inputs.push_back(in_rng.normal_matrix(8, 3));

    Tape t;
    ParamBinder pb(t, false);
    std::vector<DagiModel::Vars> batched;
    for (const Matrix& x : inputs) batched.push_back(model.forward_vars(pb, x, false));
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        ForwardResult solo = model.forward(inputs[k]);
        const Matrix& joint = t.value(batched[k].x_hat);
        REQUIRE(joint.rows() == solo.x_hat.rows());
        for (std::size_t i = 0; i < joint.size(); ++i)
            CHECK(std::fabs(joint.data()[i] - solo.x_hat.data()[i]) <= 1e-12);
        CHECK(std::fabs(t.value(batched[k].sex_prob)(0, 0) - *solo.sex_prob) <= 1e-12);
    }
}

TEST_CASE("imputation convergence on generated data") {
    RoiGraph g = ring_graph(8);
    GeneratedData data = generate(small_cfg(64, 4, 7), g);
    TrainConfig tcfg = quick_train(300, 13, 32);
    TrainResult tr = train(data.source, small_model_cfg(8, 32), tcfg, g);
    REQUIRE(tr.log.epochs.size() == 300);
    const double first = tr.log.epochs.front().loss_imputation;
    const double last = tr.log.epochs.back().loss_imputation;
    INFO("first " << first << " last " << last);
    CHECK(last < 0.5 * first);
    CHECK(tr.log.epochs.back().loss_total < 0.5 * tr.log.epochs.front().loss_total);
}

TEST_CASE("impute mirrors forward, refuses foreign schemas, handles empty cohorts") {
    RoiGraph g = ring_graph(8);
    GeneratedData data = generate(small_cfg(16, 6), g);
    TrainResult tr = train(data.source, small_model_cfg(), quick_train(5, 3, 8), g);

    ImputeResult res = impute(tr.model, data.source, "dagi");
    REQUIRE(res.block.subject_ids.size() == 16);
    REQUIRE(res.sex_probs.size() == 16);
    CHECK(res.block.method_tag == "dagi");
    CHECK(res.block.measurement_names == data.source.schema.target_measurements);
    for (std::size_t k = 0; k < 16; ++k) {
        ForwardResult fr = tr.model.forward(data.source.subjects[k].x_shared);
        CHECK(res.block.values[k] == fr.x_hat);
        CHECK(res.sex_probs[k] == *fr.sex_prob);
    }
    // Inputs are never mutated by imputation.
    CHECK(data.source.subjects[0].x_shared == generate(small_cfg(16, 6), g).source.subjects[0].x_shared);

    SUBCASE("schema fingerprint mismatch is refused with a column diff") {
        Cohort other = data.target;
        other.schema.shared_measurements[1] = "renamed";
        try {
            impute(tr.model, other, "dagi");
            FAIL("expected a schema error");
        } catch (const SchemaError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("shared measurements") != std::string::npos);
            CHECK(msg.find("renamed") != std::string::npos);
        }
    }
    SUBCASE("empty cohort imputes to an empty block") {
        Cohort empty = data.target;
        empty.subjects.clear();
        ImputeResult r = impute(tr.model, empty, "dagi");
        CHECK(r.block.subject_ids.empty());
        CHECK(r.block.values.empty());
        CHECK(r.sex_probs.empty());
    }
}

TEST_CASE("held-out cohort error stays within twice the source test error") {
    RoiGraph g = ring_graph(8);
    SynthConfig scfg = small_cfg(96, 48, 19);
    GeneratedData data = generate(scfg, g);

    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < 96; ++i) (i < 64 ? train_idx : test_idx).push_back(i);
    Cohort train_set = subset(data.source, train_idx);
    Cohort test_set = subset(data.source, test_idx);

    TrainConfig tcfg = quick_train(80, 5, 16);
    TrainResult tr = train(train_set, small_model_cfg(8, 32), tcfg, g);

    auto mre_of = [&](const Cohort& cohort, const std::vector<Matrix>& truth) {
        std::vector<Matrix> pred = impute(tr.model, cohort, "dagi").block.values;
        return error_triple(pred, truth).overall.mre;
    };
    std::vector<Matrix> test_truth;
    for (const SubjectTable& s : test_set.subjects) test_truth.push_back(*s.x_target);
    const double source_mre = mre_of(test_set, test_truth);
    const double target_mre = mre_of(data.target, data.truth.truth.values);
    INFO("source test MRE " << source_mre << " target MRE " << target_mre);
    CHECK(source_mre > 0.0);
    CHECK(target_mre < 2.0 * source_mre);
}

TEST_CASE("checkpoint round-trip reproduces forward outputs bit-exactly") {
    RoiGraph g = ring_graph(8);
    GeneratedData data = generate(small_cfg(12, 2), g);
    TrainResult tr = train(data.source, small_model_cfg(), quick_train(6, 9, 6), g);
    const std::string path = tmp_path("model_roundtrip.ckpt");
    save_model(tr.model, path);
    DagiModel loaded = load_model(path);

    CHECK(loaded.cfg.encoder == EncoderKind::Gin);
    CHECK(loaded.cfg.embed_width == 16);
    CHECK(loaded.train_cfg.seed == 9);
    CHECK(loaded.train_cfg.epochs == 6);
    CHECK(loaded.fingerprint == data.source.schema.fingerprint());
    CHECK(loaded.final_loss_total == tr.model.final_loss_total);
    CHECK(loaded.graph.node_names == g.node_names);
    CHECK(loaded.graph.edge_list == g.edge_list);

    SeededRng in_rng(33);
    for (int k = 0; k < 10; ++k) {
        const Matrix x = in_rng.normal_matrix(8, 3);
        ForwardResult a = tr.model.forward(x);
        ForwardResult b = loaded.forward(x);
        CHECK(a.x_hat == b.x_hat);
        CHECK(a.embeddings == b.embeddings);
        CHECK(*a.sex_prob == *b.sex_prob);
    }
    std::filesystem::remove(path);
}

TEST_CASE("classifier-free checkpoints refuse demographic queries") {
    RoiGraph g = ring_graph(8);
    GeneratedData data = generate(small_cfg(10, 2), g);
    TrainConfig tcfg = quick_train(2, 7, 5);
    tcfg.classifier_enabled = false;
    TrainResult tr = train(data.source, small_model_cfg(), tcfg, g);
    CHECK_THROWS_AS(tr.model.classify(data.source.subjects[0].x_shared), ContractError);

    const std::string path = tmp_path("model_gi.ckpt");
    save_model(tr.model, path);
    DagiModel loaded = load_model(path);
    CHECK(loaded.classifier_active == false);
    CHECK(loaded.train_cfg.classifier_enabled == false);
    CHECK_THROWS_AS(loaded.classify(data.source.subjects[0].x_shared), ContractError);
    ImputeResult r = impute(loaded, data.target, "gi");
    CHECK(r.sex_probs.empty());
    CHECK(r.block.subject_ids.size() == 2);
    CHECK(r.block.values[0].rows() == 8);
    std::filesystem::remove(path);
}

TEST_CASE("model checkpoints with missing or foreign tensors are refused") {
    RoiGraph g = ring_graph(8);
    GeneratedData data = generate(small_cfg(8, 2), g);
    TrainResult tr = train(data.source, small_model_cfg(), quick_train(1, 2, 4), g);
    const std::string path = tmp_path("model_tamper.ckpt");
    save_model(tr.model, path);

    SUBCASE("renamed tensor reported as unknown") {
        Checkpoint c = load_checkpoint(path);
        c.matrices[0].first = "enc9.mystery";
        save_checkpoint(c, path);
        try {
            load_model(path);
            FAIL("expected a format error");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("enc9.mystery") != std::string::npos);
        }
    }
    SUBCASE("dropped tensor reported as missing") {
        Checkpoint c = load_checkpoint(path);
        c.matrices.pop_back(); // feat.sd
        save_checkpoint(c, path);
        try {
            load_model(path);
            FAIL("expected a format error");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("missing tensor 'feat.sd'") != std::string::npos);
        }
    }
    SUBCASE("reshaped tensor reported with both shapes") {
        Checkpoint c = load_checkpoint(path);
        c.matrices[0].second = Matrix(2, 2);
        save_checkpoint(c, path);
        CHECK_THROWS_AS(load_model(path), FormatError);
    }
    SUBCASE("absent fingerprint field") {
        Checkpoint c = load_checkpoint(path);
        c.header.erase("fingerprint");
        save_checkpoint(c, path);
        CHECK_THROWS_AS(load_model(path), FormatError);
    }
    std::filesystem::remove(path);
}

TEST_CASE("degree-normalized encoder variant trains and round-trips") {
    RoiGraph g = ring_graph(8);
    GeneratedData data = generate(small_cfg(12, 3), g);
    ModelConfig mcfg = small_model_cfg();
    mcfg.encoder = EncoderKind::Gcn;
    TrainResult tr = train(data.source, mcfg, quick_train(5, 27, 6), g);
    REQUIRE(tr.log.epochs.size() == 5);
    for (const EpochStats& e : tr.log.epochs) CHECK(std::isfinite(e.loss_total));

    const std::string path = tmp_path("model_gcn.ckpt");
    save_model(tr.model, path);
    DagiModel loaded = load_model(path);
    CHECK(loaded.cfg.encoder == EncoderKind::Gcn);
    const Matrix x = data.target.subjects[0].x_shared;
    CHECK(loaded.forward(x).x_hat == tr.model.forward(x).x_hat);
    CHECK(*loaded.forward(x).sex_prob == *tr.model.forward(x).sex_prob);
    std::filesystem::remove(path);
}

TEST_CASE("encoder kind names round-trip and reject strangers") {
    CHECK(encoder_kind_name(EncoderKind::Gin) == "gin");
    CHECK(encoder_kind_name(EncoderKind::Gcn) == "gcn");
    CHECK(encoder_kind_from_name("gin") == EncoderKind::Gin);
    CHECK(encoder_kind_from_name("gcn") == EncoderKind::Gcn);
    CHECK_THROWS_AS(encoder_kind_from_name("transformer"), ConfigError);
}
