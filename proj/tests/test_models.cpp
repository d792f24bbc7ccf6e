#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "agefair/models.hpp"

using namespace agefair;

namespace {

FeatureMatrix make_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> feat(-1.0, 1.0);
    std::uniform_real_distribution<double> age(55.0, 85.0);
    std::bernoulli_distribution coin(0.5);
    FeatureMatrix m;
    m.features = Tensor2(n, d);
    for (std::size_t j = 0; j < d; ++j) m.feature_names.push_back("f" + std::to_string(j));
    for (std::size_t i = 0; i < n; ++i) {
        m.ids.push_back("s" + std::to_string(i));
        m.speakers.push_back("spk" + std::to_string(i));
        m.ages.push_back(age(rng));
        m.labels.push_back(coin(rng) ? 1 : 0);
        for (std::size_t j = 0; j < d; ++j) m.features(i, j) = feat(rng);
    }
    return m;
}

TrainConfig quick_config() {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 16;
    cfg.seed = 7;
    return cfg;
}

std::vector<double> std_ages_of(const FeatureMatrix& data, const TrainConfig& cfg) {
    const auto [mu, sd] = effective_age_stats(data.ages, cfg);
    std::vector<double> out(data.n_samples());
    for (std::size_t i = 0; i < data.n_samples(); ++i) out[i] = (data.ages[i] - mu) / sd;
    return out;
}

}  // namespace

TEST_CASE("model kind names round-trip") {
    for (ModelKind k : {ModelKind::baseline_dnn, ModelKind::simple, ModelKind::autoencoder,
                        ModelKind::consensus_net, ModelKind::entropy, ModelKind::entropy_binary,
                        ModelKind::entropy_honly})
        CHECK(kind_from_name(kind_name(k)) == k);
    CHECK(std::string(kind_name(ModelKind::entropy_honly)) == "entropy_Honly");
    CHECK(kind_from_name("entropy_honly") == ModelKind::entropy_honly);
    CHECK_THROWS_AS(kind_from_name("resnet"), InputError);
}

TEST_CASE("build composes the advertised components per kind") {
    TrainConfig cfg = quick_config();

    ModelBundle simple = build(ModelKind::simple, 6, cfg);
    CHECK(simple.interpreters.size() == 1);
    CHECK_FALSE(simple.classifier.layers().empty());
    CHECK_FALSE(simple.adversary.layers().empty());
    CHECK(simple.reconstructor.layers().empty());
    CHECK(simple.discriminator.layers().empty());

    ModelBundle ae = build(ModelKind::autoencoder, 6, cfg);
    CHECK_FALSE(ae.reconstructor.layers().empty());
    CHECK(ae.discriminator.layers().empty());

    ModelBundle ent = build(ModelKind::entropy, 6, cfg);
    CHECK_FALSE(ent.reconstructor.layers().empty());

    // output widths: regression adversary emits one column, entropy adversary two
    Tensor2 z(1, cfg.z_dim, 0.0);
    CHECK(simple.adversary.forward(z, Mode::Eval).cols == 1);
    CHECK(ent.adversary.forward(z, Mode::Eval).cols == 2);

    ModelBundle cons = build(ModelKind::consensus_net, 10, cfg);
    CHECK(cons.interpreters.size() == 3);
    CHECK(cons.classifier.forward(Tensor2(1, cfg.z_dim * 3, 0.0), Mode::Eval).cols == 2);
    CHECK(cons.discriminator.forward(z, Mode::Eval).cols == 3);
    CHECK(cons.reconstructor.layers().empty());
}

TEST_CASE("modality split balances, covers, and sorts the columns") {
    ModalitySplit split = make_modality_split(10, 3, 11);
    REQUIRE(split.n_modalities() == 3);
    std::multiset<std::size_t> sizes;
    std::set<std::size_t> seen;
    for (const auto& group : split.columns) {
        sizes.insert(group.size());
        for (std::size_t j = 1; j < group.size(); ++j) CHECK(group[j - 1] < group[j]);
        for (std::size_t col : group) CHECK(seen.insert(col).second);
    }
    CHECK(sizes == std::multiset<std::size_t>{3, 3, 4});
    CHECK(seen.size() == 10);

    // one modality reproduces the identity column order
    ModalitySplit whole = make_modality_split(5, 1, 42);
    CHECK(whole.columns == std::vector<std::vector<std::size_t>>{{0, 1, 2, 3, 4}});

    CHECK_THROWS_AS(make_modality_split(2, 3, 1), InputError);
}

TEST_CASE("untrained reconstructor on a zero representation scores the mean squared norm") {
    TrainConfig cfg = quick_config();
    ModelBundle b = build(ModelKind::autoencoder, 5, cfg);
    Tensor2 x{{1.0, -2.0, 0.5, 3.0, 0.0}, {0.25, 1.0, -1.0, 2.0, -0.5}, {4.0, 0.0, 0.0, 1.0, 1.0}};
    const Tensor2 xhat = b.reconstructor.forward(Tensor2(3, cfg.z_dim, 0.0), Mode::Eval);
    for (double v : xhat.data) CHECK(v == 0.0);  // zero bias init propagates zeros
    double oracle = 0.0;
    for (double v : x.data) oracle += v * v;
    oracle /= 3.0;
    CHECK(l2_loss(xhat, x).value == Catch::Approx(oracle).margin(1e-12));
}

TEST_CASE("joint step leaves adversary and discriminator bitwise frozen") {
    FeatureMatrix data = make_dataset(32, 6, 3);
    TrainConfig cfg = quick_config();
    const std::vector<double> ages = std_ages_of(data, cfg);

    ModelBundle b = build(ModelKind::autoencoder, 6, cfg);
    const std::vector<double> adversary_before = b.adversary.parameter_snapshot();
    const std::vector<double> interp_before = b.interpreters[0].parameter_snapshot();

    detail::AdamSet opt(b, cfg);
    BatchLosses losses;
    joint_objective_and_gradients(b, data.features, data.labels, ages, cfg, losses);
    adam_step(b.interpreters[0], opt.interpreters[0]);
    adam_step(b.classifier, opt.classifier);
    adam_step(b.reconstructor, opt.reconstructor);

    CHECK(b.adversary.parameter_snapshot() == adversary_before);
    CHECK(b.interpreters[0].parameter_snapshot() != interp_before);

    // consensus: the discriminator is likewise untouched by the joint step
    TrainConfig ccfg = quick_config();
    FeatureMatrix cdata = make_dataset(32, 9, 5);
    const std::vector<double> cages = std_ages_of(cdata, ccfg);
    ModelBundle cb = build(ModelKind::consensus_net, 9, ccfg);
    const std::vector<double> disc_before = cb.discriminator.parameter_snapshot();
    const std::vector<double> cadv_before = cb.adversary.parameter_snapshot();
    detail::AdamSet copt(cb, ccfg);
    joint_objective_and_gradients(cb, cdata.features, cdata.labels, cages, ccfg, losses);
    for (std::size_t m = 0; m < 3; ++m) adam_step(cb.interpreters[m], copt.interpreters[m]);
    adam_step(cb.classifier, copt.classifier);
    CHECK(cb.discriminator.parameter_snapshot() == disc_before);
    CHECK(cb.adversary.parameter_snapshot() == cadv_before);
}

TEST_CASE("inner adversary step leaves interpreter, classifier, reconstructor untouched") {
    FeatureMatrix data = make_dataset(32, 6, 9);
    TrainConfig cfg = quick_config();
    const std::vector<double> ages = std_ages_of(data, cfg);

    ModelBundle b = build(ModelKind::autoencoder, 6, cfg);
    detail::AdamSet opt(b, cfg);
    BatchLosses losses;
    std::vector<Tensor2> zs;
    joint_objective_and_gradients(b, data.features, data.labels, ages, cfg, losses, &zs);

    const std::vector<double> interp = b.interpreters[0].parameter_snapshot();
    const std::vector<double> cls = b.classifier.parameter_snapshot();
    const std::vector<double> recon = b.reconstructor.parameter_snapshot();
    const std::vector<double> adv_before = b.adversary.parameter_snapshot();

    detail::adversary_inner_step(b, opt.adversary, zs, ages, cfg);

    CHECK(b.interpreters[0].parameter_snapshot() == interp);
    CHECK(b.classifier.parameter_snapshot() == cls);
    CHECK(b.reconstructor.parameter_snapshot() == recon);
    CHECK(b.adversary.parameter_snapshot() != adv_before);
}

TEST_CASE("adversary inner loop drives its loss down on cached representations") {
    SynthConfig scfg;
    scfg.n = 64;
    scfg.d = 8;
    scfg.seed = 21;
    FeatureMatrix data = generate_synthetic(scfg).matrix;

    TrainConfig cfg = quick_config();
    cfg.learning_rate = 1e-2;
    const std::vector<double> ages = std_ages_of(data, cfg);

    ModelBundle b = build(ModelKind::simple, 8, cfg);
    detail::AdamSet opt(b, cfg);
    BatchLosses losses;
    std::vector<Tensor2> zs;
    joint_objective_and_gradients(b, data.features, data.labels, ages, cfg, losses, &zs);

    std::vector<double> la;
    for (int k = 0; k < 50; ++k) la.push_back(detail::adversary_inner_step(b, opt.adversary, zs, ages, cfg));
    CAPTURE(la.front(), la.back());
    CHECK(la.back() < la.front());
    CHECK(la.back() < 0.9 * la.front());
}

TEST_CASE("discriminator at uniform logits scores ln M") {
    TrainConfig cfg = quick_config();
    ModelBundle b = build(ModelKind::consensus_net, 9, cfg);
    Tensor2 z(4, cfg.z_dim, 0.0);  // zero input -> zero logits -> uniform softmax
    double ld = 0.0;
    for (int m = 0; m < 3; ++m) {
        const Tensor2 logits = b.discriminator.forward(z, Mode::Eval);
        ld += nll_loss(logits, std::vector<int>(4, m)).value / 3.0;
    }
    CHECK(ld == Catch::Approx(std::log(3.0)).margin(1e-12));
}

TEST_CASE("entropy variant with zero entropy weight matches the binary ablation bitwise") {
    FeatureMatrix data = make_dataset(48, 6, 13);
    TrainConfig cfg = quick_config();
    cfg.epochs = 3;
    cfg.lambda_h = 0.0;

    ModelBundle full = build(ModelKind::entropy, 6, cfg);
    ModelBundle binary = build(ModelKind::entropy_binary, 6, cfg);
    const LossHistory hf = train_entropy(full, data, cfg, EntropyVariant::full);
    const LossHistory hb = train_entropy(binary, data, cfg, EntropyVariant::binary);

    CHECK(hf.loss_c == hb.loss_c);
    CHECK(hf.loss_a == hb.loss_a);
    CHECK(hf.loss_r == hb.loss_r);
    CHECK(full.classifier.parameter_snapshot() == binary.classifier.parameter_snapshot());
    CHECK(full.adversary.parameter_snapshot() == binary.adversary.parameter_snapshot());
    CHECK(full.interpreters[0].parameter_snapshot() == binary.interpreters[0].parameter_snapshot());
}

TEST_CASE("every architecture reduces to the baseline when the extra terms are off") {
    FeatureMatrix data = make_dataset(40, 8, 17);
    TrainConfig cfg = quick_config();

    auto [base, base_hist] = train_baseline_dnn(data, cfg);
    const std::vector<double> base_cls = base.classifier.parameter_snapshot();
    const std::vector<double> base_interp = base.interpreters[0].parameter_snapshot();

    for (ModelKind kind : {ModelKind::simple, ModelKind::autoencoder, ModelKind::entropy,
                           ModelKind::entropy_binary, ModelKind::entropy_honly,
                           ModelKind::consensus_net}) {
        TrainConfig off = cfg;
        off.adversary_weight = 0.0;
        off.reconstruction_weight = 0.0;
        off.discriminator_weight = 0.0;
        if (kind == ModelKind::consensus_net) off.modalities = 1;
        ModelBundle b = build(kind, 8, off);
        const LossHistory h = train_model(b, data, off);
        INFO("kind = " << kind_name(kind));
        CHECK(h.loss_c == base_hist.loss_c);
        CHECK(b.classifier.parameter_snapshot() == base_cls);
        CHECK(b.interpreters[0].parameter_snapshot() == base_interp);
        CHECK(std::all_of(h.loss_a.begin(), h.loss_a.end(), [](double v) { return v == 0.0; }));
        CHECK(std::all_of(h.loss_r.begin(), h.loss_r.end(), [](double v) { return v == 0.0; }));
        CHECK(std::all_of(h.loss_d.begin(), h.loss_d.end(), [](double v) { return v == 0.0; }));
    }
}

TEST_CASE("predict ties break to class zero and probabilities sum to one") {
    TrainConfig cfg = quick_config();
    ModelBundle b = build(ModelKind::baseline_dnn, 4, cfg);

    Tensor2 x{{0.5, -1.0, 2.0, 0.0}, {1.0, 1.0, 1.0, 1.0}};
    Predictions p = predict(b, x);
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(p.probabilities(i, 0) + p.probabilities(i, 1) == Catch::Approx(1.0).margin(1e-12));

    // zeroing the classifier forces equal logits everywhere
    b.classifier.for_each_param(
        [](ParamRef pr) { std::fill(pr.values->begin(), pr.values->end(), 0.0); });
    Predictions tie = predict(b, x);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(tie.labels[i] == 0);
        CHECK(tie.probabilities(i, 0) == 0.5);
        CHECK(tie.probabilities(i, 1) == 0.5);
    }
}

TEST_CASE("predict matches a hand-composed forward pass") {
    // identity interpreter and identity classifier: logits == x
    ModelBundle b;
    b.kind = ModelKind::baseline_dnn;
    b.input_dim = 2;
    b.z_dim = 2;
    DenseLayer interp(2, 2);
    interp.weights = {1.0, 0.0, 0.0, 1.0};
    DenseLayer cls(2, 2);
    cls.weights = {1.0, 0.0, 0.0, 1.0};
    b.interpreters.emplace_back(Network(2, {Layer(interp)}));
    b.classifier = Network(2, {Layer(cls)});

    Tensor2 x{{0.3, 0.9}, {2.0, -1.0}, {0.4, 0.4}};
    Predictions p = predict(b, x);
    CHECK(p.labels == std::vector<int>{1, 0, 0});

    const double e0 = std::exp(0.3 - 0.9), e1 = std::exp(0.0);  // max-subtracted softmax
    CHECK(p.probabilities(0, 1) == Catch::Approx(e1 / (e0 + e1)).margin(1e-15));
    CHECK(p.probabilities(2, 0) == 0.5);
}

TEST_CASE("predict is deterministic and invariant to batch composition") {
    SynthConfig scfg;
    scfg.n = 32;
    scfg.d = 6;
    scfg.seed = 4;
    FeatureMatrix data = generate_synthetic(scfg).matrix;
    TrainConfig cfg = quick_config();
    ModelBundle b = build(ModelKind::autoencoder, 6, cfg);
    train_autoencoder(b, data, cfg);

    Tensor2 x = data.features;
    Predictions whole = predict(b, x);
    Predictions again = predict(b, x);
    CHECK(whole.probabilities.data == again.probabilities.data);

    for (std::size_t i : {std::size_t(0), std::size_t(7), std::size_t(31)}) {
        Tensor2 row(1, 6);
        for (std::size_t j = 0; j < 6; ++j) row(0, j) = x(i, j);
        Predictions single = predict(b, row);
        CHECK(single.labels[0] == whole.labels[i]);
        CHECK(single.probabilities(0, 0) == whole.probabilities(i, 0));
        CHECK(single.probabilities(0, 1) == whole.probabilities(i, 1));
    }
}

TEST_CASE("bundle serialization round-trips bitwise") {
    SynthConfig scfg;
    scfg.n = 32;
    scfg.d = 10;
    scfg.seed = 6;
    FeatureMatrix data = generate_synthetic(scfg).matrix;
    Tensor2 probe = make_dataset(5, 10, 77).features;

    for (ModelKind kind : {ModelKind::autoencoder, ModelKind::consensus_net}) {
        TrainConfig cfg = quick_config();
        ModelBundle b = build(kind, 10, cfg);
        train_model(b, data, cfg);

        const std::string path = "bundle_roundtrip.bin";
        save_bundle(path, b);
        ModelBundle loaded = load_bundle(path);
        std::remove(path.c_str());

        INFO("kind = " << kind_name(kind));
        CHECK(loaded.kind == b.kind);
        CHECK(loaded.input_dim == b.input_dim);
        CHECK(loaded.z_dim == b.z_dim);
        CHECK(loaded.age_mean == b.age_mean);
        CHECK(loaded.age_sd == b.age_sd);
        CHECK(loaded.split.columns == b.split.columns);
        REQUIRE(loaded.interpreters.size() == b.interpreters.size());
        for (std::size_t m = 0; m < b.interpreters.size(); ++m)
            CHECK(loaded.interpreters[m].parameter_snapshot() ==
                  b.interpreters[m].parameter_snapshot());
        CHECK(loaded.classifier.parameter_snapshot() == b.classifier.parameter_snapshot());

        Predictions before = predict(b, probe);
        Predictions after = predict(loaded, probe);
        CHECK(before.labels == after.labels);
        CHECK(before.probabilities.data == after.probabilities.data);
    }
}

TEST_CASE("bundle loader rejects foreign and future files") {
    {
        std::ofstream out("not_a_bundle.bin", std::ios::binary);
        out << "NOPE this is something else entirely";
    }
    CHECK_THROWS_AS(load_bundle("not_a_bundle.bin"), FormatError);
    CHECK_THROWS_WITH(load_bundle("not_a_bundle.bin"),
                      Catch::Matchers::ContainsSubstring("not a model bundle"));
    std::remove("not_a_bundle.bin");

    TrainConfig cfg = quick_config();
    ModelBundle b = build(ModelKind::simple, 4, cfg);
    save_bundle("future_bundle.bin", b);
    {
        std::fstream f("future_bundle.bin", std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(4);
        f.put(char(9));  // bump the version field
    }
    CHECK_THROWS_WITH(load_bundle("future_bundle.bin"),
                      Catch::Matchers::ContainsSubstring("unsupported bundle version"));
    std::remove("future_bundle.bin");

    {
        std::ofstream out("truncated_bundle.bin", std::ios::binary);
        out << "AGFB";
        out.put(char(1));
    }
    CHECK_THROWS_AS(load_bundle("truncated_bundle.bin"), FormatError);
    std::remove("truncated_bundle.bin");
}

TEST_CASE("baseline fits a constant-label dataset to perfect training accuracy") {
    FeatureMatrix data = make_dataset(48, 4, 23);
    for (int& l : data.labels) l = 1;
    TrainConfig cfg = quick_config();
    cfg.epochs = 20;
    cfg.learning_rate = 1e-2;
    auto [b, hist] = train_baseline_dnn(data, cfg);
    Predictions p = predict(b, data.features);
    CHECK(std::all_of(p.labels.begin(), p.labels.end(), [](int l) { return l == 1; }));
    CHECK(hist.loss_c.back() < hist.loss_c.front());
}

TEST_CASE("baseline separates a linearly separable fixture perfectly") {
    FeatureMatrix data = make_dataset(60, 4, 29);
    for (std::size_t i = 0; i < data.n_samples(); ++i)
        data.features(i, 0) = data.labels[i] == 1 ? 2.0 + 0.1 * data.features(i, 0)
                                                  : -2.0 + 0.1 * data.features(i, 0);
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < 48; ++i) train_rows.push_back(i);
    for (std::size_t i = 48; i < 60; ++i) test_rows.push_back(i);
    FeatureMatrix train = data.select(train_rows);
    FeatureMatrix test = data.select(test_rows);

    TrainConfig cfg = quick_config();
    cfg.epochs = 25;
    auto [b, hist] = train_baseline_dnn(train, cfg);
    Predictions p = predict(b, test.features);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < test.n_samples(); ++i)
        if (p.labels[i] == test.labels[i]) ++hits;
    CHECK(hits == test.n_samples());
}

TEST_CASE("reconstruction loss falls on a low-rank fixture without adversarial pressure") {
    FeatureMatrix data = make_dataset(48, 6, 31);
    Rng rng = make_rng(31);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(6);
    for (double& vj : v) vj = dist(rng);
    for (std::size_t i = 0; i < data.n_samples(); ++i) {
        const double u = dist(rng);
        for (std::size_t j = 0; j < 6; ++j) data.features(i, j) = u * v[j];
    }

    TrainConfig cfg = quick_config();
    cfg.epochs = 8;
    cfg.learning_rate = 3e-3;
    cfg.adversary_weight = 0.0;
    ModelBundle b = build(ModelKind::autoencoder, 6, cfg);
    const LossHistory h = train_model(b, data, cfg);
    CAPTURE(h.loss_r);
    for (std::size_t e = 1; e < 5; ++e) CHECK(h.loss_r[e] < h.loss_r[e - 1]);
    CHECK(h.loss_r.back() < h.loss_r.front());
}

TEST_CASE("probe_age nails constant and linear age structures") {
    SECTION("constant ages") {
        FeatureMatrix data = make_dataset(120, 4, 37);
        for (double& a : data.ages) a = 70.0;
        ProbeConfig pcfg;
        pcfg.epochs = 30;
        ProbeResult res = probe_age(data, pcfg);
        CHECK(res.mean_predictor_mae == 0.0);
        CHECK(res.mae < 0.5);
    }
    SECTION("age is a linear function of one feature") {
        FeatureMatrix data = make_dataset(150, 3, 41);
        for (std::size_t i = 0; i < data.n_samples(); ++i)
            data.ages[i] = 60.0 + 10.0 * data.features(i, 0);
        ProbeConfig pcfg;
        pcfg.epochs = 80;
        pcfg.learning_rate = 1e-3;
        pcfg.weight_decay = 0.5;
        ProbeResult res = probe_age(data, pcfg);
        CAPTURE(res.mae, res.mean_predictor_mae);
        CHECK(res.mae < 2.0);
        CHECK(res.mae < 0.5 * res.mean_predictor_mae);
    }
}

TEST_CASE("probe_age beats the mean predictor on generator output") {
    SynthConfig scfg;
    scfg.seed = 43;
    FeatureMatrix data = generate_synthetic(scfg).matrix;
    ProbeResult res = probe_age(data, ProbeConfig{});
    CAPTURE(res.mae, res.mean_predictor_mae);
    CHECK(res.mae < 0.8 * res.mean_predictor_mae);
    CHECK(res.fold_mae.size() == 5);
}

TEST_CASE("loss history CSV is one-based with round-trip reals") {
    FeatureMatrix data = make_dataset(24, 4, 47);
    TrainConfig cfg = quick_config();
    cfg.epochs = 3;
    auto [b, hist] = train_baseline_dnn(data, cfg);

    const std::string path = "history_test.csv";
    save_loss_history(path, hist);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,loss_c,loss_a,loss_r,loss_d");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        const auto cells = split_csv_line(line);
        REQUIRE(cells.size() == 5);
        CHECK(parse_long(cells[0], "epoch") == static_cast<long>(rows + 1));
        CHECK(parse_real(cells[1], "loss_c") == hist.loss_c[rows]);
        ++rows;
    }
    CHECK(rows == 3);
    std::remove(path.c_str());
}

TEST_CASE("training and config validation reject bad inputs") {
    FeatureMatrix data = make_dataset(16, 4, 53);
    TrainConfig cfg = quick_config();

    ModelBundle wrong_width = build(ModelKind::simple, 5, cfg);
    CHECK_THROWS_AS(train_model(wrong_width, data, cfg), DimensionError);

    ModelBundle b = build(ModelKind::simple, 4, cfg);
    FeatureMatrix bad_labels = data;
    bad_labels.labels[3] = 2;
    CHECK_THROWS_AS(train_model(b, bad_labels, cfg), InputError);

    ModelBundle ae = build(ModelKind::autoencoder, 4, cfg);
    CHECK_THROWS_AS(train_simple(ae, data, cfg), InputError);
    CHECK_THROWS_AS(train_entropy(ae, data, cfg, EntropyVariant::full), InputError);

    ModelBundle cons = build(ModelKind::consensus_net, 4, [] {
        TrainConfig c;
        c.modalities = 2;
        return c;
    }());
    ModalitySplit bad_split;
    bad_split.columns = {{0}, {1}, {2, 3}};
    CHECK_THROWS_AS(train_consensus(cons, bad_split, data, cfg), InputError);

    TrainConfig bad = cfg;
    bad.batch_size = 1;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = cfg;
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = cfg;
    bad.adversary_weight = -0.5;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = cfg;
    bad.lambda_h = -1.0;
    CHECK_THROWS_AS(bad.validate(), InputError);

    CHECK_THROWS_AS(encode(b, Tensor2(2, 7, 0.0)), DimensionError);
}
