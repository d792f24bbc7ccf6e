// Acceptance battery: one line per criterion, nonzero exit when any fails.
// Each criterion with a runtime budget enforces it on its own wall time.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "agefair/agefair.hpp"

using namespace agefair;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fixed(double v, int places = 3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", places, v);
    return buf;
}

FeatureMatrix random_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
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

std::vector<double> standardized_ages(const FeatureMatrix& data, const TrainConfig& cfg) {
    const auto [mu, sd] = effective_age_stats(data.ages, cfg);
    std::vector<double> out(data.n_samples());
    for (std::size_t i = 0; i < data.n_samples(); ++i) out[i] = (data.ages[i] - mu) / sd;
    return out;
}

// 1. Hand fixture, one-group zero, and the exact two-group identity.
Outcome metric_exactness() {
    if (std::abs(delta_eo({0.1, 0.3}, {0.2, 0.2}) - 0.2) > 1e-12)
        return {false, "hand fixture p=(0.1,0.3), n=(0.2,0.2) missed 0.2"};
    if (delta_eo({0.37}, {0.81}) != 0.0) return {false, "one-group score is not exactly zero"};

    Rng rng = make_rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int exact = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        const double p0 = u(rng), p1 = u(rng), n0 = u(rng), n1 = u(rng);
        if (delta_eo({p0, p1}, {n0, n1}) == std::abs(p0 - p1) + std::abs(n0 - n1)) ++exact;
    }
    if (exact != trials)
        return {false, std::to_string(trials - exact) + "/" + std::to_string(trials) +
                           " two-group identities were not exact"};
    return {true, "hand fixture 0.2; one-group 0; 1000/1000 two-group identities exact"};
}

// 2. Fuzzed rate vectors: group-count bound inside the non-trivial envelope
//    (every rate at most 1/2), twice the group count unconditionally.
Outcome bound_fuzz() {
    Rng rng = make_rng(29);
    std::uniform_int_distribution<std::size_t> nd(1, 8);
    std::uniform_real_distribution<double> half(0.0, 0.5), full(0.0, 1.0);
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        const std::size_t ng = nd(rng);
        std::vector<double> p(ng), n(ng);
        for (auto& v : p) v = half(rng);
        for (auto& v : n) v = half(rng);
        const BoundCheckResult r = delta_eo_bound_check(p, n, false);
        if (!r.within_envelope || !r.pass)
            return {false, "envelope profile broke delta <= N at trial " + std::to_string(t)};
    }
    for (int t = 0; t < trials; ++t) {
        const std::size_t ng = nd(rng);
        std::vector<double> p(ng), n(ng);
        for (auto& v : p) v = full(rng);
        for (auto& v : n) v = full(rng);
        const BoundCheckResult r = delta_eo_bound_check(p, n, true);
        if (!r.within_unconditional)
            return {false, "unconditional profile broke delta <= 2N at trial " + std::to_string(t)};
    }
    return {true, "10000 envelope profiles <= N and 10000 unconditional profiles <= 2N, "
                  "zero violations"};
}

// 3. Finite-difference verification of every layer type and every objective.
Outcome gradient_verification() {
    const std::vector<VerifyCheck> checks = run_gradient_verification();
    double worst = 0.0;
    for (const VerifyCheck& c : checks) {
        worst = std::max(worst, c.max_rel_err);
        if (!c.pass())
            return {false, c.name + " at " + format_real(c.max_rel_err) + " exceeds " +
                               format_real(c.tolerance)};
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2e", worst);
    return {true, std::to_string(checks.size()) + " checks passed; worst relative error " + buf};
}

// 4. Alternating updates keep the frozen side bitwise intact, and switching
//    the extra loss terms off reproduces the baseline trace bitwise.
Outcome algorithm_structure() {
    const std::vector<ModelKind> algorithms = {ModelKind::simple, ModelKind::autoencoder,
                                               ModelKind::entropy, ModelKind::consensus_net};
    FeatureMatrix data = random_dataset(36, 6, 3);
    TrainConfig cfg;
    cfg.batch_size = 18;
    cfg.seed = 7;
    const std::vector<double> ages = standardized_ages(data, cfg);

    for (ModelKind kind : algorithms) {
        const std::string name = kind_name(kind);
        ModelBundle b = build(kind, 6, cfg);
        detail::AdamSet opt(b, cfg);
        BatchLosses losses;
        std::vector<Tensor2> zs;

        const auto adv0 = b.adversary.parameter_snapshot();
        const auto disc0 = b.has_discriminator() ? b.discriminator.parameter_snapshot()
                                                 : std::vector<double>{};
        joint_objective_and_gradients(b, data.features, data.labels, ages, cfg, losses, &zs);
        for (std::size_t m = 0; m < b.interpreters.size(); ++m)
            adam_step(b.interpreters[m], opt.interpreters[m]);
        adam_step(b.classifier, opt.classifier);
        if (b.has_reconstructor()) adam_step(b.reconstructor, opt.reconstructor);

        if (b.adversary.parameter_snapshot() != adv0)
            return {false, name + ": adversary moved during the interpreter step"};
        if (b.has_discriminator() && b.discriminator.parameter_snapshot() != disc0)
            return {false, name + ": discriminator moved during the interpreter step"};

        const auto interp1 = b.interpreters[0].parameter_snapshot();
        const auto cls1 = b.classifier.parameter_snapshot();
        const auto recon1 = b.has_reconstructor() ? b.reconstructor.parameter_snapshot()
                                                  : std::vector<double>{};
        detail::adversary_inner_step(b, opt.adversary, zs, ages, cfg);
        if (b.interpreters[0].parameter_snapshot() != interp1 ||
            b.classifier.parameter_snapshot() != cls1 ||
            (b.has_reconstructor() && b.reconstructor.parameter_snapshot() != recon1))
            return {false, name + ": interpreter side moved during the adversary step"};
        if (b.adversary.parameter_snapshot() == adv0)
            return {false, name + ": adversary did not move during its own step"};

        if (b.has_discriminator()) {
            const auto adv2 = b.adversary.parameter_snapshot();
            detail::discriminator_inner_step(b, opt.discriminator, zs);
            if (b.interpreters[0].parameter_snapshot() != interp1 ||
                b.classifier.parameter_snapshot() != cls1 ||
                b.adversary.parameter_snapshot() != adv2)
                return {false, name + ": non-discriminator parameters moved during its step"};
            if (b.discriminator.parameter_snapshot() == disc0)
                return {false, name + ": discriminator did not move during its own step"};
        }
    }

    // Reduction: every architecture with its extra terms disabled must retrace
    // the baseline bitwise under the shared seed scheme.
    FeatureMatrix rdata = random_dataset(40, 8, 17);
    TrainConfig rcfg;
    rcfg.epochs = 3;
    rcfg.batch_size = 16;
    rcfg.seed = 23;
    auto [base, base_hist] = train_baseline_dnn(rdata, rcfg);
    const auto base_cls = base.classifier.parameter_snapshot();
    const auto base_interp = base.interpreters[0].parameter_snapshot();
    std::size_t reductions = 0;
    for (ModelKind kind : {ModelKind::simple, ModelKind::autoencoder, ModelKind::entropy,
                           ModelKind::entropy_binary, ModelKind::entropy_honly,
                           ModelKind::consensus_net}) {
        TrainConfig off = rcfg;
        off.adversary_weight = 0.0;
        off.reconstruction_weight = 0.0;
        off.discriminator_weight = 0.0;
        if (kind == ModelKind::consensus_net) off.modalities = 1;
        ModelBundle b = build(kind, 8, off);
        const LossHistory h = train_model(b, rdata, off);
        const bool same = h.loss_c == base_hist.loss_c &&
                          b.classifier.parameter_snapshot() == base_cls &&
                          b.interpreters[0].parameter_snapshot() == base_interp;
        if (!same)
            return {false, std::string(kind_name(kind)) +
                               " with all extra terms off diverged from the baseline trace"};
        ++reductions;
    }
    return {true, "4/4 algorithms keep frozen parameters bitwise; " +
                      std::to_string(reductions) + "/6 reductions retrace the baseline bitwise"};
}

// Shared computation for the two synthetic-replication criteria: 5-fold
// cross-validation of baseline_dnn and age-indep-simple on the default
// generator, averaged over five generator seeds, with probe diagnostics.
struct DirectionNumbers {
    double base_acc = 0, simple_acc = 0;
    double base_d2 = 0, simple_d2 = 0;
    double z_mae = 0, x_mae = 0, ref_mae = 0;
    std::size_t degenerate_folds = 0;
};

const DirectionNumbers& direction_numbers() {
    static const DirectionNumbers out = [] {
        DirectionNumbers acc;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            ExperimentConfig cfg;
            cfg.dataset.source = DatasetSpec::Source::synthetic;
            cfg.dataset.synth.seed = seed;
            cfg.models = {ModelKind::baseline_dnn, ModelKind::simple};
            cfg.folds = 5;
            cfg.n_groups = {2};
            cfg.diagnostics = true;
            cfg.out_dir = "";
            cfg.seed = seed;
            const ExperimentReport rep = run_experiment(cfg);
            const ModelRun& base = rep.models[0];
            const ModelRun& simple = rep.models[1];
            acc.base_acc += accuracy_aggregate(base).mean / 5.0;
            acc.simple_acc += accuracy_aggregate(simple).mean / 5.0;
            const Aggregate bd = delta_aggregate(base, 2), sd = delta_aggregate(simple, 2);
            acc.base_d2 += bd.mean / 5.0;
            acc.simple_d2 += sd.mean / 5.0;
            acc.degenerate_folds += bd.folds_degenerate + sd.folds_degenerate;
            acc.z_mae += diagnostics_aggregate(simple, &FoldDiagnostics::z_probe_mae).mean / 5.0;
            acc.x_mae += diagnostics_aggregate(simple, &FoldDiagnostics::x_probe_mae).mean / 5.0;
            acc.ref_mae +=
                diagnostics_aggregate(simple, &FoldDiagnostics::mean_predictor_mae).mean / 5.0;
        }
        return acc;
    }();
    return out;
}

// 5. age-indep-simple is fairer than the baseline at comparable accuracy.
Outcome disentanglement_direction() {
    const DirectionNumbers& n = direction_numbers();
    const double gap = std::abs(n.base_acc - n.simple_acc);
    const bool direction = n.simple_d2 < n.base_d2;
    const bool close = gap <= 0.05;
    std::string detail = "delta_eo(2) " + fixed(n.simple_d2) + " vs baseline " + fixed(n.base_d2) +
                         "; accuracy " + fixed(n.simple_acc) + " vs " + fixed(n.base_acc) +
                         " (gap " + fixed(gap * 100, 1) + "pp)";
    if (n.degenerate_folds > 0)
        detail += "; " + std::to_string(n.degenerate_folds) + " degenerate folds";
    return {direction && close, detail};
}

// 6. The age probe does markedly worse on learned representations than on
//    raw features, under an identical probe configuration.
Outcome adversary_degradation() {
    const DirectionNumbers& n = direction_numbers();
    const double ratio = n.z_mae / n.x_mae;
    return {ratio >= 1.5, "probe MAE " + fixed(n.z_mae, 2) + "y on z vs " + fixed(n.x_mae, 2) +
                              "y on x (ratio " + fixed(ratio, 2) + "; mean predictor " +
                              fixed(n.ref_mae, 2) + "y)"};
}

// 7. Probes recover age from generator output when the age effect is on, and
//    fall back to the mean predictor when it is off. "Off" zeroes both age
//    paths — the feature displacement and the label slope — since either one
//    leaves genuine age signal in the features. Both branches average the
//    same five generator seeds.
Outcome age_predictability() {
    double on_mae = 0, on_ref = 0, off_mae = 0, off_ref = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SynthConfig on;
        on.seed = seed;
        const ProbeResult strong = probe_age(generate_synthetic(on).matrix, ProbeConfig{});
        on_mae += strong.mae / 5.0;
        on_ref += strong.mean_predictor_mae / 5.0;

        SynthConfig off = on;
        off.age_scale = 0.0;
        off.label_slope = 0.0;
        const ProbeResult flat = probe_age(generate_synthetic(off).matrix, ProbeConfig{});
        off_mae += flat.mae / 5.0;
        off_ref += flat.mean_predictor_mae / 5.0;
    }
    const double gain = (on_ref - on_mae) / on_ref;
    const double drift = std::abs(off_mae - off_ref) / off_ref;
    const bool pass = gain >= 0.30 && drift <= 0.10;
    return {pass, "age effect on: " + fixed(gain * 100, 1) + "% better than mean predictor (" +
                      fixed(on_mae, 2) + "y vs " + fixed(on_ref, 2) + "y); off: within " +
                      fixed(drift * 100, 1) + "%"};
}

// 8. The full entropy variant at lambda_H = 0 degenerates into the binary
//    ablation, bitwise.
Outcome entropy_degeneracy() {
    FeatureMatrix data = random_dataset(64, 8, 31);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 16;
    cfg.seed = 19;
    cfg.lambda_h = 0.0;
    ModelBundle full = build(ModelKind::entropy, 8, cfg);
    ModelBundle binary = build(ModelKind::entropy_binary, 8, cfg);
    const LossHistory hf = train_entropy(full, data, cfg, EntropyVariant::full);
    const LossHistory hb = train_entropy(binary, data, cfg, EntropyVariant::binary);
    const bool same = hf.loss_c == hb.loss_c && hf.loss_a == hb.loss_a &&
                      hf.loss_r == hb.loss_r && hf.loss_d == hb.loss_d &&
                      full.classifier.parameter_snapshot() ==
                          binary.classifier.parameter_snapshot() &&
                      full.interpreters[0].parameter_snapshot() ==
                          binary.interpreters[0].parameter_snapshot() &&
                      full.adversary.parameter_snapshot() == binary.adversary.parameter_snapshot();
    return {same, same ? "loss histories and final parameters bitwise identical"
                       : "histories or parameters diverged"};
}

// 9. The experiment pipeline is a pure function of config and seed.
Outcome end_to_end_determinism() {
    ExperimentConfig cfg;
    cfg.dataset.source = DatasetSpec::Source::synthetic;
    cfg.dataset.synth.n = 80;
    cfg.dataset.synth.d = 8;
    cfg.dataset.synth.seed = 5;
    cfg.models = {ModelKind::baseline_dnn, ModelKind::simple};
    cfg.folds = 2;
    cfg.train.epochs = 3;
    cfg.diagnostics = true;
    cfg.out_dir = "";
    cfg.seed = 41;
    const std::string first = report_to_json(run_experiment(cfg)).dump(2);
    const std::string second = report_to_json(run_experiment(cfg)).dump(2);
    if (first != second) return {false, "two identical runs produced different report JSON"};
    return {true, "two runs, " + std::to_string(first.size()) + " bytes of report JSON each, "
                  "byte-identical"};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* title;
        std::function<Outcome()> check;
        double budget_seconds;  // 0 = no stated budget
    };
    const std::vector<Criterion> criteria = {
        {1, "metric exactness", metric_exactness, 1.0},
        {2, "score bounds under fuzz", bound_fuzz, 5.0},
        {3, "gradient verification", gradient_verification, 10.0},
        {4, "alternating updates and baseline reduction", algorithm_structure, 0.0},
        {5, "fairness direction on the confounded generator", disentanglement_direction, 300.0},
        {6, "age-probe degradation on representations", adversary_degradation, 300.0},
        {7, "age predictability from raw features", age_predictability, 0.0},
        {8, "entropy ablation degeneracy", entropy_degeneracy, 0.0},
        {9, "end-to-end determinism", end_to_end_determinism, 0.0},
    };

    int failed = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = Clock::now();
        Outcome out;
        try {
            out = c.check();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        if (c.budget_seconds > 0.0 && secs > c.budget_seconds) {
            out.pass = false;
            out.detail += " [over " + fixed(c.budget_seconds, 0) + "s budget]";
        }
        if (!out.pass) ++failed;
        std::printf("[%s] %d. %s — %s (%.2fs)\n", out.pass ? "PASS" : "FAIL", c.id, c.title,
                    out.detail.c_str(), secs);
    }
    if (failed == 0)
        std::printf("acceptance: all %zu criteria passed\n", criteria.size());
    else
        std::printf("acceptance: %d of %zu criteria FAILED\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
