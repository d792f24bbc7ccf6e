#pragma once

// Self-verification: finite-difference checks of every layer's backward pass
// and of the four full training objectives, shared by the `gradcheck` CLI
// subcommand and the acceptance suite.

#include <string>
#include <vector>

#include "agefair/gradcheck.hpp"
#include "agefair/models.hpp"

namespace agefair {

struct VerifyCheck {
    std::string name;
    double max_rel_err = 0.0;
    double tolerance = 0.0;

    bool pass() const { return max_rel_err < tolerance; }
};

namespace detail {

inline Tensor2 random_tensor(std::size_t rows, std::size_t cols, Rng& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor2 x(rows, cols);
    for (double& v : x.data) v = dist(rng);
    return x;
}

// Finite-difference check of the full joint objective for one architecture:
// every parameter of every component is perturbed and compared against the
// gradient buffers the joint step populates. Adversary and discriminator
// buffers hold their own raw losses' gradients, so they enter the comparison
// scaled by -adversary_weight / -discriminator_weight.
inline double assembly_max_rel_err(ModelKind kind, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.z_dim = 2;
    cfg.interpreter_hidden = 3;
    cfg.classifier_hidden = 3;
    cfg.adversary_hidden = 3;
    cfg.reconstructor_hidden = 3;
    cfg.modalities = kind == ModelKind::consensus_net ? 2 : 3;
    cfg.adversary_weight = 0.7;
    cfg.reconstruction_weight = 0.6;
    cfg.discriminator_weight = 0.8;
    cfg.lambda_h = 0.5;

    const std::size_t d = 4, n = 5;
    ModelBundle b = build(kind, d, cfg);
    Rng rng = make_rng(derive_seed(seed, "verify-data"));
    const Tensor2 x = random_tensor(n, d, rng);
    std::vector<int> labels;
    std::vector<double> ages;
    std::uniform_real_distribution<double> age_dist(-1.5, 1.5);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < n; ++i) {
        labels.push_back(coin(rng) ? 1 : 0);
        ages.push_back(age_dist(rng));
    }

    BatchLosses losses;
    joint_objective_and_gradients(b, x, labels, ages, cfg, losses);

    struct Component {
        Network* net;
        double scale;  // factor turning the stored buffer into dJ/dtheta
    };
    std::vector<Component> parts;
    for (Network& net : b.interpreters) parts.push_back({&net, 1.0});
    parts.push_back({&b.classifier, 1.0});
    if (b.has_adversary()) parts.push_back({&b.adversary, -cfg.adversary_weight});
    if (b.has_reconstructor()) parts.push_back({&b.reconstructor, 1.0});
    if (b.has_discriminator()) parts.push_back({&b.discriminator, -cfg.discriminator_weight});

    std::vector<std::vector<double>> analytic;
    for (const Component& part : parts)
        part.net->for_each_param([&](ParamRef p) {
            std::vector<double> g = *p.grads;
            for (double& v : g) v *= part.scale;
            analytic.push_back(std::move(g));
        });

    const auto eval = [&]() {
        BatchLosses scratch;
        return joint_objective_and_gradients(b, x, labels, ages, cfg, scratch);
    };

    // Batchnorm chains give the objective noticeable third derivatives, so a
    // plain central difference carries visible h^2 truncation error; the
    // five-point stencil knocks the residual down to rounding noise. The
    // denominator floor of 1e-6 keeps that noise from being amplified on
    // parameters whose true gradient is ~1e-9 (an absolute disagreement of
    // 1e-10 on such a parameter still fails the 1e-4 tolerance).
    const double h = 1e-4;
    double max_rel = 0.0;
    std::size_t buf = 0;
    for (const Component& part : parts)
        part.net->for_each_param([&](ParamRef p) {
            for (std::size_t k = 0; k < p.values->size(); ++k) {
                double& theta = (*p.values)[k];
                const double saved = theta;
                theta = saved + 2.0 * h;
                const double jp2 = eval();
                theta = saved + h;
                const double jp1 = eval();
                theta = saved - h;
                const double jm1 = eval();
                theta = saved - 2.0 * h;
                const double jm2 = eval();
                theta = saved;
                const double numeric = (-jp2 + 8.0 * jp1 - 8.0 * jm1 + jm2) / (12.0 * h);
                const double a = analytic[buf][k];
                const double rel =
                    std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
                max_rel = std::max(max_rel, rel);
            }
            ++buf;
        });
    return max_rel;
}

}  // namespace detail

// Deterministic battery of gradient checks; every entry must pass.
inline std::vector<VerifyCheck> run_gradient_verification() {
    std::vector<VerifyCheck> checks;

    {
        // single dense layer under a quadratic loss: near machine-exact
        Rng rng = make_rng(101);
        DenseLayer dense(4, 3);
        dense.init_he_uniform(rng);
        Network net(4, {Layer(std::move(dense))});
        const Tensor2 x = detail::random_tensor(6, 4, rng);
        const Tensor2 target = detail::random_tensor(6, 3, rng);
        const LossFn loss = [&](const Tensor2& out) { return l2_loss(out, target); };
        checks.push_back({"dense layer, quadratic loss", gradcheck(net, loss, x), 1e-7});
    }
    {
        // every layer type at once: dense + relu + batchnorm under the
        // classification loss
        Rng rng = make_rng(202);
        Network net = Network::mlp(5, {8, 6}, 3, rng);
        const Tensor2 x = detail::random_tensor(7, 5, rng);
        std::uniform_int_distribution<int> label_dist(0, 2);
        std::vector<int> labels;
        for (int i = 0; i < 7; ++i) labels.push_back(label_dist(rng));
        const LossFn loss = [&](const Tensor2& out) { return nll_loss(out, labels); };
        checks.push_back({"dense+relu+batchnorm, classification loss", gradcheck(net, loss, x),
                          1e-4});
    }
    checks.push_back(
        {"objective: simple", detail::assembly_max_rel_err(ModelKind::simple, 303), 1e-4});
    checks.push_back({"objective: autoencoder",
                      detail::assembly_max_rel_err(ModelKind::autoencoder, 404), 1e-4});
    checks.push_back({"objective: consensus_net",
                      detail::assembly_max_rel_err(ModelKind::consensus_net, 505), 1e-4});
    checks.push_back(
        {"objective: entropy", detail::assembly_max_rel_err(ModelKind::entropy, 606), 1e-4});
    checks.push_back({"objective: entropy_binary",
                      detail::assembly_max_rel_err(ModelKind::entropy_binary, 707), 1e-4});
    checks.push_back({"objective: entropy_Honly",
                      detail::assembly_max_rel_err(ModelKind::entropy_honly, 808), 1e-4});
    return checks;
}

}  // namespace agefair
