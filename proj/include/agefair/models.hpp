#pragma once

// The fair-representation architectures and their alternating training
// schedules. Every variant shares one trainer: a joint minibatch step updates
// the interpreter(s), classifier, and reconstructor on
//   L_c - adversary_weight * L_a + reconstruction_weight * L_r
//       - discriminator_weight * L_d,
// with the adversary and discriminator frozen (their gradients flow through
// to the representation but their own parameters keep accumulating only),
// followed by K inner steps that train the adversary (and discriminator) on
// the representation cached at the top of the batch. A term whose weight is
// zero is skipped outright, which keeps a run with everything disabled
// bitwise identical to the plain classifier baseline.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "agefair/adam.hpp"
#include "agefair/data.hpp"
#include "agefair/losses.hpp"
#include "agefair/network.hpp"
#include "agefair/rng.hpp"

namespace agefair {

enum class ModelKind : std::uint32_t {
    baseline_dnn = 0,
    simple = 1,
    autoencoder = 2,
    consensus_net = 3,
    entropy = 4,
    entropy_binary = 5,
    entropy_honly = 6,
};

inline const char* kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::baseline_dnn: return "baseline_dnn";
        case ModelKind::simple: return "simple";
        case ModelKind::autoencoder: return "autoencoder";
        case ModelKind::consensus_net: return "consensus_net";
        case ModelKind::entropy: return "entropy";
        case ModelKind::entropy_binary: return "entropy_binary";
        case ModelKind::entropy_honly: return "entropy_Honly";
    }
    throw InputError("unknown model kind value");
}

inline ModelKind kind_from_name(const std::string& name) {
    for (ModelKind k : {ModelKind::baseline_dnn, ModelKind::simple, ModelKind::autoencoder,
                        ModelKind::consensus_net, ModelKind::entropy, ModelKind::entropy_binary,
                        ModelKind::entropy_honly})
        if (name == kind_name(k)) return k;
    if (name == "entropy_honly") return ModelKind::entropy_honly;  // case-relaxed alias
    throw InputError("unknown model kind '" + name +
                     "' (expected baseline_dnn, simple, autoencoder, consensus_net, entropy, "
                     "entropy_binary, or entropy_Honly)");
}

inline bool kind_has_adversary(ModelKind k) { return k != ModelKind::baseline_dnn; }
inline bool kind_has_reconstructor(ModelKind k) {
    return k == ModelKind::autoencoder || k == ModelKind::entropy ||
           k == ModelKind::entropy_binary || k == ModelKind::entropy_honly;
}
inline bool kind_has_discriminator(ModelKind k) { return k == ModelKind::consensus_net; }
inline bool kind_is_entropy(ModelKind k) {
    return k == ModelKind::entropy || k == ModelKind::entropy_binary ||
           k == ModelKind::entropy_honly;
}

struct TrainConfig {
    std::size_t epochs = 200;                    // N
    std::size_t adversary_steps = 10;            // K (and K_A for consensus)
    std::size_t discriminator_steps = 5;         // K_D
    std::size_t batch_size = 32;
    double lambda_h = 0.5;                       // entropy term coefficient
    // L_a weight in the joint objective; 0 disables. The minimax objective is
    // written with an implicit weight of 1, but at 1.0 the interpreter trades
    // away too much task signal on the bundled generator; 0.3 keeps the
    // fairness gain while holding accuracy near the baseline.
    double adversary_weight = 0.3;
    double reconstruction_weight = 1.0;          // L_r weight; 0 disables
    double discriminator_weight = 1.0;           // L_d weight; 0 disables
    double learning_rate = 3e-4;
    double weight_decay = 1e-3;
    std::size_t modalities = 3;                  // M for consensus_net
    double age_mean = 0.0;                       // age normalization; sd <= 0 means
    double age_sd = 0.0;                         //   "fit on the training data"
    std::uint64_t seed = 1;
    std::size_t z_dim = 16;
    std::size_t interpreter_hidden = 64;
    std::size_t classifier_hidden = 16;
    std::size_t adversary_hidden = 16;
    std::size_t reconstructor_hidden = 64;

    void validate() const {
        if (epochs < 1) throw InputError("train config: epochs must be at least 1");
        if (adversary_steps < 1 || discriminator_steps < 1)
            throw InputError("train config: inner step counts must be at least 1");
        if (batch_size < 2) throw InputError("train config: batch size must be at least 2");
        if (lambda_h < 0) throw InputError("train config: lambda_h must be nonnegative");
        if (adversary_weight < 0 || reconstruction_weight < 0 || discriminator_weight < 0)
            throw InputError("train config: loss weights must be nonnegative");
        if (modalities < 1) throw InputError("train config: modalities must be at least 1");
        if (z_dim < 1) throw InputError("train config: z_dim must be at least 1");
    }

    AdamConfig adam() const {
        AdamConfig a;
        a.learning_rate = learning_rate;
        a.weight_decay = weight_decay;
        return a;
    }
};

struct ModalitySplit {
    std::vector<std::vector<std::size_t>> columns;  // disjoint, covering all feature columns

    std::size_t n_modalities() const { return columns.size(); }
};

// Columns are dealt round-robin after a seeded shuffle, then sorted within
// each modality so a single-modality split reproduces the input unchanged.
inline ModalitySplit make_modality_split(std::size_t d, std::size_t m_count, std::uint64_t seed) {
    if (m_count < 1) throw InputError("modality split: need at least one modality");
    if (d < m_count)
        throw InputError("modality split: " + std::to_string(d) + " columns cannot fill " +
                         std::to_string(m_count) + " modalities");
    std::vector<std::size_t> cols(d);
    std::iota(cols.begin(), cols.end(), 0);
    Rng rng = make_rng(derive_seed(seed, "modality-split"));
    std::shuffle(cols.begin(), cols.end(), rng);
    ModalitySplit split;
    split.columns.resize(m_count);
    for (std::size_t i = 0; i < d; ++i) split.columns[i % m_count].push_back(cols[i]);
    for (auto& group : split.columns) std::sort(group.begin(), group.end());
    return split;
}

struct ModelBundle {
    ModelKind kind = ModelKind::baseline_dnn;
    std::vector<Network> interpreters;  // one, or M for consensus_net
    Network classifier;
    Network adversary;
    Network reconstructor;
    Network discriminator;
    ModalitySplit split;  // consensus_net only
    std::size_t input_dim = 0;
    std::size_t z_dim = 0;
    double age_mean = 0.0;  // normalization used at train time
    double age_sd = 1.0;

    bool has_adversary() const { return kind_has_adversary(kind); }
    bool has_reconstructor() const { return kind_has_reconstructor(kind); }
    bool has_discriminator() const { return kind_has_discriminator(kind); }
    std::size_t n_modalities() const { return interpreters.size(); }
};

inline ModelBundle build(ModelKind kind, std::size_t d, const TrainConfig& cfg) {
    if (d < 1) throw InputError("build: need at least one feature");
    cfg.validate();
    ModelBundle b;
    b.kind = kind;
    b.input_dim = d;
    b.z_dim = cfg.z_dim;

    const std::size_t m_count = kind == ModelKind::consensus_net ? cfg.modalities : 1;
    if (kind == ModelKind::consensus_net) b.split = make_modality_split(d, m_count, cfg.seed);
    for (std::size_t m = 0; m < m_count; ++m) {
        const std::size_t dm =
            kind == ModelKind::consensus_net ? b.split.columns[m].size() : d;
        Rng rng = make_rng(derive_seed(cfg.seed, "init-interpreter", m));
        b.interpreters.push_back(Network::mlp(dm, {cfg.interpreter_hidden}, cfg.z_dim, rng));
    }
    {
        Rng rng = make_rng(derive_seed(cfg.seed, "init-classifier"));
        b.classifier = Network::mlp(cfg.z_dim * m_count, {cfg.classifier_hidden}, 2, rng);
    }
    if (kind_has_adversary(kind)) {
        Rng rng = make_rng(derive_seed(cfg.seed, "init-adversary"));
        const std::size_t out = kind_is_entropy(kind) ? 2 : 1;
        b.adversary = Network::mlp(cfg.z_dim, {cfg.adversary_hidden}, out, rng);
    }
    if (kind_has_reconstructor(kind)) {
        Rng rng = make_rng(derive_seed(cfg.seed, "init-reconstructor"));
        b.reconstructor = Network::mlp(cfg.z_dim, {cfg.reconstructor_hidden}, d, rng);
    }
    if (kind_has_discriminator(kind)) {
        Rng rng = make_rng(derive_seed(cfg.seed, "init-discriminator"));
        b.discriminator = Network::mlp(cfg.z_dim, {cfg.adversary_hidden}, m_count, rng);
    }
    return b;
}

namespace detail {

inline Tensor2 take_rows(const Tensor2& x, const std::vector<std::size_t>& rows) {
    Tensor2 out(rows.size(), x.cols);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t j = 0; j < x.cols; ++j) out(r, j) = x(rows[r], j);
    return out;
}

inline Tensor2 take_columns(const Tensor2& x, const std::vector<std::size_t>& cols) {
    Tensor2 out(x.rows, cols.size());
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = x(i, cols[j]);
    return out;
}

inline void add_scaled(Tensor2& dst, const Tensor2& src, double scale) {
    require_same_shape(dst, src, "gradient accumulation");
    for (std::size_t k = 0; k < dst.data.size(); ++k) dst.data[k] += scale * src.data[k];
}

// Shuffled index batches; a trailing singleton is merged into the previous
// batch because train-mode batchnorm needs at least two rows.
inline std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                          Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<long>(start),
                             order.begin() + static_cast<long>(end));
    }
    if (batches.size() > 1 && batches.back().size() == 1) {
        batches[batches.size() - 2].push_back(batches.back()[0]);
        batches.pop_back();
    }
    return batches;
}

}  // namespace detail

struct BatchLosses {
    double c = 0.0;
    double a = 0.0;
    double r = 0.0;
    double d = 0.0;
};

namespace detail {

// The adversary's loss and logit-gradient for the entropy family:
// cross-entropy on the over-mean-age indicator plus lambda_h times the
// prediction entropy, with either term alone for the ablations.
inline LossResult entropy_adversary_loss(ModelKind kind, const Tensor2& logits,
                                         const std::vector<int>& over_mean, double lambda_h) {
    if (kind == ModelKind::entropy_honly) {
        LossResult ent = softmax_entropy(logits);
        ent.value *= lambda_h;
        for (double& g : ent.grad.data) g *= lambda_h;
        return ent;
    }
    LossResult ce = nll_loss(logits, over_mean);
    if (kind == ModelKind::entropy && lambda_h != 0.0) {
        const LossResult ent = softmax_entropy(logits);
        ce.value += lambda_h * ent.value;
        for (std::size_t k = 0; k < ce.grad.data.size(); ++k)
            ce.grad.data[k] += lambda_h * ent.grad.data[k];
    }
    return ce;
}

}  // namespace detail

// One joint-step evaluation: forwards every active component in train mode,
// accumulates gradients exactly as the trainer does, and returns the joint
// objective value. Interpreter/classifier/reconstructor gradient buffers hold
// the joint objective's gradient; the adversary buffer holds dL_a/dtheta and
// the discriminator buffer dL_d/dtheta (their joint-objective gradients are
// those scaled by -adversary_weight / -discriminator_weight).
// `cached_z` receives the per-modality representations for the inner steps.
inline double joint_objective_and_gradients(ModelBundle& b, const Tensor2& x,
                                            const std::vector<int>& labels,
                                            const std::vector<double>& std_ages,
                                            const TrainConfig& cfg, BatchLosses& losses,
                                            std::vector<Tensor2>* cached_z = nullptr) {
    const std::size_t m_count = b.n_modalities();
    const double m_scale = 1.0 / static_cast<double>(m_count);
    losses = BatchLosses{};

    for (Network& net : b.interpreters) net.zero_grad();
    b.classifier.zero_grad();
    if (b.has_adversary()) b.adversary.zero_grad();
    if (b.has_reconstructor()) b.reconstructor.zero_grad();
    if (b.has_discriminator()) b.discriminator.zero_grad();

    // representations
    std::vector<Tensor2> zs;
    zs.reserve(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
        const Tensor2 xm = b.kind == ModelKind::consensus_net
                               ? detail::take_columns(x, b.split.columns[m])
                               : x;
        zs.push_back(b.interpreters[m].forward(xm, Mode::Train));
    }
    Tensor2 z_cat(x.rows, b.z_dim * m_count);
    for (std::size_t m = 0; m < m_count; ++m)
        for (std::size_t i = 0; i < x.rows; ++i)
            for (std::size_t j = 0; j < b.z_dim; ++j)
                z_cat(i, m * b.z_dim + j) = zs[m](i, j);

    std::vector<Tensor2> dz(m_count, Tensor2(x.rows, b.z_dim, 0.0));

    // classifier term
    {
        const Tensor2 logits = b.classifier.forward(z_cat, Mode::Train);
        const LossResult lc = nll_loss(logits, labels);
        losses.c = lc.value;
        const Tensor2 dz_cat = b.classifier.backward(lc.grad);
        for (std::size_t m = 0; m < m_count; ++m)
            for (std::size_t i = 0; i < x.rows; ++i)
                for (std::size_t j = 0; j < b.z_dim; ++j)
                    dz[m](i, j) += dz_cat(i, m * b.z_dim + j);
    }

    // adversary term (skipped entirely when its weight is zero)
    if (b.has_adversary() && cfg.adversary_weight > 0.0) {
        if (kind_is_entropy(b.kind)) {
            std::vector<int> over_mean(std_ages.size());
            for (std::size_t i = 0; i < std_ages.size(); ++i)
                over_mean[i] = std_ages[i] > 0.0 ? 1 : 0;
            const Tensor2 alogits = b.adversary.forward(zs[0], Mode::Train);
            const LossResult la =
                detail::entropy_adversary_loss(b.kind, alogits, over_mean, cfg.lambda_h);
            losses.a = la.value;
            detail::add_scaled(dz[0], b.adversary.backward(la.grad), -cfg.adversary_weight);
        } else {
            Tensor2 age_col(x.rows, 1);
            for (std::size_t i = 0; i < x.rows; ++i) age_col(i, 0) = std_ages[i];
            for (std::size_t m = 0; m < m_count; ++m) {
                const Tensor2 pred = b.adversary.forward(zs[m], Mode::Train);
                LossResult la = l2_loss(pred, age_col);
                losses.a += m_scale * la.value;
                for (double& g : la.grad.data) g *= m_scale;
                detail::add_scaled(dz[m], b.adversary.backward(la.grad), -cfg.adversary_weight);
            }
        }
    }

    // reconstruction term
    if (b.has_reconstructor() && cfg.reconstruction_weight > 0.0) {
        const Tensor2 xhat = b.reconstructor.forward(zs[0], Mode::Train);
        LossResult lr = l2_loss(xhat, x);
        losses.r = lr.value;
        for (double& g : lr.grad.data) g *= cfg.reconstruction_weight;
        detail::add_scaled(dz[0], b.reconstructor.backward(lr.grad), 1.0);
    }

    // modality discriminator term
    if (b.has_discriminator() && cfg.discriminator_weight > 0.0) {
        for (std::size_t m = 0; m < m_count; ++m) {
            const Tensor2 dlogits = b.discriminator.forward(zs[m], Mode::Train);
            const std::vector<int> targets(x.rows, static_cast<int>(m));
            LossResult ld = nll_loss(dlogits, targets);
            losses.d += m_scale * ld.value;
            for (double& g : ld.grad.data) g *= m_scale;
            detail::add_scaled(dz[m], b.discriminator.backward(ld.grad),
                               -cfg.discriminator_weight);
        }
    }

    for (std::size_t m = 0; m < m_count; ++m) b.interpreters[m].backward(dz[m]);

    if (cached_z) *cached_z = std::move(zs);
    return losses.c - cfg.adversary_weight * losses.a + cfg.reconstruction_weight * losses.r -
           cfg.discriminator_weight * losses.d;
}

namespace detail {

struct AdamSet {
    std::vector<AdamState> interpreters;
    AdamState classifier, adversary, reconstructor, discriminator;

    AdamSet(ModelBundle& b, const TrainConfig& cfg) {
        const AdamConfig a = cfg.adam();
        for (Network& net : b.interpreters) interpreters.emplace_back(net, a);
        classifier = AdamState(b.classifier, a);
        if (b.has_adversary()) adversary = AdamState(b.adversary, a);
        if (b.has_reconstructor()) reconstructor = AdamState(b.reconstructor, a);
        if (b.has_discriminator()) discriminator = AdamState(b.discriminator, a);
    }
};

// One gradient step of the adversary alone on the cached representations.
inline double adversary_inner_step(ModelBundle& b, AdamState& opt, const std::vector<Tensor2>& zs,
                                   const std::vector<double>& std_ages, const TrainConfig& cfg) {
    b.adversary.zero_grad();
    double value = 0.0;
    if (kind_is_entropy(b.kind)) {
        std::vector<int> over_mean(std_ages.size());
        for (std::size_t i = 0; i < std_ages.size(); ++i)
            over_mean[i] = std_ages[i] > 0.0 ? 1 : 0;
        const Tensor2 alogits = b.adversary.forward(zs[0], Mode::Train);
        const LossResult la = entropy_adversary_loss(b.kind, alogits, over_mean, cfg.lambda_h);
        value = la.value;
        b.adversary.backward(la.grad);
    } else {
        const double m_scale = 1.0 / static_cast<double>(zs.size());
        Tensor2 age_col(std_ages.size(), 1);
        for (std::size_t i = 0; i < std_ages.size(); ++i) age_col(i, 0) = std_ages[i];
        for (const Tensor2& z : zs) {
            const Tensor2 pred = b.adversary.forward(z, Mode::Train);
            LossResult la = l2_loss(pred, age_col);
            value += m_scale * la.value;
            for (double& g : la.grad.data) g *= m_scale;
            b.adversary.backward(la.grad);
        }
    }
    adam_step(b.adversary, opt);
    return value;
}

// One gradient step of the modality discriminator alone.
inline double discriminator_inner_step(ModelBundle& b, AdamState& opt,
                                       const std::vector<Tensor2>& zs) {
    b.discriminator.zero_grad();
    const double m_scale = 1.0 / static_cast<double>(zs.size());
    double value = 0.0;
    for (std::size_t m = 0; m < zs.size(); ++m) {
        const Tensor2 dlogits = b.discriminator.forward(zs[m], Mode::Train);
        const std::vector<int> targets(zs[m].rows, static_cast<int>(m));
        LossResult ld = nll_loss(dlogits, targets);
        value += m_scale * ld.value;
        for (double& g : ld.grad.data) g *= m_scale;
        b.discriminator.backward(ld.grad);
    }
    adam_step(b.discriminator, opt);
    return value;
}

}  // namespace detail

struct LossHistory {
    std::vector<double> loss_c, loss_a, loss_r, loss_d;  // per-epoch means over batches

    std::size_t epochs() const { return loss_c.size(); }
};

inline void save_loss_history(const std::string& path, const LossHistory& h) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open " + path + " for writing");
    out << "epoch,loss_c,loss_a,loss_r,loss_d\n";
    for (std::size_t e = 0; e < h.epochs(); ++e)
        out << (e + 1) << ',' << format_real(h.loss_c[e]) << ',' << format_real(h.loss_a[e]) << ','
            << format_real(h.loss_r[e]) << ',' << format_real(h.loss_d[e]) << "\n";
    if (!out) throw InputError("failed writing " + path);
}

// Population mean/sd of the training ages, unless the config pins them.
inline std::pair<double, double> effective_age_stats(const std::vector<double>& ages,
                                                     const TrainConfig& cfg) {
    if (cfg.age_sd > 0.0) return {cfg.age_mean, cfg.age_sd};
    double mu = 0.0;
    for (double a : ages) mu += a;
    mu /= static_cast<double>(ages.size());
    double var = 0.0;
    for (double a : ages) var += (a - mu) * (a - mu);
    var /= static_cast<double>(ages.size());
    return {mu, var > 0.0 ? std::sqrt(var) : 1.0};
}

// The alternating trainer shared by every architecture.
inline LossHistory train_model(ModelBundle& b, const FeatureMatrix& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.n_samples() < 2) throw InputError("train: need at least two samples");
    if (data.n_features() != b.input_dim)
        throw DimensionError("train: bundle built for " + std::to_string(b.input_dim) +
                             " features, data has " + std::to_string(data.n_features()));
    for (int l : data.labels)
        if (l != 0 && l != 1) throw InputError("train: labels must be binary");

    const auto [age_mu, age_sd] = effective_age_stats(data.ages, cfg);
    b.age_mean = age_mu;
    b.age_sd = age_sd;
    std::vector<double> std_ages(data.n_samples());
    for (std::size_t i = 0; i < data.n_samples(); ++i)
        std_ages[i] = (data.ages[i] - age_mu) / age_sd;

    detail::AdamSet opt(b, cfg);
    Rng shuffle_rng = make_rng(derive_seed(cfg.seed, "shuffle"));
    LossHistory history;

    const bool run_adversary = b.has_adversary() && cfg.adversary_weight > 0.0;
    const bool run_discriminator = b.has_discriminator() && cfg.discriminator_weight > 0.0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto batches = detail::make_batches(data.n_samples(), cfg.batch_size, shuffle_rng);
        BatchLosses sums;
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            const std::vector<std::size_t>& rows = batches[bi];
            const Tensor2 x = detail::take_rows(data.features, rows);
            std::vector<int> labels(rows.size());
            std::vector<double> ages(rows.size());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                labels[r] = data.labels[rows[r]];
                ages[r] = std_ages[rows[r]];
            }

            BatchLosses losses;
            std::vector<Tensor2> zs;
            joint_objective_and_gradients(b, x, labels, ages, cfg, losses, &zs);
            if (!std::isfinite(losses.c) || !std::isfinite(losses.a) ||
                !std::isfinite(losses.r) || !std::isfinite(losses.d))
                throw NumericError("epoch " + std::to_string(epoch) + " batch " +
                                   std::to_string(bi + 1) + ": non-finite loss");

            for (std::size_t m = 0; m < b.n_modalities(); ++m)
                adam_step(b.interpreters[m], opt.interpreters[m]);
            adam_step(b.classifier, opt.classifier);
            if (b.has_reconstructor() && cfg.reconstruction_weight > 0.0)
                adam_step(b.reconstructor, opt.reconstructor);

            if (run_discriminator)
                for (std::size_t k = 0; k < cfg.discriminator_steps; ++k)
                    detail::discriminator_inner_step(b, opt.discriminator, zs);
            if (run_adversary)
                for (std::size_t k = 0; k < cfg.adversary_steps; ++k)
                    detail::adversary_inner_step(b, opt.adversary, zs, ages, cfg);

            sums.c += losses.c;
            sums.a += losses.a;
            sums.r += losses.r;
            sums.d += losses.d;
        }
        const double nb = static_cast<double>(batches.size());
        history.loss_c.push_back(sums.c / nb);
        history.loss_a.push_back(sums.a / nb);
        history.loss_r.push_back(sums.r / nb);
        history.loss_d.push_back(sums.d / nb);
    }
    return history;
}

inline LossHistory train_simple(ModelBundle& b, const FeatureMatrix& data,
                                const TrainConfig& cfg) {
    if (b.kind != ModelKind::simple) throw InputError("train_simple: bundle kind mismatch");
    return train_model(b, data, cfg);
}

inline LossHistory train_autoencoder(ModelBundle& b, const FeatureMatrix& data,
                                     const TrainConfig& cfg) {
    if (b.kind != ModelKind::autoencoder)
        throw InputError("train_autoencoder: bundle kind mismatch");
    return train_model(b, data, cfg);
}

inline LossHistory train_consensus(ModelBundle& b, const ModalitySplit& split,
                                   const FeatureMatrix& data, const TrainConfig& cfg) {
    if (b.kind != ModelKind::consensus_net)
        throw InputError("train_consensus: bundle kind mismatch");
    if (split.n_modalities() != b.n_modalities())
        throw InputError("train_consensus: split modality count mismatch");
    for (std::size_t m = 0; m < split.n_modalities(); ++m)
        if (split.columns[m].size() != b.interpreters[m].input_width())
            throw DimensionError("train_consensus: modality " + std::to_string(m) + " has " +
                                 std::to_string(split.columns[m].size()) +
                                 " columns but its interpreter takes " +
                                 std::to_string(b.interpreters[m].input_width()));
    b.split = split;
    return train_model(b, data, cfg);
}

enum class EntropyVariant { full, binary, honly };

inline LossHistory train_entropy(ModelBundle& b, const FeatureMatrix& data,
                                 const TrainConfig& cfg, EntropyVariant variant) {
    const ModelKind expected = variant == EntropyVariant::full      ? ModelKind::entropy
                               : variant == EntropyVariant::binary ? ModelKind::entropy_binary
                                                                   : ModelKind::entropy_honly;
    if (b.kind != expected) throw InputError("train_entropy: bundle kind does not match variant");
    return train_model(b, data, cfg);
}

inline std::pair<ModelBundle, LossHistory> train_baseline_dnn(const FeatureMatrix& data,
                                                              const TrainConfig& cfg) {
    ModelBundle b = build(ModelKind::baseline_dnn, data.n_features(), cfg);
    LossHistory h = train_model(b, data, cfg);
    return {std::move(b), std::move(h)};
}

// Eval-mode representation: z, or the concatenation [z_1 .. z_M] for consensus.
inline Tensor2 encode(ModelBundle& b, const Tensor2& x) {
    if (x.cols != b.input_dim)
        throw DimensionError("encode: expected " + std::to_string(b.input_dim) + " columns, got " +
                             std::to_string(x.cols));
    const std::size_t m_count = b.n_modalities();
    Tensor2 z_cat(x.rows, b.z_dim * m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
        const Tensor2 xm = b.kind == ModelKind::consensus_net
                               ? detail::take_columns(x, b.split.columns[m])
                               : x;
        const Tensor2 z = b.interpreters[m].forward(xm, Mode::Eval);
        for (std::size_t i = 0; i < x.rows; ++i)
            for (std::size_t j = 0; j < b.z_dim; ++j) z_cat(i, m * b.z_dim + j) = z(i, j);
    }
    return z_cat;
}

struct Predictions {
    std::vector<int> labels;
    Tensor2 probabilities;  // n x 2
};

// Deterministic eval-mode prediction; equal logits break toward class 0.
inline Predictions predict(ModelBundle& b, const Tensor2& x) {
    const Tensor2 z = encode(b, x);
    const Tensor2 logits = b.classifier.forward(z, Mode::Eval);
    Predictions out;
    out.probabilities = softmax(logits);
    out.labels.resize(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
        out.labels[i] = out.probabilities(i, 1) > out.probabilities(i, 0) ? 1 : 0;
    return out;
}

struct ProbeConfig {
    std::vector<std::size_t> hidden = {64, 32, 8};
    std::size_t epochs = 60;
    std::size_t batch_size = 32;
    double learning_rate = 3e-4;
    // Decoupled decay this strong is what keeps the probe honest: with a few
    // hundred samples it otherwise overfits badly enough to lose to the
    // mean predictor even when age is recoverable.
    double weight_decay = 5.0;
    std::size_t folds = 5;
    std::uint64_t seed = 1;
};

struct ProbeResult {
    double mae = 0.0;                 // cross-validated mean absolute error, years
    double mean_predictor_mae = 0.0;  // same folds, predicting the train-fold mean age
    std::vector<double> fold_mae;
};

namespace detail {

struct FoldProbeOutcome {
    double abs_error_sum = 0.0;       // regressor, years
    double ref_abs_error_sum = 0.0;   // train-mean predictor, years
    std::size_t n_test = 0;

    double mae() const { return abs_error_sum / static_cast<double>(n_test); }
    double ref_mae() const { return ref_abs_error_sum / static_cast<double>(n_test); }
};

// Trains one age regressor on a given train split and scores it on the test
// split; inputs are standardized with train-split statistics, the target with
// the train-split age mean/sd. The reference predictor answers the train mean.
inline FoldProbeOutcome probe_fold(const Tensor2& train_x, const std::vector<double>& train_ages,
                                   const Tensor2& test_x, const std::vector<double>& test_ages,
                                   const ProbeConfig& cfg, std::uint64_t seed) {
    if (train_x.rows < 2 || test_x.rows == 0) throw InputError("age probe: fold too small");
    if (train_x.rows != train_ages.size() || test_x.rows != test_ages.size())
        throw DimensionError("age probe: ages do not match matrix rows");

    const NormStats stats = zscore_fit(train_x);
    const Tensor2 ztrain = zscore_apply(stats, train_x);
    const Tensor2 ztest = zscore_apply(stats, test_x);
    const auto [age_mu, age_sd] = effective_age_stats(train_ages, TrainConfig{});

    Rng init_rng = make_rng(derive_seed(seed, "probe-init"));
    Network net = Network::mlp(train_x.cols, cfg.hidden, 1, init_rng);
    AdamConfig acfg;
    acfg.learning_rate = cfg.learning_rate;
    acfg.weight_decay = cfg.weight_decay;
    AdamState opt(net, acfg);
    Rng shuffle_rng = make_rng(derive_seed(seed, "probe-shuffle"));

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto batches = make_batches(ztrain.rows, cfg.batch_size, shuffle_rng);
        for (const auto& rows : batches) {
            const Tensor2 x = take_rows(ztrain, rows);
            Tensor2 target(rows.size(), 1);
            for (std::size_t r = 0; r < rows.size(); ++r)
                target(r, 0) = (train_ages[rows[r]] - age_mu) / age_sd;
            net.zero_grad();
            const Tensor2 pred = net.forward(x, Mode::Train);
            const LossResult loss = l2_loss(pred, target);
            if (!std::isfinite(loss.value))
                throw NumericError("age probe: non-finite loss in epoch " +
                                   std::to_string(epoch + 1));
            net.backward(loss.grad);
            adam_step(net, opt);
        }
    }

    FoldProbeOutcome out;
    const Tensor2 pred = net.forward(ztest, Mode::Eval);
    for (std::size_t i = 0; i < ztest.rows; ++i) {
        const double years = pred(i, 0) * age_sd + age_mu;
        out.abs_error_sum += std::abs(years - test_ages[i]);
        out.ref_abs_error_sum += std::abs(age_mu - test_ages[i]);
    }
    out.n_test = ztest.rows;
    return out;
}

}  // namespace detail

// Fresh age regressor trained per speaker-grouped fold on features -> age;
// the reference predictor answers the training fold's mean age everywhere.
inline ProbeResult probe_age(const FeatureMatrix& data, const ProbeConfig& cfg) {
    if (cfg.folds < 2) throw InputError("probe_age: need at least two folds");
    FoldPlan plan = speaker_kfold(data, cfg.folds, derive_seed(cfg.seed, "probe-folds"));
    ProbeResult res;
    double abs_sum = 0.0, ref_sum = 0.0;
    std::size_t total = 0;
    for (std::size_t fold = 0; fold < cfg.folds; ++fold) {
        const FeatureMatrix train = data.select(plan.train_indices(fold));
        const FeatureMatrix test = data.select(plan.test_indices(fold));
        const detail::FoldProbeOutcome out =
            detail::probe_fold(train.features, train.ages, test.features, test.ages, cfg,
                               derive_seed(cfg.seed, "probe-fold", fold));
        abs_sum += out.abs_error_sum;
        ref_sum += out.ref_abs_error_sum;
        total += out.n_test;
        res.fold_mae.push_back(out.mae());
    }
    res.mae = abs_sum / static_cast<double>(total);
    res.mean_predictor_mae = ref_sum / static_cast<double>(total);
    return res;
}

// ---- bundle serialization: versioned little-endian binary ----

namespace detail {

constexpr std::array<char, 4> kBundleMagic = {'A', 'G', 'F', 'B'};
constexpr std::uint32_t kBundleVersion = 1;

inline void write_u8(std::ostream& out, std::uint8_t v) {
    out.put(static_cast<char>(v));
}
inline void write_u32(std::ostream& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void write_u64(std::ostream& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void write_f64(std::ostream& out, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, 8);
    write_u64(out, bits);
}
inline void write_f64_vector(std::ostream& out, const std::vector<double>& v) {
    write_u64(out, v.size());
    for (double x : v) write_f64(out, x);
}

inline std::uint8_t read_u8(std::istream& in, const std::string& path) {
    const int c = in.get();
    if (c == EOF) throw FormatError(path + ": truncated bundle file");
    return static_cast<std::uint8_t>(c);
}
inline std::uint32_t read_u32(std::istream& in, const std::string& path) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(read_u8(in, path)) << (8 * i);
    return v;
}
inline std::uint64_t read_u64(std::istream& in, const std::string& path) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(read_u8(in, path)) << (8 * i);
    return v;
}
inline double read_f64(std::istream& in, const std::string& path) {
    const std::uint64_t bits = read_u64(in, path);
    double v = 0.0;
    std::memcpy(&v, &bits, 8);
    return v;
}
inline std::vector<double> read_f64_vector(std::istream& in, const std::string& path) {
    const std::uint64_t n = read_u64(in, path);
    if (n > (1ull << 32)) throw FormatError(path + ": implausible vector length");
    std::vector<double> v(n);
    for (std::uint64_t i = 0; i < n; ++i) v[i] = read_f64(in, path);
    return v;
}

inline void write_network(std::ostream& out, const Network& net) {
    write_u64(out, net.input_width());
    write_u64(out, net.layers().size());
    for (const Layer& l : net.layers()) {
        if (const auto* d = std::get_if<DenseLayer>(&l)) {
            write_u8(out, 0);
            write_u64(out, d->in);
            write_u64(out, d->out);
            write_f64_vector(out, d->weights);
            write_f64_vector(out, d->bias);
        } else if (std::get_if<ReluLayer>(&l)) {
            write_u8(out, 1);
        } else if (const auto* bn = std::get_if<BatchNormLayer>(&l)) {
            write_u8(out, 2);
            write_u64(out, bn->width);
            write_f64(out, bn->momentum);
            write_f64(out, bn->epsilon);
            write_f64_vector(out, bn->gamma);
            write_f64_vector(out, bn->beta);
            write_f64_vector(out, bn->running_mean);
            write_f64_vector(out, bn->running_var);
        }
    }
}

inline Network read_network(std::istream& in, const std::string& path) {
    const std::uint64_t input_width = read_u64(in, path);
    const std::uint64_t n_layers = read_u64(in, path);
    if (n_layers > 1024) throw FormatError(path + ": implausible layer count");
    std::vector<Layer> layers;
    for (std::uint64_t li = 0; li < n_layers; ++li) {
        const std::uint8_t tag = read_u8(in, path);
        if (tag == 0) {
            const std::uint64_t in_w = read_u64(in, path);
            const std::uint64_t out_w = read_u64(in, path);
            DenseLayer d(in_w, out_w);
            d.weights = read_f64_vector(in, path);
            d.bias = read_f64_vector(in, path);
            if (d.weights.size() != in_w * out_w || d.bias.size() != out_w)
                throw FormatError(path + ": dense layer size mismatch");
            layers.emplace_back(std::move(d));
        } else if (tag == 1) {
            layers.emplace_back(ReluLayer{});
        } else if (tag == 2) {
            const std::uint64_t width = read_u64(in, path);
            BatchNormLayer bn(width);
            bn.momentum = read_f64(in, path);
            bn.epsilon = read_f64(in, path);
            bn.gamma = read_f64_vector(in, path);
            bn.beta = read_f64_vector(in, path);
            bn.running_mean = read_f64_vector(in, path);
            bn.running_var = read_f64_vector(in, path);
            if (bn.gamma.size() != width || bn.beta.size() != width ||
                bn.running_mean.size() != width || bn.running_var.size() != width)
                throw FormatError(path + ": batchnorm size mismatch");
            layers.emplace_back(std::move(bn));
        } else {
            throw FormatError(path + ": unknown layer tag " + std::to_string(tag));
        }
    }
    return Network(input_width, std::move(layers));
}

}  // namespace detail

inline void save_bundle(const std::string& path, const ModelBundle& b) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open " + path + " for writing");
    out.write(detail::kBundleMagic.data(), 4);
    detail::write_u32(out, detail::kBundleVersion);
    detail::write_u32(out, static_cast<std::uint32_t>(b.kind));
    detail::write_u64(out, b.input_dim);
    detail::write_u64(out, b.z_dim);
    detail::write_f64(out, b.age_mean);
    detail::write_f64(out, b.age_sd);
    detail::write_u64(out, b.split.columns.size());
    for (const auto& group : b.split.columns) {
        detail::write_u64(out, group.size());
        for (std::size_t col : group) detail::write_u64(out, col);
    }
    detail::write_u64(out, b.interpreters.size());
    for (const Network& net : b.interpreters) detail::write_network(out, net);
    detail::write_network(out, b.classifier);
    detail::write_u8(out, b.has_adversary() ? 1 : 0);
    if (b.has_adversary()) detail::write_network(out, b.adversary);
    detail::write_u8(out, b.has_reconstructor() ? 1 : 0);
    if (b.has_reconstructor()) detail::write_network(out, b.reconstructor);
    detail::write_u8(out, b.has_discriminator() ? 1 : 0);
    if (b.has_discriminator()) detail::write_network(out, b.discriminator);
    if (!out) throw InputError("failed writing " + path);
}

inline ModelBundle load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::array<char, 4> magic{};
    in.read(magic.data(), 4);
    if (in.gcount() != 4 || magic != detail::kBundleMagic)
        throw FormatError(path + ": not a model bundle file");
    const std::uint32_t version = detail::read_u32(in, path);
    if (version != detail::kBundleVersion)
        throw FormatError(path + ": unsupported bundle version " + std::to_string(version));
    ModelBundle b;
    const std::uint32_t kind_value = detail::read_u32(in, path);
    if (kind_value > static_cast<std::uint32_t>(ModelKind::entropy_honly))
        throw FormatError(path + ": unknown model kind " + std::to_string(kind_value));
    b.kind = static_cast<ModelKind>(kind_value);
    b.input_dim = detail::read_u64(in, path);
    b.z_dim = detail::read_u64(in, path);
    b.age_mean = detail::read_f64(in, path);
    b.age_sd = detail::read_f64(in, path);
    const std::uint64_t n_groups = detail::read_u64(in, path);
    if (n_groups > 4096) throw FormatError(path + ": implausible modality count");
    b.split.columns.resize(n_groups);
    for (auto& group : b.split.columns) {
        const std::uint64_t sz = detail::read_u64(in, path);
        if (sz > (1ull << 32)) throw FormatError(path + ": implausible modality size");
        group.resize(sz);
        for (auto& col : group) col = detail::read_u64(in, path);
    }
    const std::uint64_t n_interp = detail::read_u64(in, path);
    if (n_interp == 0 || n_interp > 4096)
        throw FormatError(path + ": implausible interpreter count");
    for (std::uint64_t i = 0; i < n_interp; ++i)
        b.interpreters.push_back(detail::read_network(in, path));
    b.classifier = detail::read_network(in, path);
    const bool has_a = detail::read_u8(in, path) != 0;
    if (has_a != b.has_adversary()) throw FormatError(path + ": component set mismatches kind");
    if (has_a) b.adversary = detail::read_network(in, path);
    const bool has_r = detail::read_u8(in, path) != 0;
    if (has_r != b.has_reconstructor())
        throw FormatError(path + ": component set mismatches kind");
    if (has_r) b.reconstructor = detail::read_network(in, path);
    const bool has_d = detail::read_u8(in, path) != 0;
    if (has_d != b.has_discriminator())
        throw FormatError(path + ": component set mismatches kind");
    if (has_d) b.discriminator = detail::read_network(in, path);
    return b;
}

}  // namespace agefair
