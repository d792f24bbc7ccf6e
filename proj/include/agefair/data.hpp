#pragma once

// Feature-table ingestion, z-score normalization, speaker-grouped k-fold
// splitting, and a synthetic generator with the confounded v-structure
// age -> features <- disease.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "agefair/errors.hpp"
#include "agefair/io_util.hpp"
#include "agefair/rng.hpp"
#include "agefair/tensor.hpp"

namespace agefair {

struct FeatureMatrix {
    std::vector<std::string> ids;
    std::vector<std::string> speakers;
    std::vector<double> ages;
    std::vector<int> labels;  // 0 = control, 1 = dementia
    std::vector<std::string> feature_names;
    Tensor2 features;  // n x d

    std::size_t n_samples() const { return ids.size(); }
    std::size_t n_features() const { return feature_names.size(); }

    FeatureMatrix select(const std::vector<std::size_t>& rows) const {
        FeatureMatrix out;
        out.feature_names = feature_names;
        out.features = Tensor2(rows.size(), feature_names.size());
        std::size_t r = 0;
        for (std::size_t i : rows) {
            if (i >= n_samples()) throw InputError("select: row index out of range");
            out.ids.push_back(ids[i]);
            out.speakers.push_back(speakers[i]);
            out.ages.push_back(ages[i]);
            out.labels.push_back(labels[i]);
            for (std::size_t j = 0; j < feature_names.size(); ++j)
                out.features(r, j) = features(i, j);
            ++r;
        }
        return out;
    }
};

struct LoadResult {
    FeatureMatrix matrix;
    std::size_t dropped_rows = 0;  // rows excluded for missing/unparseable age or label
};

namespace detail {

inline bool parse_real_opt(const std::string& s, double& out) {
    const std::string t = strip_spaces(s);
    if (t.empty()) return false;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    return ec == std::errc{} && p == t.data() + t.size();
}

inline bool parse_binary_opt(const std::string& s, int& out) {
    const std::string t = strip_spaces(s);
    if (t == "0") { out = 0; return true; }
    if (t == "1") { out = 1; return true; }
    return false;
}

}  // namespace detail

inline LoadResult load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> head = split_csv_line(line);
    if (head.size() < 5 || head[0] != "id" || head[1] != "speaker" || head[2] != "age" ||
        head[3] != "label")
        throw FormatError(path + ": expected header 'id,speaker,age,label,<feature names...>'");

    LoadResult res;
    FeatureMatrix& m = res.matrix;
    m.feature_names.assign(head.begin() + 4, head.end());
    const std::size_t d = m.feature_names.size();
    std::vector<double> cells;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 4 + d)
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(4 + d) + " fields, got " + std::to_string(f.size()));
        double age = 0.0;
        int label = 0;
        if (!detail::parse_real_opt(f[2], age) || !std::isfinite(age) ||
            !detail::parse_binary_opt(f[3], label)) {
            ++res.dropped_rows;  // mirror the missing-age exclusion rule
            continue;
        }
        for (std::size_t j = 0; j < d; ++j) {
            double v = 0.0;
            if (!detail::parse_real_opt(f[4 + j], v) || !std::isfinite(v))
                throw FormatError(path + ":" + std::to_string(lineno) + ": feature column '" +
                                  m.feature_names[j] + "' is not a finite number: '" + f[4 + j] +
                                  "'");
            cells.push_back(v);
        }
        m.ids.push_back(f[0]);
        m.speakers.push_back(f[1]);
        m.ages.push_back(age);
        m.labels.push_back(label);
    }
    m.features = Tensor2(m.ids.size(), d);
    m.features.data = std::move(cells);
    return res;
}

inline void save_csv(const std::string& path, const FeatureMatrix& m) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open " + path + " for writing");
    out << "id,speaker,age,label";
    for (const std::string& name : m.feature_names) {
        if (name.find(',') != std::string::npos)
            throw InputError("feature name may not contain commas: " + name);
        out << ',' << name;
    }
    out << "\n";
    for (std::size_t i = 0; i < m.n_samples(); ++i) {
        out << m.ids[i] << ',' << m.speakers[i] << ',' << format_real(m.ages[i]) << ','
            << m.labels[i];
        for (std::size_t j = 0; j < m.n_features(); ++j) out << ',' << format_real(m.features(i, j));
        out << "\n";
    }
    if (!out) throw InputError("failed writing " + path);
}

struct NormStats {
    std::vector<double> mean;
    std::vector<double> sd;                       // population convention; 1 for constant columns
    std::vector<std::size_t> constant_features;   // columns whose sd collapsed to zero
};

inline NormStats zscore_fit(const Tensor2& train) {
    if (train.rows == 0) throw InputError("zscore_fit: empty training matrix");
    const std::size_t n = train.rows, d = train.cols;
    NormStats s;
    s.mean.assign(d, 0.0);
    s.sd.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += train(i, j);
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dv = train(i, j) - mu;
            var += dv * dv;
        }
        var /= static_cast<double>(n);
        s.mean[j] = mu;
        if (var > 0.0) {
            s.sd[j] = std::sqrt(var);
        } else {
            s.sd[j] = 1.0;
            s.constant_features.push_back(j);
        }
    }
    return s;
}

inline NormStats zscore_fit(const FeatureMatrix& train) { return zscore_fit(train.features); }

inline Tensor2 zscore_apply(const NormStats& stats, const Tensor2& x) {
    if (stats.mean.size() != x.cols)
        throw DimensionError("zscore_apply: stats fit on " + std::to_string(stats.mean.size()) +
                             " features, matrix has " + std::to_string(x.cols));
    Tensor2 out = x;
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j)
            out(i, j) = (x(i, j) - stats.mean[j]) / stats.sd[j];
    return out;
}

inline FeatureMatrix zscore_apply(const NormStats& stats, const FeatureMatrix& m) {
    FeatureMatrix out = m;
    out.features = zscore_apply(stats, m.features);
    return out;
}

inline FeatureMatrix zscore_invert(const NormStats& stats, const FeatureMatrix& m) {
    if (stats.mean.size() != m.n_features())
        throw DimensionError("zscore_invert: stats/matrix feature count mismatch");
    FeatureMatrix out = m;
    for (std::size_t i = 0; i < m.n_samples(); ++i)
        for (std::size_t j = 0; j < m.n_features(); ++j)
            out.features(i, j) = m.features(i, j) * stats.sd[j] + stats.mean[j];
    return out;
}

struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::size_t> fold_of_sample;

    std::vector<std::size_t> test_indices(std::size_t fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < fold_of_sample.size(); ++i)
            if (fold_of_sample[i] == fold) out.push_back(i);
        return out;
    }
    std::vector<std::size_t> train_indices(std::size_t fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < fold_of_sample.size(); ++i)
            if (fold_of_sample[i] != fold) out.push_back(i);
        return out;
    }
};

// Speakers are shuffled by seed and dealt round-robin, so a speaker's samples
// always land in one fold.
inline FoldPlan speaker_kfold(const FeatureMatrix& m, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw InputError("speaker_kfold: k must be at least 2");
    std::vector<std::string> speakers;
    for (const std::string& s : m.speakers)
        if (std::find(speakers.begin(), speakers.end(), s) == speakers.end())
            speakers.push_back(s);
    if (speakers.size() < k)
        throw InputError("speaker_kfold: " + std::to_string(speakers.size()) +
                         " speakers cannot fill " + std::to_string(k) + " folds");
    Rng rng = make_rng(derive_seed(seed, "fold-shuffle"));
    std::shuffle(speakers.begin(), speakers.end(), rng);
    FoldPlan plan;
    plan.k = k;
    plan.fold_of_sample.assign(m.n_samples(), 0);
    for (std::size_t i = 0; i < m.n_samples(); ++i) {
        const auto it = std::find(speakers.begin(), speakers.end(), m.speakers[i]);
        plan.fold_of_sample[i] = static_cast<std::size_t>(it - speakers.begin()) % k;
    }
    return plan;
}

struct SynthConfig {
    std::size_t n = 400;
    std::size_t d = 40;
    double confound = 0.3;     // overlap between the disease and age effect directions
    double age_mean = 68.26;
    double age_sd = 9.0;
    // Disease displacement strong enough that the classification stays
    // learnable from the age-orthogonal part of the signal alone.
    double disease_scale = 2.0;
    // Strong enough that a cross-validated probe recovers age from the
    // default output well above the mean predictor.
    double age_scale = 3.0;
    double label_slope = 1.0;  // logistic slope of P(disease | standardized age)
    double noise_sd = 1.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (n == 0 || d == 0) throw InputError("synthetic config: n and d must be positive");
        if (!(confound >= 0.0 && confound <= 1.0))
            throw InputError("synthetic config: confound must lie in [0,1]");
        if (disease_scale < 0 || age_scale < 0 || noise_sd < 0 || age_sd < 0)
            throw InputError("synthetic config: scales must be nonnegative");
    }
};

struct SynthTruth {
    SynthConfig config;
    std::vector<double> w_age;      // scaled age effect vector
    std::vector<double> w_disease;  // scaled disease effect vector
    double positive_fraction = 0.0;
};

struct SynthResult {
    FeatureMatrix matrix;
    SynthTruth truth;
};

namespace detail {

inline std::vector<double> unit_gaussian_vector(std::size_t d, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(d);
    double norm2 = 0.0;
    for (double& x : v) {
        x = g(rng);
        norm2 += x * x;
    }
    const double norm = std::sqrt(norm2);
    if (norm == 0.0) throw NumericError("degenerate direction draw");
    for (double& x : v) x /= norm;
    return v;
}

}  // namespace detail

// The v-structure: age A and disease D both write into the features,
//   x = age_scale * u_age * std(A) + disease_scale * w_dir * D + noise,
// where w_dir overlaps the age direction by `confound` (rho), and the label
// itself leans on age through P(D=1) = sigmoid(slope * std(A)).
inline SynthResult generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.n, d = cfg.d;

    Rng rng_dirs = make_rng(derive_seed(cfg.seed, "synth-directions"));
    const std::vector<double> u_age = detail::unit_gaussian_vector(d, rng_dirs);
    std::vector<double> u_perp = detail::unit_gaussian_vector(d, rng_dirs);
    if (d == 1) {
        u_perp[0] = 0.0;  // no orthogonal direction exists in one dimension
    } else {
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += u_perp[j] * u_age[j];
        double norm2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            u_perp[j] -= dot * u_age[j];
            norm2 += u_perp[j] * u_perp[j];
        }
        const double norm = std::sqrt(norm2);
        if (norm == 0.0) throw NumericError("degenerate orthogonal direction");
        for (std::size_t j = 0; j < d; ++j) u_perp[j] /= norm;
    }

    SynthTruth truth;
    truth.config = cfg;
    truth.w_age.resize(d);
    truth.w_disease.resize(d);
    const double ortho = std::sqrt(std::max(0.0, 1.0 - cfg.confound * cfg.confound));
    for (std::size_t j = 0; j < d; ++j) {
        truth.w_age[j] = cfg.age_scale * u_age[j];
        truth.w_disease[j] = cfg.disease_scale * (cfg.confound * u_age[j] + ortho * u_perp[j]);
    }

    Rng rng_age = make_rng(derive_seed(cfg.seed, "synth-ages"));
    Rng rng_label = make_rng(derive_seed(cfg.seed, "synth-labels"));
    Rng rng_noise = make_rng(derive_seed(cfg.seed, "synth-noise"));
    std::normal_distribution<double> age_dist(cfg.age_mean, cfg.age_sd);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    FeatureMatrix m;
    m.feature_names.resize(d);
    for (std::size_t j = 0; j < d; ++j) m.feature_names[j] = "f" + std::to_string(j);
    m.features = Tensor2(n, d);
    long positives = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double age = age_dist(rng_age);
        const double std_age = cfg.age_sd > 0 ? (age - cfg.age_mean) / cfg.age_sd : 0.0;
        const double p_disease = 1.0 / (1.0 + std::exp(-cfg.label_slope * std_age));
        const int label = unif(rng_label) < p_disease ? 1 : 0;
        positives += label;
        m.ids.push_back("s" + std::to_string(i));
        m.speakers.push_back("spk" + std::to_string(i));  // one speaker per sample
        m.ages.push_back(age);
        m.labels.push_back(label);
        for (std::size_t j = 0; j < d; ++j)
            m.features(i, j) = truth.w_age[j] * std_age +
                               truth.w_disease[j] * static_cast<double>(label) +
                               cfg.noise_sd * noise(rng_noise);
    }
    truth.positive_fraction = static_cast<double>(positives) / static_cast<double>(n);
    return {std::move(m), std::move(truth)};
}

inline void save_synth_truth(const std::string& path, const SynthTruth& t) {
    nlohmann::ordered_json j;
    j["config"] = {
        {"n", t.config.n},
        {"d", t.config.d},
        {"confound", t.config.confound},
        {"age_mean", t.config.age_mean},
        {"age_sd", t.config.age_sd},
        {"disease_scale", t.config.disease_scale},
        {"age_scale", t.config.age_scale},
        {"label_slope", t.config.label_slope},
        {"noise_sd", t.config.noise_sd},
        {"seed", t.config.seed},
    };
    j["w_age"] = t.w_age;
    j["w_disease"] = t.w_disease;
    j["positive_fraction"] = t.positive_fraction;
    std::ofstream out(path);
    if (!out) throw InputError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw InputError("failed writing " + path);
}

}  // namespace agefair
