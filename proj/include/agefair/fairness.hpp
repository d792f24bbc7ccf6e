#pragma once

// Age-group construction and the multi-group equalized-odds gap.
//
// delta_eo over N groups is sum_a |p_a - mean(p)| + sum_a |n_a - mean(n)|
// where p_a / n_a are per-group false positive / false negative rates.
// Groups come from quantile cuts over the evaluated ages; a group that
// lacks positives or negatives makes the score undefined and is reported
// loudly rather than dropped.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "agefair/errors.hpp"
#include "agefair/io_util.hpp"

namespace agefair {

struct PredictionRecord {
    std::string id;
    int true_label = 0;
    int pred_label = 0;
    double age = 0.0;
};

struct AgeGrouping {
    std::size_t n_groups = 1;
    std::vector<double> boundaries;  // strictly increasing, length n_groups-1
    bool valid = true;               // every group saw both labels when fitted

    // Ties on a boundary go to the lower group.
    std::size_t group_of(double age) const {
        return static_cast<std::size_t>(
            std::lower_bound(boundaries.begin(), boundaries.end(), age) - boundaries.begin());
    }
};

inline void require_binary_label(int label, const std::string& what) {
    if (label != 0 && label != 1)
        throw InputError(what + " must be 0 or 1, got " + std::to_string(label));
}

// Quantile cut points over the supplied ages. Boundaries are midpoints between
// consecutive order statistics; when ties would collapse two cuts, the later
// cut slides up to the next strictly larger midpoint.
inline AgeGrouping make_age_groups(const std::vector<double>& ages,
                                   const std::vector<int>& labels,
                                   std::size_t n_groups) {
    if (n_groups < 1) throw InputError("n_groups must be at least 1");
    if (ages.empty()) throw InputError("make_age_groups: no ages supplied");
    if (ages.size() != labels.size())
        throw InputError("make_age_groups: ages and labels differ in length");
    for (int l : labels) require_binary_label(l, "label");

    std::vector<double> sorted = ages;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    std::size_t distinct_count = 1;
    for (std::size_t i = 1; i < n; ++i)
        if (sorted[i] != sorted[i - 1]) ++distinct_count;
    if (distinct_count < n_groups)
        throw InputError("make_age_groups: " + std::to_string(distinct_count) +
                         " distinct ages cannot form " + std::to_string(n_groups) + " groups");

    AgeGrouping g;
    g.n_groups = n_groups;
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < n_groups; ++k) {
        std::size_t m = k * n / n_groups;
        if (m < 1) m = 1;
        if (m > n - 1) m = n - 1;
        double b = 0.5 * (sorted[m - 1] + sorted[m]);
        while (b <= prev && m < n - 1) {
            ++m;
            b = 0.5 * (sorted[m - 1] + sorted[m]);
        }
        if (b <= prev)
            throw InputError("make_age_groups: ages too concentrated for " +
                             std::to_string(n_groups) + " groups");
        g.boundaries.push_back(b);
        prev = b;
    }

    std::vector<int> pos(n_groups, 0), neg(n_groups, 0);
    for (std::size_t i = 0; i < ages.size(); ++i) {
        const std::size_t a = g.group_of(ages[i]);
        (labels[i] == 1 ? pos[a] : neg[a])++;
    }
    g.valid = true;
    for (std::size_t a = 0; a < n_groups; ++a)
        if (pos[a] == 0 || neg[a] == 0) g.valid = false;
    return g;
}

struct GroupedOutcomes {
    std::size_t n_groups = 0;
    std::vector<long> actual_negatives, actual_positives;
    std::vector<long> false_positives, false_negatives;
    std::vector<std::optional<double>> fp_rate, fn_rate;  // empty when denominator is zero
    std::optional<double> fp_rate_mean, fn_rate_mean;     // over defined groups only
};

inline GroupedOutcomes grouped_rates(const std::vector<PredictionRecord>& preds,
                                     const AgeGrouping& grouping) {
    if (preds.empty()) throw InputError("grouped_rates: no predictions");
    const std::size_t ng = grouping.n_groups;
    GroupedOutcomes out;
    out.n_groups = ng;
    out.actual_negatives.assign(ng, 0);
    out.actual_positives.assign(ng, 0);
    out.false_positives.assign(ng, 0);
    out.false_negatives.assign(ng, 0);
    out.fp_rate.assign(ng, std::nullopt);
    out.fn_rate.assign(ng, std::nullopt);

    for (const PredictionRecord& r : preds) {
        require_binary_label(r.true_label, "true_label");
        require_binary_label(r.pred_label, "pred_label");
        const std::size_t a = grouping.group_of(r.age);
        if (r.true_label == 0) {
            out.actual_negatives[a]++;
            if (r.pred_label == 1) out.false_positives[a]++;
        } else {
            out.actual_positives[a]++;
            if (r.pred_label == 0) out.false_negatives[a]++;
        }
    }

    double fp_sum = 0.0, fn_sum = 0.0;
    std::size_t fp_defined = 0, fn_defined = 0;
    for (std::size_t a = 0; a < ng; ++a) {
        if (out.actual_negatives[a] > 0) {
            out.fp_rate[a] = static_cast<double>(out.false_positives[a]) /
                             static_cast<double>(out.actual_negatives[a]);
            fp_sum += *out.fp_rate[a];
            ++fp_defined;
        }
        if (out.actual_positives[a] > 0) {
            out.fn_rate[a] = static_cast<double>(out.false_negatives[a]) /
                             static_cast<double>(out.actual_positives[a]);
            fn_sum += *out.fn_rate[a];
            ++fn_defined;
        }
    }
    if (fp_defined > 0) out.fp_rate_mean = fp_sum / static_cast<double>(fp_defined);
    if (fn_defined > 0) out.fn_rate_mean = fn_sum / static_cast<double>(fn_defined);
    return out;
}

namespace detail {

// Sum of absolute deviations from the mean, computed on the sorted values as
// (sum above mean) - (sum below mean) + (count difference) * mean. Sorting
// makes the result independent of input order, and for two values the
// expression collapses to a single subtraction, so the two-group score equals
// |x0 - x1| bitwise rather than merely up to rounding.
inline double abs_deviation_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double total = 0.0;
    for (double v : values) total += v;
    const double mean = total / static_cast<double>(values.size());
    double above = 0.0, below = 0.0;
    long balance = 0;  // (#below) - (#above); values equal to the mean contribute nothing
    for (double v : values) {
        if (v > mean) {
            above += v;
            --balance;
        } else if (v < mean) {
            below += v;
            ++balance;
        }
    }
    return (above - below) + static_cast<double>(balance) * mean;
}

}  // namespace detail

// Core score on raw per-group rate vectors.
inline double delta_eo(const std::vector<double>& fp_rates, const std::vector<double>& fn_rates) {
    if (fp_rates.empty() || fp_rates.size() != fn_rates.size())
        throw InputError("delta_eo: need matching nonempty rate vectors");
    const auto check01 = [](double r) {
        if (!(r >= 0.0 && r <= 1.0)) throw InputError("delta_eo: rate outside [0,1]");
    };
    for (double r : fp_rates) check01(r);
    for (double r : fn_rates) check01(r);
    return detail::abs_deviation_sum(fp_rates) + detail::abs_deviation_sum(fn_rates);
}

inline double delta_eo(const GroupedOutcomes& outcomes) {
    std::vector<double> p, n;
    p.reserve(outcomes.n_groups);
    n.reserve(outcomes.n_groups);
    for (std::size_t a = 0; a < outcomes.n_groups; ++a) {
        if (!outcomes.fp_rate[a])
            throw DegenerateGroupError("age group " + std::to_string(a) +
                                       " has no actual negatives; false positive rate undefined");
        if (!outcomes.fn_rate[a])
            throw DegenerateGroupError("age group " + std::to_string(a) +
                                       " has no actual positives; false negative rate undefined");
        p.push_back(*outcomes.fp_rate[a]);
        n.push_back(*outcomes.fn_rate[a]);
    }
    return delta_eo(p, n);
}

struct BoundCheckResult {
    double delta = 0.0;
    std::size_t n_groups = 0;
    bool within_unconditional = false;  // delta <= 2 * n_groups
    bool within_envelope = false;       // delta <= n_groups
    bool trivial_regime = false;        // some group error rate exceeds 1/2
    bool pass = false;
};

inline BoundCheckResult delta_eo_bound_check(const std::vector<double>& fp_rates,
                                             const std::vector<double>& fn_rates,
                                             bool classifier_is_trivial) {
    BoundCheckResult r;
    r.delta = delta_eo(fp_rates, fn_rates);
    r.n_groups = fp_rates.size();
    const double ng = static_cast<double>(r.n_groups);
    r.within_unconditional = r.delta <= 2.0 * ng;
    r.within_envelope = r.delta <= ng;
    for (double v : fp_rates)
        if (v > 0.5) r.trivial_regime = true;
    for (double v : fn_rates)
        if (v > 0.5) r.trivial_regime = true;
    r.pass = r.within_unconditional && (classifier_is_trivial || r.within_envelope);
    return r;
}

inline BoundCheckResult delta_eo_bound_check(const GroupedOutcomes& outcomes,
                                             bool classifier_is_trivial) {
    std::vector<double> p, n;
    for (std::size_t a = 0; a < outcomes.n_groups; ++a) {
        if (!outcomes.fp_rate[a] || !outcomes.fn_rate[a])
            throw DegenerateGroupError("age group " + std::to_string(a) + " has an undefined rate");
        p.push_back(*outcomes.fp_rate[a]);
        n.push_back(*outcomes.fn_rate[a]);
    }
    return delta_eo_bound_check(p, n, classifier_is_trivial);
}

inline double accuracy(const std::vector<PredictionRecord>& preds) {
    if (preds.empty()) throw InputError("accuracy: no predictions");
    long correct = 0;
    for (const PredictionRecord& r : preds)
        if (r.true_label == r.pred_label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(preds.size());
}

inline const char* kPredictionsCsvHeader = "id,true_label,pred_label,age";

inline void save_predictions_csv(const std::string& path,
                                 const std::vector<PredictionRecord>& preds) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open " + path + " for writing");
    out << kPredictionsCsvHeader << "\n";
    for (const PredictionRecord& r : preds) {
        if (r.id.find(',') != std::string::npos || r.id.find('\n') != std::string::npos)
            throw InputError("prediction id may not contain commas or newlines: " + r.id);
        require_binary_label(r.true_label, "true_label");
        require_binary_label(r.pred_label, "pred_label");
        out << r.id << ',' << r.true_label << ',' << r.pred_label << ',' << format_real(r.age)
            << "\n";
    }
    if (!out) throw InputError("failed writing " + path);
}

inline std::vector<PredictionRecord> load_predictions_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kPredictionsCsvHeader)
        throw FormatError(path + ": expected header '" + kPredictionsCsvHeader + "', got '" +
                          line + "'");
    std::vector<PredictionRecord> preds;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 4)
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected 4 fields, got " +
                              std::to_string(f.size()));
        PredictionRecord r;
        r.id = f[0];
        r.true_label = parse_int(f[1], path + ":" + std::to_string(lineno) + " true_label");
        r.pred_label = parse_int(f[2], path + ":" + std::to_string(lineno) + " pred_label");
        r.age = parse_real(f[3], path + ":" + std::to_string(lineno) + " age");
        require_binary_label(r.true_label, "true_label");
        require_binary_label(r.pred_label, "pred_label");
        preds.push_back(std::move(r));
    }
    return preds;
}

}  // namespace agefair
