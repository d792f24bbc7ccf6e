#pragma once

// Experiment orchestration: cross-validated runs of the requested model kinds
// over a CSV or synthetic dataset, scored by accuracy and the grouped
// equalized-odds deltas, reported as JSON plus a markdown table.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "agefair/data.hpp"
#include "agefair/fairness.hpp"
#include "agefair/models.hpp"

namespace agefair {

struct DatasetSpec {
    enum class Source { synthetic, csv };
    Source source = Source::synthetic;
    std::string csv_path;  // when source == csv
    SynthConfig synth;     // when source == synthetic
};

inline std::vector<ModelKind> all_model_kinds() {
    return {ModelKind::baseline_dnn, ModelKind::simple,         ModelKind::autoencoder,
            ModelKind::consensus_net, ModelKind::entropy,        ModelKind::entropy_binary,
            ModelKind::entropy_honly};
}

struct ExperimentConfig {
    DatasetSpec dataset;
    std::vector<ModelKind> models = all_model_kinds();
    std::size_t folds = 5;
    std::vector<std::size_t> n_groups = {2, 5};
    TrainConfig train;
    ProbeConfig probe;       // budget for the age-leakage diagnostics
    bool diagnostics = true;
    std::string out_dir = "out";  // empty string suppresses artifact writing
    std::uint64_t seed = 1;

    void validate() const {
        if (folds < 2) throw InputError("experiment config: folds must be at least 2");
        if (models.empty()) throw InputError("experiment config: no model kinds requested");
        if (n_groups.empty()) throw InputError("experiment config: no group counts requested");
        for (std::size_t n : n_groups)
            if (n < 1) throw InputError("experiment config: group counts must be at least 1");
        if (dataset.source == DatasetSpec::Source::csv && dataset.csv_path.empty())
            throw InputError("experiment config: csv dataset needs a path");
        if (dataset.source == DatasetSpec::Source::synthetic) dataset.synth.validate();
        train.validate();
    }
};

struct DeltaCell {
    std::size_t groups = 2;
    bool degenerate = false;          // grouping left some group without a rate
    double value = 0.0;               // meaningful only when !degenerate
    std::vector<double> boundaries;   // quantile cut points used on this fold
};

struct FoldDiagnostics {
    double z_probe_mae = 0.0;         // fresh probe on the model's representation
    double x_probe_mae = 0.0;         // same probe budget on raw features
    double mean_predictor_mae = 0.0;  // train-mean reference on this fold
};

struct FoldOutcome {
    std::size_t fold = 0;
    double accuracy = 0.0;
    std::vector<DeltaCell> deltas;                        // one per requested group count
    std::optional<FoldDiagnostics> diagnostics;
    std::vector<std::vector<std::size_t>> modality_split; // consensus kind only
};

struct ModelRun {
    ModelKind kind = ModelKind::baseline_dnn;
    std::vector<FoldOutcome> folds;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<std::size_t> fold_test_sizes;
    std::vector<ModelRun> models;
};

struct Aggregate {
    double mean = 0.0;
    double stdev = 0.0;  // population convention, matching the z-scorer
    std::size_t folds_used = 0;
    std::size_t folds_degenerate = 0;
};

inline Aggregate aggregate_values(const std::vector<double>& values,
                                  std::size_t degenerate = 0) {
    Aggregate a;
    a.folds_used = values.size();
    a.folds_degenerate = degenerate;
    if (values.empty()) return a;
    for (double v : values) a.mean += v;
    a.mean /= static_cast<double>(values.size());
    for (double v : values) a.stdev += (v - a.mean) * (v - a.mean);
    a.stdev = std::sqrt(a.stdev / static_cast<double>(values.size()));
    return a;
}

inline Aggregate accuracy_aggregate(const ModelRun& run) {
    std::vector<double> vals;
    for (const FoldOutcome& f : run.folds) vals.push_back(f.accuracy);
    return aggregate_values(vals);
}

// Aggregates over non-degenerate folds only, reporting how many were skipped.
inline Aggregate delta_aggregate(const ModelRun& run, std::size_t groups) {
    std::vector<double> vals;
    std::size_t degenerate = 0;
    for (const FoldOutcome& f : run.folds)
        for (const DeltaCell& c : f.deltas)
            if (c.groups == groups) {
                if (c.degenerate)
                    ++degenerate;
                else
                    vals.push_back(c.value);
            }
    return aggregate_values(vals, degenerate);
}

inline Aggregate diagnostics_aggregate(const ModelRun& run,
                                       double FoldDiagnostics::*field) {
    std::vector<double> vals;
    for (const FoldOutcome& f : run.folds)
        if (f.diagnostics) vals.push_back((*f.diagnostics).*field);
    return aggregate_values(vals);
}

// ---- the run itself ----

namespace detail {

struct FoldData {
    FeatureMatrix train, test;        // standardized features
    std::vector<double> train_ages, test_ages;
    std::vector<int> test_labels;
    std::vector<std::string> test_ids;
};

inline std::string fold_artifact_name(ModelKind kind, std::size_t fold, const char* ext) {
    return std::string(kind_name(kind)) + "_fold" + std::to_string(fold) + ext;
}

}  // namespace detail

inline FeatureMatrix load_experiment_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset.source == DatasetSpec::Source::csv)
        return load_csv(cfg.dataset.csv_path).matrix;
    return generate_synthetic(cfg.dataset.synth).matrix;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const FeatureMatrix data = load_experiment_dataset(cfg);
    const FoldPlan plan = speaker_kfold(data, cfg.folds, derive_seed(cfg.seed, "folds"));

    const bool writing = !cfg.out_dir.empty();
    if (writing) {
        std::filesystem::create_directories(cfg.out_dir);
        std::filesystem::create_directories(cfg.out_dir + "/predictions");
        std::filesystem::create_directories(cfg.out_dir + "/history");
    }

    ExperimentReport report;
    report.config = cfg;

    std::vector<detail::FoldData> folds;
    std::vector<detail::FoldProbeOutcome> x_probes;
    for (std::size_t fold = 0; fold < cfg.folds; ++fold) {
        const FeatureMatrix train_raw = data.select(plan.train_indices(fold));
        const FeatureMatrix test_raw = data.select(plan.test_indices(fold));
        const NormStats stats = zscore_fit(train_raw);
        detail::FoldData fd;
        fd.train = zscore_apply(stats, train_raw);
        fd.test = zscore_apply(stats, test_raw);
        fd.train_ages = train_raw.ages;
        fd.test_ages = test_raw.ages;
        fd.test_labels = test_raw.labels;
        fd.test_ids = test_raw.ids;
        report.fold_test_sizes.push_back(test_raw.n_samples());
        if (cfg.diagnostics)
            x_probes.push_back(detail::probe_fold(train_raw.features, fd.train_ages,
                                                  test_raw.features, fd.test_ages, cfg.probe,
                                                  derive_seed(cfg.seed, "probe-x", fold)));
        folds.push_back(std::move(fd));
    }

    for (ModelKind kind : cfg.models) {
        ModelRun run;
        run.kind = kind;
        for (std::size_t fold = 0; fold < cfg.folds; ++fold) {
            detail::FoldData& fd = folds[fold];
            TrainConfig tc = cfg.train;
            tc.seed = derive_seed(cfg.seed, std::string("train-") + kind_name(kind), fold);

            ModelBundle bundle = build(kind, data.n_features(), tc);
            const LossHistory history = train_model(bundle, fd.train, tc);
            const Predictions pred = predict(bundle, fd.test.features);

            std::vector<PredictionRecord> records;
            for (std::size_t i = 0; i < fd.test_ids.size(); ++i)
                records.push_back({fd.test_ids[i], fd.test_labels[i], pred.labels[i],
                                   fd.test_ages[i]});

            FoldOutcome outcome;
            outcome.fold = fold;
            outcome.accuracy = accuracy(records);
            for (std::size_t n : cfg.n_groups) {
                DeltaCell cell;
                cell.groups = n;
                const AgeGrouping grouping = make_age_groups(fd.test_ages, fd.test_labels, n);
                cell.boundaries = grouping.boundaries;
                if (grouping.valid) {
                    try {
                        cell.value = delta_eo(grouped_rates(records, grouping));
                    } catch (const DegenerateGroupError&) {
                        cell.degenerate = true;
                    }
                } else {
                    cell.degenerate = true;
                }
                outcome.deltas.push_back(std::move(cell));
            }
            if (cfg.diagnostics) {
                const Tensor2 z_train = encode(bundle, fd.train.features);
                const Tensor2 z_test = encode(bundle, fd.test.features);
                const detail::FoldProbeOutcome z_probe = detail::probe_fold(
                    z_train, fd.train_ages, z_test, fd.test_ages, cfg.probe,
                    derive_seed(cfg.seed, std::string("probe-z-") + kind_name(kind), fold));
                outcome.diagnostics = FoldDiagnostics{z_probe.mae(), x_probes[fold].mae(),
                                                      x_probes[fold].ref_mae()};
            }
            if (kind == ModelKind::consensus_net) outcome.modality_split = bundle.split.columns;

            if (writing) {
                save_predictions_csv(cfg.out_dir + "/predictions/" +
                                         detail::fold_artifact_name(kind, fold, ".csv"),
                                     records);
                save_loss_history(cfg.out_dir + "/history/" +
                                      detail::fold_artifact_name(kind, fold, ".csv"),
                                  history);
            }
            run.folds.push_back(std::move(outcome));
        }
        report.models.push_back(std::move(run));
    }
    return report;
}

// ---- JSON serialization (stable field order for byte-identical reruns) ----

namespace detail {

inline nlohmann::ordered_json synth_to_json(const SynthConfig& s) {
    return nlohmann::ordered_json{{"n", s.n},
                                  {"d", s.d},
                                  {"confound", s.confound},
                                  {"age_mean", s.age_mean},
                                  {"age_sd", s.age_sd},
                                  {"disease_scale", s.disease_scale},
                                  {"age_scale", s.age_scale},
                                  {"label_slope", s.label_slope},
                                  {"noise_sd", s.noise_sd},
                                  {"seed", s.seed}};
}

inline SynthConfig synth_from_json(const nlohmann::ordered_json& j) {
    SynthConfig s;
    s.n = j.at("n").get<std::size_t>();
    s.d = j.at("d").get<std::size_t>();
    s.confound = j.at("confound").get<double>();
    s.age_mean = j.at("age_mean").get<double>();
    s.age_sd = j.at("age_sd").get<double>();
    s.disease_scale = j.at("disease_scale").get<double>();
    s.age_scale = j.at("age_scale").get<double>();
    s.label_slope = j.at("label_slope").get<double>();
    s.noise_sd = j.at("noise_sd").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

inline nlohmann::ordered_json train_to_json(const TrainConfig& t) {
    return nlohmann::ordered_json{{"epochs", t.epochs},
                                  {"adversary_steps", t.adversary_steps},
                                  {"discriminator_steps", t.discriminator_steps},
                                  {"batch_size", t.batch_size},
                                  {"lambda_h", t.lambda_h},
                                  {"adversary_weight", t.adversary_weight},
                                  {"reconstruction_weight", t.reconstruction_weight},
                                  {"discriminator_weight", t.discriminator_weight},
                                  {"learning_rate", t.learning_rate},
                                  {"weight_decay", t.weight_decay},
                                  {"modalities", t.modalities},
                                  {"age_mean", t.age_mean},
                                  {"age_sd", t.age_sd},
                                  {"z_dim", t.z_dim},
                                  {"interpreter_hidden", t.interpreter_hidden},
                                  {"classifier_hidden", t.classifier_hidden},
                                  {"adversary_hidden", t.adversary_hidden},
                                  {"reconstructor_hidden", t.reconstructor_hidden}};
}

inline TrainConfig train_from_json(const nlohmann::ordered_json& j) {
    TrainConfig t;
    t.epochs = j.at("epochs").get<std::size_t>();
    t.adversary_steps = j.at("adversary_steps").get<std::size_t>();
    t.discriminator_steps = j.at("discriminator_steps").get<std::size_t>();
    t.batch_size = j.at("batch_size").get<std::size_t>();
    t.lambda_h = j.at("lambda_h").get<double>();
    t.adversary_weight = j.at("adversary_weight").get<double>();
    t.reconstruction_weight = j.at("reconstruction_weight").get<double>();
    t.discriminator_weight = j.at("discriminator_weight").get<double>();
    t.learning_rate = j.at("learning_rate").get<double>();
    t.weight_decay = j.at("weight_decay").get<double>();
    t.modalities = j.at("modalities").get<std::size_t>();
    t.age_mean = j.at("age_mean").get<double>();
    t.age_sd = j.at("age_sd").get<double>();
    t.z_dim = j.at("z_dim").get<std::size_t>();
    t.interpreter_hidden = j.at("interpreter_hidden").get<std::size_t>();
    t.classifier_hidden = j.at("classifier_hidden").get<std::size_t>();
    t.adversary_hidden = j.at("adversary_hidden").get<std::size_t>();
    t.reconstructor_hidden = j.at("reconstructor_hidden").get<std::size_t>();
    return t;
}

inline nlohmann::ordered_json probe_to_json(const ProbeConfig& p) {
    return nlohmann::ordered_json{{"hidden", p.hidden},
                                  {"epochs", p.epochs},
                                  {"batch_size", p.batch_size},
                                  {"learning_rate", p.learning_rate},
                                  {"weight_decay", p.weight_decay},
                                  {"folds", p.folds}};
}

inline ProbeConfig probe_from_json(const nlohmann::ordered_json& j) {
    ProbeConfig p;
    p.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    p.epochs = j.at("epochs").get<std::size_t>();
    p.batch_size = j.at("batch_size").get<std::size_t>();
    p.learning_rate = j.at("learning_rate").get<double>();
    p.weight_decay = j.at("weight_decay").get<double>();
    p.folds = j.at("folds").get<std::size_t>();
    return p;
}

inline nlohmann::ordered_json aggregate_to_json(const Aggregate& a, bool with_degenerate) {
    nlohmann::ordered_json j{{"mean", a.mean}, {"std", a.stdev}, {"folds_used", a.folds_used}};
    if (with_degenerate) j["degenerate_folds"] = a.folds_degenerate;
    return j;
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const ExperimentReport& report) {
    const ExperimentConfig& cfg = report.config;
    nlohmann::ordered_json j;
    nlohmann::ordered_json jc;
    // out_dir is deliberately not echoed: where a report lands is not part of
    // the experiment, and reruns into different directories must stay
    // byte-identical.
    jc["seed"] = cfg.seed;
    jc["folds"] = cfg.folds;
    jc["groups"] = cfg.n_groups;
    jc["diagnostics"] = cfg.diagnostics;
    if (cfg.dataset.source == DatasetSpec::Source::csv) {
        jc["dataset"] = nlohmann::ordered_json{{"source", "csv"}, {"path", cfg.dataset.csv_path}};
    } else {
        jc["dataset"] = nlohmann::ordered_json{{"source", "synthetic"},
                                               {"synth", detail::synth_to_json(cfg.dataset.synth)}};
    }
    std::vector<std::string> kind_names;
    for (ModelKind k : cfg.models) kind_names.push_back(kind_name(k));
    jc["models"] = kind_names;
    jc["train"] = detail::train_to_json(cfg.train);
    jc["probe"] = detail::probe_to_json(cfg.probe);
    j["config"] = std::move(jc);
    j["note"] =
        "aggregates are fold-wise mean and population std over non-degenerate folds; "
        "reference tables may use restart-wise variance, so per-fold values are included";
    j["fold_test_sizes"] = report.fold_test_sizes;

    nlohmann::ordered_json jmodels = nlohmann::ordered_json::array();
    for (const ModelRun& run : report.models) {
        nlohmann::ordered_json jm;
        jm["kind"] = kind_name(run.kind);
        nlohmann::ordered_json jfolds = nlohmann::ordered_json::array();
        for (const FoldOutcome& f : run.folds) {
            nlohmann::ordered_json jf;
            jf["fold"] = f.fold;
            jf["accuracy"] = f.accuracy;
            nlohmann::ordered_json jds = nlohmann::ordered_json::array();
            for (const DeltaCell& c : f.deltas) {
                nlohmann::ordered_json jd;
                jd["groups"] = c.groups;
                jd["degenerate"] = c.degenerate;
                if (!c.degenerate) jd["value"] = c.value;
                jd["boundaries"] = c.boundaries;
                jds.push_back(std::move(jd));
            }
            jf["delta_eo"] = std::move(jds);
            if (f.diagnostics) {
                jf["diagnostics"] =
                    nlohmann::ordered_json{{"z_probe_mae", f.diagnostics->z_probe_mae},
                                           {"x_probe_mae", f.diagnostics->x_probe_mae},
                                           {"mean_predictor_mae", f.diagnostics->mean_predictor_mae}};
            }
            if (!f.modality_split.empty()) jf["modality_split"] = f.modality_split;
            jfolds.push_back(std::move(jf));
        }
        jm["folds"] = std::move(jfolds);

        nlohmann::ordered_json jagg;
        jagg["accuracy"] = detail::aggregate_to_json(accuracy_aggregate(run), false);
        nlohmann::ordered_json jdagg = nlohmann::ordered_json::array();
        for (std::size_t n : cfg.n_groups) {
            nlohmann::ordered_json jd = detail::aggregate_to_json(delta_aggregate(run, n), true);
            jd["groups"] = n;
            jdagg.push_back(std::move(jd));
        }
        jagg["delta_eo"] = std::move(jdagg);
        if (cfg.diagnostics) {
            jagg["z_probe_mae"] = detail::aggregate_to_json(
                diagnostics_aggregate(run, &FoldDiagnostics::z_probe_mae), false);
            jagg["x_probe_mae"] = detail::aggregate_to_json(
                diagnostics_aggregate(run, &FoldDiagnostics::x_probe_mae), false);
        }
        jm["aggregates"] = std::move(jagg);
        jmodels.push_back(std::move(jm));
    }
    j["models"] = std::move(jmodels);
    return j;
}

inline ExperimentReport report_from_json(const nlohmann::ordered_json& j) {
    ExperimentReport report;
    const nlohmann::ordered_json& jc = j.at("config");
    report.config.seed = jc.at("seed").get<std::uint64_t>();
    report.config.folds = jc.at("folds").get<std::size_t>();
    report.config.n_groups = jc.at("groups").get<std::vector<std::size_t>>();
    report.config.diagnostics = jc.at("diagnostics").get<bool>();
    report.config.out_dir.clear();  // not echoed in reports
    const nlohmann::ordered_json& jd = jc.at("dataset");
    if (jd.at("source").get<std::string>() == "csv") {
        report.config.dataset.source = DatasetSpec::Source::csv;
        report.config.dataset.csv_path = jd.at("path").get<std::string>();
    } else {
        report.config.dataset.source = DatasetSpec::Source::synthetic;
        report.config.dataset.synth = detail::synth_from_json(jd.at("synth"));
    }
    report.config.models.clear();
    for (const auto& name : jc.at("models")) report.config.models.push_back(kind_from_name(name));
    report.config.train = detail::train_from_json(jc.at("train"));
    report.config.probe = detail::probe_from_json(jc.at("probe"));
    report.fold_test_sizes = j.at("fold_test_sizes").get<std::vector<std::size_t>>();

    for (const auto& jm : j.at("models")) {
        ModelRun run;
        run.kind = kind_from_name(jm.at("kind").get<std::string>());
        for (const auto& jf : jm.at("folds")) {
            FoldOutcome f;
            f.fold = jf.at("fold").get<std::size_t>();
            f.accuracy = jf.at("accuracy").get<double>();
            for (const auto& jcell : jf.at("delta_eo")) {
                DeltaCell c;
                c.groups = jcell.at("groups").get<std::size_t>();
                c.degenerate = jcell.at("degenerate").get<bool>();
                if (!c.degenerate) c.value = jcell.at("value").get<double>();
                c.boundaries = jcell.at("boundaries").get<std::vector<double>>();
                f.deltas.push_back(std::move(c));
            }
            if (jf.contains("diagnostics")) {
                const auto& jdg = jf.at("diagnostics");
                f.diagnostics = FoldDiagnostics{jdg.at("z_probe_mae").get<double>(),
                                                jdg.at("x_probe_mae").get<double>(),
                                                jdg.at("mean_predictor_mae").get<double>()};
            }
            if (jf.contains("modality_split"))
                f.modality_split =
                    jf.at("modality_split").get<std::vector<std::vector<std::size_t>>>();
            run.folds.push_back(std::move(f));
        }
        report.models.push_back(std::move(run));
    }
    return report;
}

// ---- markdown rendering (Tables 1/2 shape) ----

namespace detail {

inline std::string fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

inline std::string mean_std_cell(const Aggregate& a, std::size_t total_folds) {
    if (a.folds_used == 0) return "degenerate";
    std::string s = fixed3(a.mean) + " ± " + fixed3(a.stdev);
    if (a.folds_used < total_folds)
        s += " (" + std::to_string(a.folds_used) + "/" + std::to_string(total_folds) + " folds)";
    return s;
}

}  // namespace detail

inline std::string render_markdown(const ExperimentReport& report) {
    const ExperimentConfig& cfg = report.config;
    std::string md = "# Experiment report\n\n";
    if (cfg.dataset.source == DatasetSpec::Source::csv) {
        md += "dataset: csv `" + cfg.dataset.csv_path + "`";
    } else {
        const SynthConfig& s = cfg.dataset.synth;
        md += "dataset: synthetic (n=" + std::to_string(s.n) + ", d=" + std::to_string(s.d) +
              ", seed=" + std::to_string(s.seed) + ")";
    }
    md += " | folds: " + std::to_string(cfg.folds) + " | seed: " + std::to_string(cfg.seed) +
          "\n\n";

    md += "| model | accuracy |";
    for (std::size_t n : cfg.n_groups) md += " delta_eo(" + std::to_string(n) + ") |";
    md += "\n| --- | --- |";
    for (std::size_t i = 0; i < cfg.n_groups.size(); ++i) md += " --- |";
    md += "\n";
    for (const ModelRun& run : report.models) {
        md += std::string("| ") + kind_name(run.kind) + " | " +
              detail::mean_std_cell(accuracy_aggregate(run), cfg.folds) + " |";
        for (std::size_t n : cfg.n_groups)
            md += " " + detail::mean_std_cell(delta_aggregate(run, n), cfg.folds) + " |";
        md += "\n";
    }

    if (cfg.diagnostics) {
        md += "\n## Age leakage (probe MAE, years)\n\n";
        md += "| model | probe on z | probe on x | mean predictor |\n| --- | --- | --- | --- |\n";
        for (const ModelRun& run : report.models) {
            const Aggregate z = diagnostics_aggregate(run, &FoldDiagnostics::z_probe_mae);
            const Aggregate x = diagnostics_aggregate(run, &FoldDiagnostics::x_probe_mae);
            const Aggregate ref =
                diagnostics_aggregate(run, &FoldDiagnostics::mean_predictor_mae);
            md += std::string("| ") + kind_name(run.kind) + " | " +
                  detail::mean_std_cell(z, cfg.folds) + " | " +
                  detail::mean_std_cell(x, cfg.folds) + " | " +
                  detail::mean_std_cell(ref, cfg.folds) + " |\n";
        }
    }
    md += "\nNote: aggregates are fold-wise mean ± population std over non-degenerate folds.\n";
    return md;
}

inline void write_report(const ExperimentReport& report, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir + "/report.json", std::ios::binary);
        if (!out) throw InputError("cannot open " + out_dir + "/report.json for writing");
        out << report_to_json(report).dump(2) << "\n";
        if (!out) throw InputError("failed writing " + out_dir + "/report.json");
    }
    {
        std::ofstream out(out_dir + "/report.md", std::ios::binary);
        if (!out) throw InputError("cannot open " + out_dir + "/report.md for writing");
        out << render_markdown(report);
        if (!out) throw InputError("failed writing " + out_dir + "/report.md");
    }
}

// ---- flat key=value experiment config files ----

namespace detail {

inline bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw FormatError("config: key '" + key + "' expects true/false, got '" + value + "'");
}

inline std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : value) {
        if (c == ',') {
            parts.push_back(strip_spaces(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(strip_spaces(cur));
    return parts;
}

}  // namespace detail

// Lines of `key = value`; blank lines and #-comments ignored; unknown or
// repeated keys are errors so typos fail loudly.
inline ExperimentConfig parse_experiment_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = "config line " + std::to_string(lineno);
        std::string s = strip_spaces(line);
        if (!s.empty() && s.back() == '\r') s.pop_back();
        const std::size_t hash = s.find('#');  // full-line and trailing comments
        if (hash != std::string::npos) s = strip_spaces(s.substr(0, hash));
        if (s.empty()) continue;
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw FormatError(where + ": expected 'key = value', got '" + s + "'");
        const std::string key = strip_spaces(s.substr(0, eq));
        const std::string value = strip_spaces(s.substr(eq + 1));
        if (key.empty()) throw FormatError(where + ": empty key");
        if (!seen.insert(key).second) throw FormatError(where + ": key '" + key + "' repeated");

        if (key == "dataset") {
            if (value == "synthetic")
                cfg.dataset.source = DatasetSpec::Source::synthetic;
            else if (value == "csv")
                cfg.dataset.source = DatasetSpec::Source::csv;
            else
                throw FormatError(where + ": dataset must be synthetic or csv");
        } else if (key == "csv") {
            cfg.dataset.csv_path = value;
        } else if (key == "models") {
            cfg.models.clear();
            for (const std::string& name : detail::split_list(value))
                cfg.models.push_back(kind_from_name(name));
        } else if (key == "folds") {
            cfg.folds = static_cast<std::size_t>(parse_long(value, where));
        } else if (key == "groups") {
            cfg.n_groups.clear();
            for (const std::string& g : detail::split_list(value))
                cfg.n_groups.push_back(static_cast<std::size_t>(parse_long(g, where)));
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_long(value, where));
        } else if (key == "out") {
            cfg.out_dir = value;
        } else if (key == "diagnostics") {
            cfg.diagnostics = detail::parse_bool(value, key);
        } else if (key == "synth.n") {
            cfg.dataset.synth.n = static_cast<std::size_t>(parse_long(value, where));
        } else if (key == "synth.d") {
            cfg.dataset.synth.d = static_cast<std::size_t>(parse_long(value, where));
        } else if (key == "synth.confound") {
            cfg.dataset.synth.confound = parse_real(value, where);
        } else if (key == "synth.age_mean") {
            cfg.dataset.synth.age_mean = parse_real(value, where);
        } else if (key == "synth.age_sd") {
            cfg.dataset.synth.age_sd = parse_real(value, where);
        } else if (key == "synth.disease_scale") {
            cfg.dataset.synth.disease_scale = parse_real(value, where);
        } else if (key == "synth.age_scale") {
            cfg.dataset.synth.age_scale = parse_real(value, where);
        } else if (key == "synth.label_slope") {
            cfg.dataset.synth.label_slope = parse_real(value, where);
        } else if (key == "synth.noise_sd") {
            cfg.dataset.synth.noise_sd = parse_real(value, where);
        } else if (key == "synth.seed") {
            cfg.dataset.synth.seed = static_cast<std::uint64_t>(parse_long(value, where));
        } else if (key == "train.epochs") {
            cfg.train.epochs = static_cast<std::size_t>(parse_long(value, where));
        } else if (key == "train.adversary_steps") {
            cfg.train.adversary_steps = static_cast<std::size_t>(parse_long(value, where));
        } else if (key == "train.discriminator_steps") {
            cfg.train.discriminator_steps = static_cast<std::size_t>(parse_long(value, where));
        } else if (key == "train.batch_size") {
            cfg.train.batch_size = static_cast<std::size_t>(parse_long(value, where));
        } else if (key == "train.lambda_h") {
            cfg.train.lambda_h = parse_real(value, where);
        } else if (key == "train.adversary_weight") {
            cfg.train.adversary_weight = parse_real(value, where);
        } else if (key == "train.reconstruction_weight") {
            cfg.train.reconstruction_weight = parse_real(value, where);
        } else if (key == "train.discriminator_weight") {
            cfg.train.discriminator_weight = parse_real(value, where);
        } else if (key == "train.learning_rate") {
            cfg.train.learning_rate = parse_real(value, where);
        } else if (key == "train.weight_decay") {
            cfg.train.weight_decay = parse_real(value, where);
        } else if (key == "train.modalities") {
            cfg.train.modalities = static_cast<std::size_t>(parse_long(value, where));
        } else if (key == "train.age_mean") {
            cfg.train.age_mean = parse_real(value, where);
        } else if (key == "train.age_sd") {
            cfg.train.age_sd = parse_real(value, where);
        } else if (key == "train.z_dim") {
            cfg.train.z_dim = static_cast<std::size_t>(parse_long(value, where));
        } else if (key == "train.interpreter_hidden") {
            cfg.train.interpreter_hidden = static_cast<std::size_t>(parse_long(value, where));
        } else if (key == "train.classifier_hidden") {
            cfg.train.classifier_hidden = static_cast<std::size_t>(parse_long(value, where));
        } else if (key == "train.adversary_hidden") {
            cfg.train.adversary_hidden = static_cast<std::size_t>(parse_long(value, where));
        } else if (key == "train.reconstructor_hidden") {
            cfg.train.reconstructor_hidden = static_cast<std::size_t>(parse_long(value, where));
        } else if (key == "probe.hidden") {
            cfg.probe.hidden.clear();
            for (const std::string& h : detail::split_list(value))
                cfg.probe.hidden.push_back(static_cast<std::size_t>(parse_long(h, where)));
        } else if (key == "probe.epochs") {
            cfg.probe.epochs = static_cast<std::size_t>(parse_long(value, where));
        } else if (key == "probe.batch_size") {
            cfg.probe.batch_size = static_cast<std::size_t>(parse_long(value, where));
        } else if (key == "probe.learning_rate") {
            cfg.probe.learning_rate = parse_real(value, where);
        } else if (key == "probe.weight_decay") {
            cfg.probe.weight_decay = parse_real(value, where);
        } else if (key == "probe.folds") {
            cfg.probe.folds = static_cast<std::size_t>(parse_long(value, where));
        } else {
            throw FormatError(where + ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config_text(buf.str());
}

}  // namespace agefair
