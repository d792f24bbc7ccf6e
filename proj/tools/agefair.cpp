#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "agefair/agefair.hpp"

namespace {

// format_real prints integral doubles as "0"; keep an explicit decimal point
// so metric output always reads as a real number.
std::string real_text(double v) {
    std::string s = agefair::format_real(v);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

struct RunArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    std::size_t folds = 0;
    std::vector<std::size_t> groups;
    std::vector<std::string> models;
    std::string out_dir;
};

struct MetricArgs {
    std::string csv_path;
    std::size_t groups = 2;
};

struct ProbeArgs {
    std::string csv_path;
    std::string config_path;
    std::uint64_t seed = 0;
    std::size_t folds = 0;
};

struct SynthArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir = "synth_out";
};

int cmd_run(const RunArgs& a, const CLI::App& sub) {
    agefair::ExperimentConfig cfg = agefair::load_experiment_config(a.config_path);
    if (sub.count("--seed")) cfg.seed = a.seed;
    if (sub.count("--folds")) cfg.folds = a.folds;
    if (sub.count("--groups")) cfg.n_groups = a.groups;
    if (sub.count("--out")) cfg.out_dir = a.out_dir;
    if (sub.count("--model")) {
        cfg.models.clear();
        for (const std::string& name : a.models)
            cfg.models.push_back(agefair::kind_from_name(name));
    }
    cfg.validate();

    const agefair::ExperimentReport report = agefair::run_experiment(cfg);
    if (!cfg.out_dir.empty()) {
        agefair::write_report(report, cfg.out_dir);
        std::cerr << "artifacts written to " << cfg.out_dir << "/\n";
    }
    std::cout << agefair::render_markdown(report);
    return 0;
}

int cmd_metric(const MetricArgs& a) {
    const std::vector<agefair::PredictionRecord> preds =
        agefair::load_predictions_csv(a.csv_path);
    std::vector<double> ages;
    std::vector<int> labels;
    for (const agefair::PredictionRecord& p : preds) {
        ages.push_back(p.age);
        labels.push_back(p.true_label);
    }
    const agefair::AgeGrouping grouping = agefair::make_age_groups(ages, labels, a.groups);
    const double delta = agefair::delta_eo(agefair::grouped_rates(preds, grouping));
    std::cout << real_text(delta) << "\n";
    return 0;
}

int cmd_probe_age(const ProbeArgs& a, const CLI::App& sub) {
    agefair::ProbeConfig cfg;
    if (!a.config_path.empty())
        cfg = agefair::load_experiment_config(a.config_path).probe;
    if (sub.count("--seed")) cfg.seed = a.seed;
    if (sub.count("--folds")) cfg.folds = a.folds;

    const agefair::LoadResult loaded = agefair::load_csv(a.csv_path);
    if (loaded.dropped_rows > 0)
        std::cerr << "dropped " << loaded.dropped_rows << " rows with missing age or label\n";

    const agefair::ProbeResult r = agefair::probe_age(loaded.matrix, cfg);
    std::cout << "probe_mae_years=" << real_text(r.mae) << "\n";
    std::cout << "mean_predictor_mae_years=" << real_text(r.mean_predictor_mae) << "\n";
    if (r.mean_predictor_mae > 0.0) {
        const double pct = 100.0 * (r.mean_predictor_mae - r.mae) / r.mean_predictor_mae;
        std::cout << "improvement_vs_mean_percent=" << real_text(pct) << "\n";
    }
    return 0;
}

int cmd_synth(const SynthArgs& a, const CLI::App& sub) {
    agefair::SynthConfig cfg;
    if (!a.config_path.empty())
        cfg = agefair::load_experiment_config(a.config_path).dataset.synth;
    if (sub.count("--seed")) cfg.seed = a.seed;
    cfg.validate();

    const agefair::SynthResult result = agefair::generate_synthetic(cfg);
    std::filesystem::create_directories(a.out_dir);
    const std::string features = a.out_dir + "/features.csv";
    const std::string truth = a.out_dir + "/truth.json";
    agefair::save_csv(features, result.matrix);
    agefair::save_synth_truth(truth, result.truth);
    std::cout << "wrote " << features << "\n";
    std::cout << "wrote " << truth << "\n";
    return 0;
}

int cmd_gradcheck() {
    const std::vector<agefair::VerifyCheck> checks = agefair::run_gradient_verification();
    bool all_pass = true;
    double worst = 0.0;
    for (const agefair::VerifyCheck& c : checks) {
        std::printf("%-45s %.3e  (tol %.0e)  %s\n", c.name.c_str(), c.max_rel_err, c.tolerance,
                    c.pass() ? "pass" : "FAIL");
        all_pass = all_pass && c.pass();
        worst = std::max(worst, c.max_rel_err);
    }
    std::printf("max relative error: %.3e\n", worst);
    std::printf("%s\n", all_pass ? "all gradient checks passed" : "GRADIENT CHECKS FAILED");
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adversarial age-fair dementia classification: experiments and diagnostics"};
    app.require_subcommand(1);
    int rc = 0;

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "run a full experiment from a config file");
    run->add_option("--config", run_args.config_path, "experiment config file (key=value lines)")
        ->required();
    run->add_option("--seed", run_args.seed, "override the experiment seed");
    run->add_option("--folds", run_args.folds, "override the fold count");
    run->add_option("--groups", run_args.groups, "override the age-group counts, e.g. 2,5")
        ->delimiter(',');
    run->add_option("--model", run_args.models, "restrict to these model kinds")->delimiter(',');
    run->add_option("--out", run_args.out_dir, "override the output directory");
    run->callback([&] { rc = cmd_run(run_args, *run); });

    MetricArgs metric_args;
    CLI::App* metric =
        app.add_subcommand("metric", "compute the equalized-odds gap from a predictions CSV");
    metric->add_option("csv", metric_args.csv_path, "predictions CSV (id,true,pred,age)")
        ->required();
    metric->add_option("--groups", metric_args.groups, "number of age groups (default 2)");
    metric->callback([&] { rc = cmd_metric(metric_args); });

    ProbeArgs probe_args;
    CLI::App* probe =
        app.add_subcommand("probe-age", "cross-validated age regression on a feature CSV");
    probe->add_option("csv", probe_args.csv_path, "feature CSV with an age column")->required();
    probe->add_option("--config", probe_args.config_path,
                      "experiment config supplying the probe.* keys");
    probe->add_option("--seed", probe_args.seed, "override the probe seed");
    probe->add_option("--folds", probe_args.folds, "override the probe fold count");
    probe->callback([&] { rc = cmd_probe_age(probe_args, *probe); });

    SynthArgs synth_args;
    CLI::App* synth =
        app.add_subcommand("synth", "generate a synthetic dataset with its ground truth");
    synth->add_option("--config", synth_args.config_path,
                      "experiment config supplying the synth.* keys");
    synth->add_option("--seed", synth_args.seed, "override the generator seed");
    synth->add_option("--out", synth_args.out_dir, "output directory (default synth_out)");
    synth->callback([&] { rc = cmd_synth(synth_args, *synth); });

    CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference check of every gradient");
    gc->callback([&] { rc = cmd_gradcheck(); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const agefair::Error& e) {
        std::cerr << "agefair: error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "agefair: error: " << e.what() << "\n";
        return 3;
    }
    return rc;
}
