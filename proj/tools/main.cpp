// rulkit: batch CLI for the RUL prediction toolkit.
// Subcommands: generate, build-dataset, train, evaluate, compare.
// Exit codes: 0 success, 2 usage/config, 3 IO, 4 numerical failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rulkit/dataset.hpp"
#include "rulkit/errors.hpp"
#include "rulkit/llsf.hpp"
#include "rulkit/manifest.hpp"
#include "rulkit/metrics.hpp"
#include "rulkit/model.hpp"
#include "rulkit/synth.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

struct CommonOpts {
    std::string out_dir;
    bool force = false;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool out_required = true) {
    auto* out = cmd->add_option("-o,--out", opts.out_dir, "Output directory");
    if (out_required) {
        out->required();
    }
    cmd->add_flag("--force", opts.force, "Overwrite existing outputs");
    cmd->add_flag("-q,--quiet", opts.quiet, "Suppress progress output");
}

void ensure_out_dir(const CommonOpts& opts) {
    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec) {
        throw rulkit::IoError("cannot create output directory " + opts.out_dir + ": " +
                              ec.message());
    }
}

void refuse_overwrite(const CommonOpts& opts, const std::vector<std::string>& filenames) {
    if (opts.force) {
        return;
    }
    for (const std::string& name : filenames) {
        const fs::path path = fs::path(opts.out_dir) / name;
        if (fs::exists(path)) {
            throw rulkit::UsageError("refusing to overwrite " + path.string() +
                                     " (pass --force to allow)");
        }
    }
}

void require_input_file(const fs::path& path) {
    if (!fs::exists(path)) {
        throw rulkit::UsageError("missing input file " + path.string());
    }
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw rulkit::IoError("cannot write " + path.string());
    }
    return out;
}

void add_digests(std::map<std::string, std::string>& digests, const std::string& dir,
                 const std::vector<std::string>& filenames) {
    for (const std::string& name : filenames) {
        const fs::path path = fs::path(dir) / name;
        digests[name] = rulkit::digest_hex(rulkit::fnv1a64_file(path.string()));
    }
}

// ---- generate ----

struct GenerateArgs {
    CommonOpts common;
    rulkit::GeneratorConfig config;
};

int cmd_generate(const GenerateArgs& args) {
    const auto t0 = Clock::now();
    ensure_out_dir(args.common);
    refuse_overwrite(args.common, {"fleet.csv", "conditions.csv"});

    const auto fleet = rulkit::generate_fleet(args.config);
    std::size_t failed = 0;
    std::size_t censored = 0;
    for (const auto& record : fleet) {
        (record.censored ? censored : failed) += 1;
    }

    rulkit::write_fleet_csv(fleet, (fs::path(args.common.out_dir) / "fleet.csv").string());
    rulkit::write_conditions_csv(fleet,
                                 (fs::path(args.common.out_dir) / "conditions.csv").string());

    rulkit::RunManifest manifest;
    manifest.subcommand = "generate";
    manifest.master_seed = args.config.master_seed;
    manifest.config = {{"devices", args.config.device_count},
                       {"sampling_interval_h", args.config.sampling_interval_h},
                       {"max_test_hours", args.config.max_test_hours},
                       {"temperature_levels_c", args.config.temperature_levels_c},
                       {"prefactor", args.config.law.prefactor},
                       {"activation_energy_ev", args.config.law.activation_energy_ev},
                       {"current_density_exponent", args.config.law.current_density_exponent},
                       {"time_exponent", args.config.law.time_exponent},
                       {"noise_std_relative", args.config.noise_std_relative},
                       {"infant_mortality_fraction", args.config.infant_mortality_fraction},
                       {"seed", args.config.master_seed}};
    add_digests(manifest.output_digests, args.common.out_dir, {"fleet.csv", "conditions.csv"});
    manifest.duration_s = std::chrono::duration<double>(Clock::now() - t0).count();
    rulkit::write_manifest(manifest, args.common.out_dir);

    if (!args.common.quiet) {
        std::printf("generated %zu devices (%zu failed, %zu censored) -> %s\n", fleet.size(),
                    failed, censored, args.common.out_dir.c_str());
    }
    return kExitOk;
}

// ---- build-dataset ----

struct BuildDatasetArgs {
    CommonOpts common;
    std::string fleet_dir;
    std::uint64_t seed = 42;
    double train_fraction = 0.8;
};

int cmd_build_dataset(const BuildDatasetArgs& args) {
    const auto t0 = Clock::now();
    require_input_file(fs::path(args.fleet_dir) / "fleet.csv");
    require_input_file(fs::path(args.fleet_dir) / "conditions.csv");
    ensure_out_dir(args.common);
    refuse_overwrite(args.common, {"dataset.jsonl", "stats.json", "split.json"});

    const auto fleet = rulkit::read_fleet_dir(args.fleet_dir);
    const auto usable = rulkit::filter_devices(fleet);
    std::vector<rulkit::Sample> samples;
    for (const auto& record : usable) {
        const auto ws = rulkit::window_series(record);
        samples.insert(samples.end(), ws.begin(), ws.end());
    }

    rulkit::SplitDataset dataset;
    if (samples.empty()) {
        // degenerate but not an error: emit an empty dataset
        std::fprintf(stderr, "warning: no usable samples (all devices censored or infant)\n");
        dataset.split_seed = args.seed;
        auto out = open_output(fs::path(args.common.out_dir) / "dataset.jsonl");
        out.close();
        auto stats = open_output(fs::path(args.common.out_dir) / "stats.json");
        stats << nlohmann::ordered_json({{"power", {{"min", 0.0}, {"max", 0.0}}},
                                         {"conditions", nlohmann::json::array()},
                                         {"rul_cap_h", rulkit::kRulCapHours},
                                         {"fingerprint", 0}})
                     .dump(2)
              << "\n";
        stats.close();
        auto split = open_output(fs::path(args.common.out_dir) / "split.json");
        split << nlohmann::ordered_json({{"seed", args.seed},
                                         {"train_devices", nlohmann::json::array()},
                                         {"test_devices", nlohmann::json::array()}})
                     .dump(2)
              << "\n";
        split.close();
    } else {
        dataset = rulkit::split_dataset(samples, args.seed, args.train_fraction);
        rulkit::write_dataset_dir(dataset, args.common.out_dir);
    }

    rulkit::RunManifest manifest;
    manifest.subcommand = "build-dataset";
    manifest.master_seed = args.seed;
    manifest.config = {{"fleet", args.fleet_dir},
                       {"seed", args.seed},
                       {"train_fraction", args.train_fraction}};
    add_digests(manifest.input_digests, args.fleet_dir, {"fleet.csv", "conditions.csv"});
    add_digests(manifest.output_digests, args.common.out_dir,
                {"dataset.jsonl", "stats.json", "split.json"});
    manifest.duration_s = std::chrono::duration<double>(Clock::now() - t0).count();
    rulkit::write_manifest(manifest, args.common.out_dir);

    if (!args.common.quiet) {
        std::printf("%zu devices usable of %zu; %zu train / %zu test samples -> %s\n",
                    usable.size(), fleet.size(), dataset.train.size(), dataset.test.size(),
                    args.common.out_dir.c_str());
    }
    return kExitOk;
}

// ---- train ----

struct TrainArgs {
    CommonOpts common;
    std::string dataset_dir;
    std::string variant = "hybrid";
    rulkit::TrainConfig config;
    std::string optimizer = "adam";
    std::uint64_t seed = 0;
};

void write_loss_history(const rulkit::TrainResult& result, const fs::path& path) {
    auto out = open_output(path);
    out << "epoch,train_mse,val_mse\n";
    char buf[80];
    for (std::size_t e = 0; e < result.history.size(); ++e) {
        const auto& stats = result.history[e];
        if (std::isnan(stats.val_mse)) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,\n", e + 1, stats.train_mse);
        } else {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", e + 1, stats.train_mse,
                          stats.val_mse);
        }
        out << buf;
    }
}

int cmd_train(const TrainArgs& args) {
    const auto t0 = Clock::now();
    for (const char* name : {"dataset.jsonl", "stats.json", "split.json"}) {
        require_input_file(fs::path(args.dataset_dir) / name);
    }
    ensure_out_dir(args.common);
    refuse_overwrite(args.common, {"checkpoint.txt", "loss_history.csv"});

    const rulkit::SplitDataset dataset = rulkit::read_dataset_dir(args.dataset_dir);
    if (dataset.train.empty()) {
        throw rulkit::UsageError("dataset " + args.dataset_dir + " has no training samples");
    }

    rulkit::ModelSpec spec;
    spec.variant = rulkit::variant_from_name(args.variant);
    spec.seed = args.seed;
    rulkit::TrainConfig config = args.config;
    config.optimizer =
        args.optimizer == "sgd" ? rulkit::OptimizerKind::sgd : rulkit::OptimizerKind::adam;

    rulkit::Model model = rulkit::Model::build(spec);
    const rulkit::TrainResult result = rulkit::train_model(model, dataset, config);

    rulkit::CheckpointMeta meta;
    meta.epochs_trained = result.history.size();
    meta.best_epoch = result.best_epoch;
    if (!result.history.empty()) {
        meta.final_train_mse = result.history.back().train_mse;
        meta.final_val_mse = result.history.back().val_mse;
    }
    meta.aborted_nan = result.aborted_nan;
    save_checkpoint(model, meta, (fs::path(args.common.out_dir) / "checkpoint.txt").string());
    write_loss_history(result, fs::path(args.common.out_dir) / "loss_history.csv");

    rulkit::RunManifest manifest;
    manifest.subcommand = "train";
    manifest.master_seed = args.seed;
    manifest.config = {{"dataset", args.dataset_dir},
                       {"variant", args.variant},
                       {"epochs", config.epochs},
                       {"batch_size", config.batch_size},
                       {"learning_rate", config.learning_rate},
                       {"optimizer", args.optimizer},
                       {"patience", config.patience},
                       {"validation_fraction", config.validation_fraction},
                       {"seed", args.seed}};
    add_digests(manifest.input_digests, args.dataset_dir,
                {"dataset.jsonl", "stats.json", "split.json"});
    add_digests(manifest.output_digests, args.common.out_dir,
                {"checkpoint.txt", "loss_history.csv"});
    manifest.duration_s = std::chrono::duration<double>(Clock::now() - t0).count();
    rulkit::write_manifest(manifest, args.common.out_dir);

    if (result.aborted_nan) {
        std::fprintf(stderr,
                     "error: training diverged (non-finite loss); last good checkpoint kept\n");
        return kExitNumerical;
    }
    if (!args.common.quiet) {
        if (result.history.empty()) {
            std::printf("trained %s for 0 epochs (initialization checkpoint) -> %s\n",
                        args.variant.c_str(), args.common.out_dir.c_str());
        } else {
            std::printf(
                "trained %s for %zu epochs (best %zu, train mse %.3g, val mse %.3g) -> %s\n",
                args.variant.c_str(), result.history.size(), result.best_epoch,
                result.history.back().train_mse, result.history.back().val_mse,
                args.common.out_dir.c_str());
        }
    }
    return kExitOk;
}

// ---- evaluate ----

struct EvaluateArgs {
    CommonOpts common;
    std::string dataset_dir;
    std::string checkpoint_path;
    bool use_llsf = false;
    std::string fleet_dir;
    std::size_t bins = 20;
    std::string device_id;
    std::string method_name;
};

int cmd_evaluate(const EvaluateArgs& args) {
    const auto t0 = Clock::now();
    for (const char* name : {"dataset.jsonl", "stats.json", "split.json"}) {
        require_input_file(fs::path(args.dataset_dir) / name);
    }
    if (args.use_llsf == !args.checkpoint_path.empty()) {
        throw rulkit::UsageError("evaluate needs exactly one of --checkpoint or --llsf");
    }

    const rulkit::SplitDataset dataset = rulkit::read_dataset_dir(args.dataset_dir);
    if (dataset.test.empty()) {
        throw rulkit::UsageError("dataset " + args.dataset_dir + " has no test samples");
    }
    ensure_out_dir(args.common);
    refuse_overwrite(args.common, {"report.json", "pairs.csv", "errors_hist.csv"});

    rulkit::RunManifest manifest;
    manifest.subcommand = "evaluate";
    add_digests(manifest.input_digests, args.dataset_dir,
                {"dataset.jsonl", "stats.json", "split.json"});

    std::string method = args.method_name;
    rulkit::EvalReport report;

    if (args.use_llsf) {
        require_input_file(fs::path(args.fleet_dir) / "fleet.csv");
        require_input_file(fs::path(args.fleet_dir) / "conditions.csv");
        const auto fleet = rulkit::read_fleet_dir(args.fleet_dir);
        std::map<std::string, rulkit::DeviceRecord> by_id;
        for (const auto& record : fleet) {
            by_id[record.device_id] = record;
        }
        report = rulkit::llsf_evaluate(dataset.test, by_id, args.bins);
        if (method.empty()) {
            method = "llsf";
        }
        manifest.config["fleet"] = args.fleet_dir;
    } else {
        require_input_file(args.checkpoint_path);
        const rulkit::Model model = rulkit::load_checkpoint(args.checkpoint_path);
        const std::vector<double> predictions =
            model.predict_rul_h(dataset.test, dataset.stats);
        std::vector<double> truth;
        truth.reserve(dataset.test.size());
        for (const auto& sample : dataset.test) {
            truth.push_back(sample.rul_h);
        }
        report = rulkit::make_report(truth, predictions, args.bins);
        if (method.empty()) {
            method = rulkit::variant_name(model.spec().variant);
        }
        manifest.config["checkpoint"] = args.checkpoint_path;
        manifest.input_digests["checkpoint.txt"] =
            rulkit::digest_hex(rulkit::fnv1a64_file(args.checkpoint_path));
    }

    rulkit::write_report_files(report, args.common.out_dir, method);
    std::vector<std::string> outputs = {"report.json", "pairs.csv", "errors_hist.csv"};

    if (!args.device_id.empty()) {
        // Trajectory of true vs predicted RUL along one device's life.
        std::vector<const rulkit::Sample*> device_samples;
        for (const auto& sample : dataset.train) {
            if (sample.device_id == args.device_id) {
                device_samples.push_back(&sample);
            }
        }
        for (const auto& sample : dataset.test) {
            if (sample.device_id == args.device_id) {
                device_samples.push_back(&sample);
            }
        }
        if (device_samples.empty()) {
            throw rulkit::UsageError("device '" + args.device_id + "' not present in dataset");
        }
        std::sort(device_samples.begin(), device_samples.end(),
                  [](const auto* a, const auto* b) {
                      return a->window_end_time_h < b->window_end_time_h;
                  });
        std::optional<rulkit::Model> model;
        std::map<std::string, rulkit::DeviceRecord> by_id;
        if (!args.use_llsf) {
            model.emplace(rulkit::load_checkpoint(args.checkpoint_path));
        } else {
            for (const auto& record : rulkit::read_fleet_dir(args.fleet_dir)) {
                by_id[record.device_id] = record;
            }
        }
        const std::string filename = "trajectory_" + args.device_id + ".csv";
        auto out = open_output(fs::path(args.common.out_dir) / filename);
        out << "time_h,rul_true_h,rul_pred_h\n";
        char buf[96];
        for (const auto* sample : device_samples) {
            double pred = 0.0;
            if (model) {
                pred = model->predict_rul_h(rulkit::apply_normalize(*sample, dataset.stats));
            } else {
                const auto& record = by_id.at(sample->device_id);
                std::size_t n = 0;
                while (n < record.times_h.size() &&
                       record.times_h[n] <= sample->window_end_time_h) {
                    ++n;
                }
                pred = rulkit::llsf_predict_rul({record.times_h.data(), n},
                                                {record.power_mw.data(), n},
                                                sample->window_end_time_h,
                                                record.power_mw.front() * 0.8);
            }
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", sample->window_end_time_h,
                          sample->rul_h, pred);
            out << buf;
        }
        outputs.push_back(filename);
    }

    manifest.config["dataset"] = args.dataset_dir;
    manifest.config["bins"] = args.bins;
    manifest.config["method"] = method;
    add_digests(manifest.output_digests, args.common.out_dir, outputs);
    manifest.duration_s = std::chrono::duration<double>(Clock::now() - t0).count();
    rulkit::write_manifest(manifest, args.common.out_dir);

    if (!args.common.quiet) {
        std::printf("%s on %zu test samples: rmse %.2f h, mae %.2f h, score %.4g -> %s\n",
                    method.c_str(), report.n, report.rmse_h, report.mae_h, report.score_s,
                    args.common.out_dir.c_str());
    }
    return kExitOk;
}

// ---- compare ----

struct CompareArgs {
    CommonOpts common;
    std::vector<std::string> report_paths;
    std::string reference;
};

int cmd_compare(const CompareArgs& args) {
    const auto t0 = Clock::now();
    std::vector<rulkit::ReportSummary> reports;
    for (const std::string& path : args.report_paths) {
        require_input_file(path);
        reports.push_back(rulkit::read_report_summary(path));
    }

    std::size_t ref_index = 0;
    if (!args.reference.empty()) {
        bool found = false;
        for (std::size_t i = 0; i < reports.size(); ++i) {
            if (reports[i].method == args.reference) {
                ref_index = i;
                found = true;
                break;
            }
        }
        if (!found) {
            throw rulkit::UsageError("reference method '" + args.reference +
                                     "' not among the given reports");
        }
    }
    const rulkit::ReportSummary& ref = reports[ref_index];

    for (const auto& report : reports) {
        if (report.n != ref.n) {
            std::fprintf(stderr,
                         "warning: sample counts differ (%s: %zu vs %s: %zu); comparison "
                         "emitted anyway\n",
                         report.method.c_str(), report.n, ref.method.c_str(), ref.n);
        }
    }

    const auto delta_pct = [](double value, double reference) {
        return reference == 0.0 ? 0.0 : (value - reference) / reference * 100.0;
    };

    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    std::printf("%-12s %8s %12s %12s %14s %10s %10s %10s\n", "method", "n", "rmse_h", "mae_h",
                "score_s", "d_rmse%", "d_mae%", "d_score%");
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        const double d_rmse = delta_pct(r.rmse_h, ref.rmse_h);
        const double d_mae = delta_pct(r.mae_h, ref.mae_h);
        const double d_score = delta_pct(r.score_s, ref.score_s);
        std::printf("%-12s %8zu %12.2f %12.2f %14.4g %+10.1f %+10.1f %+10.1f%s\n",
                    r.method.c_str(), r.n, r.rmse_h, r.mae_h, r.score_s, d_rmse, d_mae, d_score,
                    i == ref_index ? "  (reference)" : "");
        rows.push_back({{"method", r.method},
                        {"n", r.n},
                        {"rmse_h", r.rmse_h},
                        {"mae_h", r.mae_h},
                        {"score_s", r.score_s},
                        {"d_rmse_pct", d_rmse},
                        {"d_mae_pct", d_mae},
                        {"d_score_pct", d_score},
                        {"reference", i == ref_index}});
    }

    if (!args.common.out_dir.empty()) {
        ensure_out_dir(args.common);
        refuse_overwrite(args.common, {"comparison.json"});
        nlohmann::ordered_json j;
        j["reference"] = ref.method;
        j["rows"] = rows;
        auto out = open_output(fs::path(args.common.out_dir) / "comparison.json");
        out << j.dump(2) << "\n";
        out.close();

        rulkit::RunManifest manifest;
        manifest.subcommand = "compare";
        manifest.config = {{"reports", args.report_paths}, {"reference", ref.method}};
        for (const std::string& path : args.report_paths) {
            manifest.input_digests[path] = rulkit::digest_hex(rulkit::fnv1a64_file(path));
        }
        add_digests(manifest.output_digests, args.common.out_dir, {"comparison.json"});
        manifest.duration_s = std::chrono::duration<double>(Clock::now() - t0).count();
        rulkit::write_manifest(manifest, args.common.out_dir);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rulkit: laser remaining-useful-life prediction toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags (--config, ...) usable after a subcommand
    app.set_config("--config", "", "Read options from an INI/TOML config file");
    app.set_version_flag("--version", rulkit::kToolVersion);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Simulate an accelerated-aging fleet");
    generate->add_option("--devices", gen.config.device_count, "Number of devices")
        ->capture_default_str();
    generate->add_option("--interval", gen.config.sampling_interval_h, "Sampling interval [h]")
        ->capture_default_str();
    generate->add_option("--max-hours", gen.config.max_test_hours, "Test duration [h]")
        ->capture_default_str();
    generate
        ->add_option("--temps", gen.config.temperature_levels_c,
                     "Ambient temperature levels [C]")
        ->capture_default_str();
    generate->add_option("--noise", gen.config.noise_std_relative, "Relative noise std")
        ->capture_default_str();
    generate
        ->add_option("--infant-fraction", gen.config.infant_mortality_fraction,
                     "Infant mortality fraction")
        ->capture_default_str();
    generate->add_option("--prefactor", gen.config.law.prefactor, "Degradation rate prefactor")
        ->capture_default_str();
    generate
        ->add_option("--activation-energy", gen.config.law.activation_energy_ev,
                     "Arrhenius activation energy [eV]")
        ->capture_default_str();
    generate
        ->add_option("--density-exponent", gen.config.law.current_density_exponent,
                     "Current density exponent")
        ->capture_default_str();
    generate->add_option("--time-exponent", gen.config.law.time_exponent, "Time exponent m")
        ->capture_default_str();
    generate->add_option("--seed", gen.config.master_seed, "Master seed")->capture_default_str();
    add_common(generate, gen.common);

    BuildDatasetArgs build;
    auto* build_dataset =
        app.add_subcommand("build-dataset", "Window a fleet into supervised samples");
    build_dataset->add_option("--fleet", build.fleet_dir, "Directory with fleet/conditions csv")
        ->required();
    build_dataset->add_option("--seed", build.seed, "Split seed")->capture_default_str();
    build_dataset
        ->add_option("--train-fraction", build.train_fraction, "Training sample fraction")
        ->capture_default_str();
    add_common(build_dataset, build.common);

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Train a model variant");
    train_cmd->add_option("--dataset", train.dataset_dir, "Dataset directory")->required();
    train_cmd->add_option("--variant", train.variant, "hybrid, cnn_only, lstm_only or mlp")
        ->capture_default_str();
    train_cmd->add_option("--epochs", train.config.epochs, "Max epochs")->capture_default_str();
    train_cmd->add_option("--batch", train.config.batch_size, "Batch size")
        ->capture_default_str();
    train_cmd->add_option("--lr", train.config.learning_rate, "Learning rate")
        ->capture_default_str();
    train_cmd->add_option("--optimizer", train.optimizer, "adam or sgd")
        ->check(CLI::IsMember({"adam", "sgd"}))
        ->capture_default_str();
    train_cmd->add_option("--patience", train.config.patience, "Early-stopping patience")
        ->capture_default_str();
    train_cmd
        ->add_option("--val-fraction", train.config.validation_fraction,
                     "Validation fraction carved from train (0 disables early stopping)")
        ->capture_default_str();
    train_cmd->add_option("--seed", train.seed, "Model seed")->capture_default_str();
    add_common(train_cmd, train.common);

    EvaluateArgs eval;
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint or the LLSF baseline");
    evaluate->add_option("--dataset", eval.dataset_dir, "Dataset directory")->required();
    evaluate->add_option("--checkpoint", eval.checkpoint_path, "Checkpoint file");
    evaluate->add_flag("--llsf", eval.use_llsf, "Evaluate the LLSF baseline instead");
    evaluate->add_option("--fleet", eval.fleet_dir, "Fleet directory (required with --llsf)");
    evaluate->add_option("--bins", eval.bins, "Error histogram bins")->capture_default_str();
    evaluate->add_option("--device", eval.device_id, "Also emit a RUL trajectory for a device");
    evaluate->add_option("--method-name", eval.method_name, "Override the report method label");
    add_common(evaluate, eval.common);

    CompareArgs compare;
    auto* compare_cmd = app.add_subcommand("compare", "Compare evaluation reports");
    compare_cmd->add_option("reports", compare.report_paths, "report.json paths")
        ->expected(2, -1);
    compare_cmd->add_option("--reference", compare.reference,
                            "Reference method name (default: first report)");
    add_common(compare_cmd, compare.common, /*out_required=*/false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (generate->parsed()) {
            return cmd_generate(gen);
        }
        if (build_dataset->parsed()) {
            return cmd_build_dataset(build);
        }
        if (train_cmd->parsed()) {
            return cmd_train(train);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(eval);
        }
        if (compare_cmd->parsed()) {
            return cmd_compare(compare);
        }
    } catch (const rulkit::NumericalError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    } catch (const rulkit::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        // config/usage/data/parse problems
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
