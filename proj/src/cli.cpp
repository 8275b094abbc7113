#include "gaitnet/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gaitnet/data.hpp"
#include "gaitnet/error.hpp"
#include "gaitnet/model.hpp"
#include "gaitnet/report.hpp"
#include "gaitnet/synth.hpp"
#include "gaitnet/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gaitnet::cli {

namespace {

struct SynthArgs {
    std::string spec_path;  // empty = compiled-in defaults
    std::string out = "synth_data";
    std::uint64_t seed = 1;
};

struct RunArgs {
    std::string manifest_path;
    std::string task = "multi";
    std::string placement = "tail";
    std::string protocol = "walk";
    std::uint64_t seed = 1;
    int epochs = 60;
    int restarts = 60;
    int batch_size = 32;
    double lr = 1e-4;
    double weight_decay = 1e-4;
    double dropout = 0.5;
    double validation_fraction = 0.15;
    double test_fraction = 0.2;
    bool augment = false;
    double augment_angle = 15.0;
    bool two_head = false;
    int window = 120;
    int stride = 5;
    double trim_threshold = 0.05;
    int trim_std_window = 60;
    int min_active_run = 30;
    std::string out = "run_out";
};

struct ReportArgs {
    std::vector<std::string> inputs;
    std::string out = ".";
};

train::ExperimentConfig to_experiment(const RunArgs& a) {
    train::ExperimentConfig cfg;
    cfg.pipeline.task.task = parse_task(a.task);
    cfg.pipeline.placement = a.placement == "all"
                                 ? std::nullopt
                                 : std::optional<Placement>(parse_placement(a.placement));
    cfg.pipeline.protocol = parse_protocol(a.protocol);
    cfg.pipeline.window = a.window;
    cfg.pipeline.stride = a.stride;
    cfg.pipeline.trim_threshold = a.trim_threshold;
    cfg.pipeline.trim_std_window = a.trim_std_window;
    cfg.pipeline.min_active_run = a.min_active_run;

    cfg.model.dropout_rate = a.dropout;
    cfg.model.head_mode = a.two_head ? HeadMode::two_head : HeadMode::single;

    cfg.train.epochs = a.epochs;
    cfg.train.restarts = a.restarts;
    cfg.train.batch_size = a.batch_size;
    cfg.train.seed = a.seed;
    cfg.train.validation_fraction = a.validation_fraction;
    cfg.train.test_fraction = a.test_fraction;
    cfg.train.augment = a.augment;
    cfg.train.augment_angle_deg = a.augment_angle;
    cfg.train.adam.lr = a.lr;
    cfg.train.adam.weight_decay = a.weight_decay;
    return cfg;
}

json run_args_to_json(const RunArgs& a) {
    return json{{"augment", a.augment},
                {"augment_angle", a.augment_angle},
                {"batch_size", a.batch_size},
                {"dropout", a.dropout},
                {"epochs", a.epochs},
                {"lr", a.lr},
                {"manifest", a.manifest_path},
                {"min_active_run", a.min_active_run},
                {"out", a.out},
                {"placement", a.placement},
                {"protocol", a.protocol},
                {"restarts", a.restarts},
                {"seed", a.seed},
                {"stride", a.stride},
                {"task", a.task},
                {"test_fraction", a.test_fraction},
                {"trim_std_window", a.trim_std_window},
                {"trim_threshold", a.trim_threshold},
                {"two_head", a.two_head},
                {"validation_fraction", a.validation_fraction},
                {"weight_decay", a.weight_decay},
                {"window", a.window}};
}

RunArgs run_args_from_json(const json& j) {
    RunArgs a;
    a.manifest_path = j.at("manifest").get<std::string>();
    a.task = j.at("task").get<std::string>();
    a.placement = j.at("placement").get<std::string>();
    a.protocol = j.at("protocol").get<std::string>();
    a.seed = j.at("seed").get<std::uint64_t>();
    a.epochs = j.at("epochs").get<int>();
    a.restarts = j.at("restarts").get<int>();
    a.batch_size = j.at("batch_size").get<int>();
    a.lr = j.at("lr").get<double>();
    a.weight_decay = j.at("weight_decay").get<double>();
    a.dropout = j.at("dropout").get<double>();
    a.validation_fraction = j.at("validation_fraction").get<double>();
    a.test_fraction = j.at("test_fraction").get<double>();
    a.augment = j.at("augment").get<bool>();
    a.augment_angle = j.at("augment_angle").get<double>();
    a.two_head = j.at("two_head").get<bool>();
    a.window = j.at("window").get<int>();
    a.stride = j.at("stride").get<int>();
    a.trim_threshold = j.at("trim_threshold").get<double>();
    a.trim_std_window = j.at("trim_std_window").get<int>();
    a.min_active_run = j.at("min_active_run").get<int>();
    a.out = j.at("out").get<std::string>();
    return a;
}

void write_run_manifest(const std::string& command, const json& args,
                        const std::vector<std::string>& artifacts, const std::string& out_dir) {
    const json j{{"args", args},
                 {"artifacts", artifacts},
                 {"command", command},
                 {"tool_version", kToolVersion}};
    const std::string path = (fs::path(out_dir) / "run_manifest.json").string();
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw InputError("write to " + path + " failed");
}

void ensure_out_dir(const std::string& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw InputError("cannot create output directory " + out);
}

int do_synth(const SynthArgs& a) {
    const synth::SynthSpec spec =
        a.spec_path.empty() ? synth::SynthSpec{} : synth::load_spec(a.spec_path);
    ensure_out_dir(a.out);
    const std::string manifest_path = synth::synthesize_dataset(spec, a.seed, a.out);
    write_run_manifest("synth",
                       json{{"out", a.out}, {"seed", a.seed}, {"spec", a.spec_path}},
                       {manifest_path}, a.out);
    std::cout << manifest_path << "\n";
    return 0;
}

int do_train(const RunArgs& a) {
    const DatasetManifest manifest = data::load_manifest(a.manifest_path);
    const train::ExperimentConfig cfg = to_experiment(a);
    train::RandomSplitResult result = train::run_random_split(manifest, cfg);

    ensure_out_dir(a.out);
    const std::string report_path = (fs::path(a.out) / "report.json").string();
    const std::string checkpoint_path = (fs::path(a.out) / "checkpoint.bin").string();
    report::write_json(result.report, report_path);
    model::save_checkpoint(result.params, checkpoint_path);
    write_run_manifest("train", run_args_to_json(a), {report_path, checkpoint_path}, a.out);

    std::cout << "train " << result.report.task << "/" << result.report.placement << "/"
              << result.report.protocol << ": accuracy=" << result.report.accuracy
              << " f1=" << result.report.f1 << " -> " << report_path << "\n";
    return 0;
}

int do_loo(const RunArgs& a) {
    const DatasetManifest manifest = data::load_manifest(a.manifest_path);
    const train::ExperimentConfig cfg = to_experiment(a);
    const EvalReport report = train::run_loo(manifest, cfg);

    ensure_out_dir(a.out);
    const std::string report_path = (fs::path(a.out) / "report.json").string();
    report::write_json(report, report_path);
    write_run_manifest("loo", run_args_to_json(a), {report_path}, a.out);

    std::cout << "loo " << report.task << "/" << report.placement << "/" << report.protocol
              << ": mean accuracy=" << report.accuracy << " mean f1=" << report.f1 << " over "
              << report.folds.size() << " folds -> " << report_path << "\n";
    return 0;
}

int do_report(const ReportArgs& a) {
    std::vector<EvalReport> reports;
    for (const auto& path : a.inputs) reports.push_back(report::from_json_file(path));

    ensure_out_dir(a.out);
    const std::string table = report::summary_table(reports);
    const std::string txt_path = (fs::path(a.out) / "summary.txt").string();
    const std::string json_path = (fs::path(a.out) / "summary.json").string();
    {
        std::ofstream out(txt_path);
        if (!out) throw InputError("cannot write " + txt_path);
        out << table;
    }
    {
        std::ofstream out(json_path);
        if (!out) throw InputError("cannot write " + json_path);
        out << report::summary_json(reports);
    }
    write_run_manifest("report", json{{"inputs", a.inputs}, {"out", a.out}},
                       {txt_path, json_path}, a.out);
    std::cout << table;
    return 0;
}

int do_replay(const std::string& manifest_path, const std::string& out_override) {
    std::ifstream in(manifest_path);
    if (!in) throw InputError("replay: cannot open " + manifest_path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("replay: ") + e.what());
    }
    const std::string command = j.at("command").get<std::string>();
    const json& args = j.at("args");
    if (command == "synth") {
        SynthArgs a;
        a.spec_path = args.at("spec").get<std::string>();
        a.seed = args.at("seed").get<std::uint64_t>();
        a.out = out_override.empty() ? args.at("out").get<std::string>() : out_override;
        return do_synth(a);
    }
    if (command == "train" || command == "loo") {
        RunArgs a = run_args_from_json(args);
        if (!out_override.empty()) a.out = out_override;
        return command == "train" ? do_train(a) : do_loo(a);
    }
    if (command == "report") {
        ReportArgs a;
        a.inputs = args.at("inputs").get<std::vector<std::string>>();
        a.out = out_override.empty() ? args.at("out").get<std::string>() : out_override;
        return do_report(a);
    }
    throw SchemaError("replay: unknown command '" + command + "'");
}

void add_run_options(CLI::App* sub, RunArgs& a, CLI::Option*& augment_opt) {
    sub->add_option("--manifest", a.manifest_path, "Dataset manifest CSV")->required();
    sub->add_option("--task", a.task, "Classification task")
        ->check(CLI::IsMember({"multi", "binary", "diagnosis"}));
    sub->add_option("--placement", a.placement, "Sensor placement, or 'all' to pool")
        ->check(CLI::IsMember({"head", "tail", "neck", "all"}));
    sub->add_option("--protocol", a.protocol, "Gait protocol")
        ->check(CLI::IsMember({"walk", "trot"}));
    sub->add_option("--seed", a.seed, "Run seed");
    sub->add_option("--epochs", a.epochs, "Training epochs")->check(CLI::PositiveNumber);
    sub->add_option("--restarts", a.restarts, "Independent training restarts")
        ->check(CLI::PositiveNumber);
    sub->add_option("--batch", a.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
    sub->add_option("--lr", a.lr, "Adam learning rate");
    sub->add_option("--weight-decay", a.weight_decay, "Decoupled weight decay");
    sub->add_option("--dropout", a.dropout, "Dropout rate after fc1/fc2");
    sub->add_option("--val-fraction", a.validation_fraction,
                    "Validation share carved from training windows");
    sub->add_option("--test-fraction", a.test_fraction, "Random-split test share");
    augment_opt = sub->add_option("--augment", a.augment_angle,
                                  "Add x-rotated training copies (angle in degrees)");
    sub->add_flag("--two-head", a.two_head,
                  "Separate accelerometer/gyroscope convolution stacks");
    sub->add_option("--window", a.window, "Window length in samples")
        ->check(CLI::PositiveNumber);
    sub->add_option("--stride", a.stride, "Window stride in samples")
        ->check(CLI::PositiveNumber);
    sub->add_option("--trim-threshold", a.trim_threshold,
                    "Accel-norm moving-std activity threshold (g)");
    sub->add_option("--trim-window", a.trim_std_window, "Moving-std window (samples)");
    sub->add_option("--min-active-run", a.min_active_run,
                    "Shortest activity run that counts (samples)");
    sub->add_option("--out", a.out, "Output directory");
}

}  // namespace

int run(std::vector<std::string> args) {
    CLI::App app{"Canine gait classification from 6-axis IMU time series"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "INI config with [train] / [loo] sections of key = value lines");

    SynthArgs synth_args;
    auto* synth_sub = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth_sub->add_option("--spec", synth_args.spec_path,
                          "Generator spec JSON (defaults when omitted)");
    synth_sub->add_option("--out", synth_args.out, "Output directory");
    synth_sub->add_option("--seed", synth_args.seed, "Generator seed");

    RunArgs train_args;
    CLI::Option* train_augment = nullptr;
    auto* train_sub = app.add_subcommand("train", "Train on a stratified random split");
    train_sub->fallthrough();
    add_run_options(train_sub, train_args, train_augment);

    RunArgs loo_args;
    CLI::Option* loo_augment = nullptr;
    auto* loo_sub = app.add_subcommand("loo", "Leave-one-dog-out evaluation");
    loo_sub->fallthrough();
    add_run_options(loo_sub, loo_args, loo_augment);

    ReportArgs report_args;
    auto* report_sub = app.add_subcommand("report", "Summarize report JSON files");
    report_sub->add_option("reports", report_args.inputs, "Report JSON paths")
        ->required()
        ->expected(-1);
    report_sub->add_option("--out", report_args.out, "Output directory");

    std::string replay_manifest, replay_out;
    auto* replay_sub = app.add_subcommand("replay", "Re-run a recorded run manifest");
    replay_sub->add_option("manifest", replay_manifest, "run_manifest.json path")->required();
    replay_sub->add_option("--out", replay_out, "Override the output directory");

    // CLI11 parses a pre-split vector in reverse order.
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (app.got_subcommand(synth_sub)) return do_synth(synth_args);
        if (app.got_subcommand(train_sub)) {
            train_args.augment = train_augment->count() > 0;
            return do_train(train_args);
        }
        if (app.got_subcommand(loo_sub)) {
            loo_args.augment = loo_augment->count() > 0;
            return do_loo(loo_args);
        }
        if (app.got_subcommand(report_sub)) return do_report(report_args);
        if (app.got_subcommand(replay_sub)) return do_replay(replay_manifest, replay_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace gaitnet::cli
