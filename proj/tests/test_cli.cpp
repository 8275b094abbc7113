#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaitnet/cli.hpp"
#include "gaitnet/data.hpp"
#include "gaitnet/model.hpp"
#include "gaitnet/report.hpp"

using namespace gaitnet;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("gaitnet_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string str(const std::string& sub = "") const {
        return sub.empty() ? path.string() : (path / sub).string();
    }
};

struct CliResult {
    int exit_code;
    std::string out;
    std::string err;
};

// Runs the CLI in-process with stdout/stderr captured.
CliResult run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
    std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
    int code = -1;
    try {
        code = cli::run(std::move(args));
    } catch (...) {
        std::cout.rdbuf(old_out);
        std::cerr.rdbuf(old_err);
        throw;
    }
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    return {code, out.str(), err.str()};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << content;
}

// Small roster: 2 healthy / 1 orthopedic / 1 neurological, short recordings.
std::string write_small_spec(const TempDir& dir) {
    const std::string path = dir.str("spec.json");
    write_file(path, R"({
  "healthy_dogs": 2,
  "orthopedic_dogs": 1,
  "neurological_dogs": 1,
  "neurological_trot_dogs": 1,
  "walk_mean_s": [6.0, 6.0, 6.0],
  "trot_mean_s": [4.0, 4.0, 4.0],
  "still_min_s": 0.5,
  "still_max_s": 1.0
})");
    return path;
}

json read_json(const std::string& path) { return json::parse(read_file(path)); }

// Relative paths of every regular file under root, sorted.
std::vector<std::string> tree_files(const std::string& root) {
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            files.push_back(fs::relative(entry.path(), root).string());
    std::sort(files.begin(), files.end());
    return files;
}

// Synthesizes the small dataset once per binary run and hands out the
// manifest path; CLI training flows all start from the same files.
const std::string& small_manifest() {
    static TempDir dir;
    static std::string manifest = [] {
        const auto spec = write_small_spec(dir);
        auto r = run_cli({"synth", "--spec", spec, "--out", dir.str("data"), "--seed", "11"});
        REQUIRE(r.exit_code == 0);
        return dir.str("data") + "/manifest.csv";
    }();
    return manifest;
}

std::vector<std::string> train_flags(const std::string& manifest, const std::string& out) {
    return {"train",     "--manifest", manifest, "--task",   "binary", "--placement",
            "tail",      "--protocol", "walk",   "--epochs", "2",      "--restarts",
            "1",         "--window",   "24",     "--stride", "12",     "--seed",
            "3",         "--out",      out};
}

}  // namespace

TEST_CASE("synth writes the dataset, prints the manifest path, and records the run") {
    TempDir dir;
    const auto spec = write_small_spec(dir);
    auto r = run_cli({"synth", "--spec", spec, "--out", dir.str("a"), "--seed", "5"});
    REQUIRE(r.exit_code == 0);

    const std::string manifest_path = dir.str("a") + "/manifest.csv";
    CHECK(r.out == manifest_path + "\n");
    CHECK(fs::exists(manifest_path));

    const json run_manifest = read_json(dir.str("a") + "/run_manifest.json");
    CHECK(run_manifest.at("command") == "synth");
    CHECK(run_manifest.at("tool_version") == cli::kToolVersion);
    CHECK(run_manifest.at("args").at("seed") == 5);
    REQUIRE(run_manifest.at("artifacts").size() == 1);
    CHECK(run_manifest.at("artifacts")[0] == manifest_path);

    const auto manifest = data::load_manifest(manifest_path);
    CHECK(manifest.dog_ids().size() == 4);
}

TEST_CASE("synth is byte-identical per seed and varies across seeds") {
    TempDir dir;
    const auto spec = write_small_spec(dir);
    REQUIRE(run_cli({"synth", "--spec", spec, "--out", dir.str("a"), "--seed", "5"}).exit_code == 0);
    REQUIRE(run_cli({"synth", "--spec", spec, "--out", dir.str("b"), "--seed", "5"}).exit_code == 0);
    REQUIRE(run_cli({"synth", "--spec", spec, "--out", dir.str("c"), "--seed", "6"}).exit_code == 0);

    const auto files = tree_files(dir.str("a"));
    CHECK(files == tree_files(dir.str("b")));
    for (const auto& rel : files) {
        if (rel == "run_manifest.json") continue;  // embeds the output dir
        CHECK(read_file(dir.str("a") + "/" + rel) == read_file(dir.str("b") + "/" + rel));
    }

    CHECK(tree_files(dir.str("c")) == files);
    bool any_differs = false;
    for (const auto& rel : files) {
        if (rel == "run_manifest.json") continue;
        if (read_file(dir.str("a") + "/" + rel) != read_file(dir.str("c") + "/" + rel))
            any_differs = true;
    }
    CHECK(any_differs);
}

TEST_CASE("synth without a spec produces the full default roster") {
    TempDir dir;
    auto r = run_cli({"synth", "--out", dir.str("d"), "--seed", "1"});
    REQUIRE(r.exit_code == 0);
    const auto manifest = data::load_manifest(dir.str("d") + "/manifest.csv");
    CHECK(manifest.dog_ids().size() == 29);
    const auto per_class = manifest.dogs_per_class();
    CHECK(per_class[static_cast<int>(ClassLabel::healthy)] == 17);
    CHECK(per_class[static_cast<int>(ClassLabel::orthopedic)] == 6);
    CHECK(per_class[static_cast<int>(ClassLabel::neurological)] == 6);
    // Every dog walks at every placement; only the trot subset is thinner.
    CHECK(manifest.entries.size() == 162);
}

TEST_CASE("synth rejects an empty roster with a nonzero exit") {
    TempDir dir;
    const std::string spec = dir.str("empty.json");
    write_file(spec, R"({"healthy_dogs": 0, "orthopedic_dogs": 0, "neurological_dogs": 0})");
    auto r = run_cli({"synth", "--spec", spec, "--out", dir.str("x")});
    CHECK(r.exit_code != 0);
    CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("train writes report, checkpoint, and run manifest") {
    TempDir dir;
    auto r = run_cli(train_flags(small_manifest(), dir.str("t")));
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("accuracy=") != std::string::npos);

    const EvalReport report = report::from_json_file(dir.str("t") + "/report.json");
    CHECK(report.task == "binary");
    CHECK(report.placement == "tail");
    CHECK(report.protocol == "walk");
    CHECK(report.regime == "random");
    CHECK(report.accuracy >= 0.0);
    CHECK(report.accuracy <= 1.0);
    long total = 0;
    for (const auto& row : report.confusion)
        for (long v : row) total += v;
    CHECK(total == report.test_windows);

    const auto params = model::load_checkpoint(dir.str("t") + "/checkpoint.bin");
    CHECK(params.head_count() == 1);

    const json run_manifest = read_json(dir.str("t") + "/run_manifest.json");
    CHECK(run_manifest.at("command") == "train");
    CHECK(run_manifest.at("args").at("epochs") == 2);
    CHECK(run_manifest.at("args").at("window") == 24);
    REQUIRE(run_manifest.at("artifacts").size() == 2);
}

TEST_CASE("train --augment doubles the training windows and leaves the test set alone") {
    TempDir dir;
    REQUIRE(run_cli(train_flags(small_manifest(), dir.str("plain"))).exit_code == 0);
    auto flags = train_flags(small_manifest(), dir.str("aug"));
    flags.push_back("--augment");
    flags.push_back("15");
    REQUIRE(run_cli(flags).exit_code == 0);

    const auto plain = report::from_json_file(dir.str("plain") + "/report.json");
    const auto augmented = report::from_json_file(dir.str("aug") + "/report.json");
    CHECK(augmented.train_windows == 2 * plain.train_windows);
    CHECK(augmented.test_windows == plain.test_windows);
}

TEST_CASE("train --two-head is recorded in the checkpoint") {
    TempDir dir;
    auto flags = train_flags(small_manifest(), dir.str("t2"));
    flags.push_back("--two-head");
    REQUIRE(run_cli(flags).exit_code == 0);
    const auto params = model::load_checkpoint(dir.str("t2") + "/checkpoint.bin");
    CHECK(params.head_count() == 2);
}

TEST_CASE("train exits nonzero when the selected cell has no data for a class") {
    TempDir dir;
    const std::string spec = dir.str("nt.json");
    write_file(spec, R"({
  "healthy_dogs": 2, "orthopedic_dogs": 1, "neurological_dogs": 1,
  "neurological_trot_dogs": 0,
  "walk_mean_s": [6.0, 6.0, 6.0], "trot_mean_s": [4.0, 4.0, 4.0],
  "still_min_s": 0.5, "still_max_s": 1.0
})");
    REQUIRE(run_cli({"synth", "--spec", spec, "--out", dir.str("d"), "--seed", "2"}).exit_code == 0);

    auto flags = train_flags(dir.str("d") + "/manifest.csv", dir.str("t"));
    flags[4] = "multi";      // --task
    flags[8] = "trot";       // --protocol
    auto r = run_cli(flags);
    CHECK(r.exit_code != 0);
    CHECK(r.err.find("error:") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.str("t") + "/report.json"));
}

TEST_CASE("rerunning train with the same seed yields byte-identical artifacts") {
    TempDir dir;
    REQUIRE(run_cli(train_flags(small_manifest(), dir.str("r1"))).exit_code == 0);
    REQUIRE(run_cli(train_flags(small_manifest(), dir.str("r2"))).exit_code == 0);
    CHECK(read_file(dir.str("r1") + "/report.json") == read_file(dir.str("r2") + "/report.json"));
    CHECK(read_file(dir.str("r1") + "/checkpoint.bin") ==
          read_file(dir.str("r2") + "/checkpoint.bin"));
}

TEST_CASE("loo reports one fold per dog with its id") {
    TempDir dir;
    std::vector<std::string> flags = {"loo",      "--manifest", small_manifest(),
                                      "--task",   "binary",     "--placement",
                                      "tail",     "--protocol", "walk",
                                      "--epochs", "1",          "--restarts",
                                      "1",        "--window",   "24",
                                      "--stride", "12",         "--seed",
                                      "4",        "--out",      dir.str("l")};
    auto r = run_cli(flags);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("4 folds") != std::string::npos);

    const EvalReport report = report::from_json_file(dir.str("l") + "/report.json");
    CHECK(report.regime == "loo");
    REQUIRE(report.folds.size() == 4);
    const auto manifest = data::load_manifest(small_manifest());
    auto dogs = manifest.dog_ids();
    std::vector<std::string> fold_dogs;
    for (const auto& fold : report.folds) fold_dogs.push_back(fold.dog_id);
    std::sort(fold_dogs.begin(), fold_dogs.end());
    std::sort(dogs.begin(), dogs.end());
    CHECK(fold_dogs == dogs);

    const json run_manifest = read_json(dir.str("l") + "/run_manifest.json");
    CHECK(run_manifest.at("command") == "loo");
}

TEST_CASE("report summarizes one row per input and groups mixed tasks") {
    TempDir dir;
    std::vector<std::string> paths;
    const char* placements[] = {"head", "tail", "neck"};
    for (int task = 0; task < 2; ++task)
        for (int p = 0; p < 3; ++p) {
            EvalReport r;
            r.task = task == 0 ? "multi" : "binary";
            r.placement = placements[p];
            r.protocol = "walk";
            r.regime = "random_split";
            r.accuracy = 0.5 + 0.1 * p;
            r.f1 = 0.4 + 0.1 * p;
            r.class_names = {"a", "b"};
            r.confusion = {{1, 0}, {0, 1}};
            r.test_windows = 2;
            const std::string path = dir.str("r" + std::to_string(task * 3 + p) + ".json");
            report::write_json(r, path);
            paths.push_back(path);
        }

    std::vector<std::string> flags = {"report"};
    flags.insert(flags.end(), paths.begin(), paths.end());
    flags.push_back("--out");
    flags.push_back(dir.str("s"));
    auto r = run_cli(flags);
    REQUIRE(r.exit_code == 0);

    const std::string table = read_file(dir.str("s") + "/summary.txt");
    CHECK(r.out == table);
    CHECK(table.find("task: multi") != std::string::npos);
    CHECK(table.find("task: binary") != std::string::npos);

    const json summary = read_json(dir.str("s") + "/summary.json");
    REQUIRE(summary.at("tasks").size() == 2);
    CHECK(summary.at("tasks")[0].at("rows").size() == 3);
    CHECK(summary.at("tasks")[1].at("rows").size() == 3);
    // Exactly one best row per task group, and it carries the top accuracy.
    for (const auto& group : summary.at("tasks")) {
        int best_count = 0;
        for (const auto& row : group.at("rows"))
            if (row.at("best").get<bool>()) {
                ++best_count;
                CHECK(row.at("accuracy").get<double>() == doctest::Approx(0.7));
            }
        CHECK(best_count == 1);
    }
}

TEST_CASE("report renders a single row for a single input") {
    TempDir dir;
    EvalReport r;
    r.task = "multi";
    r.placement = "neck";
    r.protocol = "trot";
    r.regime = "loo";
    r.accuracy = 0.9;
    r.f1 = 0.8;
    r.class_names = {"a", "b"};
    r.confusion = {{9, 0}, {1, 0}};
    r.test_windows = 10;
    report::write_json(r, dir.str("one.json"));

    auto res = run_cli({"report", dir.str("one.json"), "--out", dir.str("s")});
    REQUIRE(res.exit_code == 0);
    const json summary = read_json(dir.str("s") + "/summary.json");
    REQUIRE(summary.at("tasks").size() == 1);
    CHECK(summary.at("tasks")[0].at("rows").size() == 1);
    CHECK(summary.at("tasks")[0].at("rows")[0].at("best") == true);
}

TEST_CASE("report exits nonzero on a malformed input") {
    TempDir dir;
    write_file(dir.str("junk.json"), "not json at all");
    auto r = run_cli({"report", dir.str("junk.json"), "--out", dir.str("s")});
    CHECK(r.exit_code != 0);
    CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("replay reproduces a training run byte-identically") {
    TempDir dir;
    REQUIRE(run_cli(train_flags(small_manifest(), dir.str("orig"))).exit_code == 0);
    auto r = run_cli({"replay", dir.str("orig") + "/run_manifest.json", "--out", dir.str("again")});
    REQUIRE(r.exit_code == 0);
    CHECK(read_file(dir.str("orig") + "/report.json") ==
          read_file(dir.str("again") + "/report.json"));
    CHECK(read_file(dir.str("orig") + "/checkpoint.bin") ==
          read_file(dir.str("again") + "/checkpoint.bin"));
}

TEST_CASE("replay reproduces a synth run byte-identically") {
    TempDir dir;
    const auto spec = write_small_spec(dir);
    REQUIRE(run_cli({"synth", "--spec", spec, "--out", dir.str("a"), "--seed", "9"}).exit_code == 0);
    auto r = run_cli({"replay", dir.str("a") + "/run_manifest.json", "--out", dir.str("b")});
    REQUIRE(r.exit_code == 0);
    for (const auto& rel : tree_files(dir.str("a"))) {
        if (rel == "run_manifest.json") continue;
        CHECK(read_file(dir.str("a") + "/" + rel) == read_file(dir.str("b") + "/" + rel));
    }
}

TEST_CASE("replay rejects an unknown command") {
    TempDir dir;
    write_file(dir.str("bad.json"), R"({"command": "frobnicate", "args": {}})");
    auto r = run_cli({"replay", dir.str("bad.json")});
    CHECK(r.exit_code != 0);
    CHECK(r.err.find("frobnicate") != std::string::npos);
}

TEST_CASE("a config file supplies defaults and explicit flags override it") {
    TempDir dir;
    write_file(dir.str("run.cfg"), "[train]\nepochs = 3\nstride = 24\n");

    auto base = [&](const std::string& out) {
        return std::vector<std::string>{
            "train",    "--manifest", small_manifest(), "--task",   "binary", "--placement",
            "tail",     "--protocol", "walk",           "--window", "24",     "--restarts",
            "1",        "--seed",     "3",              "--out",    out,      "--config",
            dir.str("run.cfg")};
    };

    REQUIRE(run_cli(base(dir.str("cfg"))).exit_code == 0);
    json args = read_json(dir.str("cfg") + "/run_manifest.json").at("args");
    CHECK(args.at("epochs") == 3);
    CHECK(args.at("stride") == 24);

    auto overridden = base(dir.str("ovr"));
    overridden.push_back("--epochs");
    overridden.push_back("1");
    REQUIRE(run_cli(overridden).exit_code == 0);
    args = read_json(dir.str("ovr") + "/run_manifest.json").at("args");
    CHECK(args.at("epochs") == 1);
    CHECK(args.at("stride") == 24);
}

TEST_CASE("malformed invocations exit nonzero") {
    CHECK(run_cli({}).exit_code != 0);
    CHECK(run_cli({"bogus"}).exit_code != 0);
    CHECK(run_cli({"train"}).exit_code != 0);  // --manifest is required
    CHECK(run_cli({"train", "--manifest", "m.csv", "--task", "junk"}).exit_code != 0);
    CHECK(run_cli({"train", "--manifest", "/nonexistent/manifest.csv"}).exit_code != 0);
}

TEST_CASE("--version prints the tool version and exits cleanly") {
    auto r = run_cli({"--version"});
    CHECK(r.exit_code == 0);
    CHECK(r.out.find(cli::kToolVersion) != std::string::npos);
}
