#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "gaitnet/data.hpp"
#include "gaitnet/error.hpp"
#include "gaitnet/synth.hpp"

using namespace gaitnet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("gaitnet_synth_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

synth::SynthSpec small_spec() {
    synth::SynthSpec spec;
    spec.healthy_dogs = 2;
    spec.orthopedic_dogs = 1;
    spec.neurological_dogs = 2;
    spec.neurological_trot_dogs = 1;
    for (double& d : spec.walk_mean_s) d = 5.0;
    for (double& d : spec.trot_mean_s) d = 4.0;
    spec.still_min_s = 0.5;
    spec.still_max_s = 1.0;
    return spec;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Steady portion of the gait: activity-trimmed, then 0.75 s shaved from
// each end to clear the amplitude ramps.
FeatureMap steady_core(const ImuRecording& rec) {
    auto trimmed = data::trim_inactive(rec);
    REQUIRE(trimmed.has_value());
    const int margin = 90;
    const int len = trimmed->samples.length - 2 * margin;
    REQUIRE(len > 240);
    FeatureMap core(6, len);
    for (int c = 0; c < 6; ++c)
        for (int t = 0; t < len; ++t) core.at(c, t) = trimmed->samples.at(c, t + margin);
    return core;
}

// Fundamental rate from debounced mean crossings of the lateral accel
// channel, which oscillates once per stride cycle.
double estimate_stride_hz(const FeatureMap& core, double rate) {
    const int n = core.length;
    double mean = 0.0;
    for (int t = 0; t < n; ++t) mean += core.at(1, t);
    mean /= n;
    int crossings = 0;
    int last = -100;
    bool above = core.at(1, 0) > mean;
    for (int t = 1; t < n; ++t) {
        const bool now = core.at(1, t) > mean;
        if (now != above && t - last >= 8) {
            ++crossings;
            last = t;
        }
        above = now;
    }
    return crossings / (2.0 * n / rate);
}

// Power of one frequency via the Goertzel recurrence, mean removed.
double goertzel_power(const FeatureMap& core, int channel, double freq, double rate) {
    const int n = core.length;
    double mean = 0.0;
    for (int t = 0; t < n; ++t) mean += core.at(channel, t);
    mean /= n;
    const double w = 2.0 * std::numbers::pi * freq / rate;
    const double coeff = 2.0 * std::cos(w);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (int t = 0; t < n; ++t) {
        s0 = core.at(channel, t) - mean + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    return (s1 * s1 + s2 * s2 - coeff * s1 * s2) / n;
}

// Ratio of stride-frequency power to step-frequency power on the vertical
// accel channel; half-cycle asymmetry puts energy at the stride rate.
double asymmetry_score(const ImuRecording& rec) {
    auto core = steady_core(rec);
    const double f = estimate_stride_hz(core, rec.sample_rate);
    return goertzel_power(core, 2, f, rec.sample_rate) /
           goertzel_power(core, 2, 2.0 * f, rec.sample_rate);
}

// Coefficient of variation of per-second vertical-accel chunk deviations;
// stride-to-stride amplitude jitter raises it.
double variability_score(const ImuRecording& rec) {
    auto core = steady_core(rec);
    const int chunk = static_cast<int>(rec.sample_rate);
    std::vector<double> stds;
    for (int start = 0; start + chunk <= core.length; start += chunk) {
        double mean = 0.0;
        for (int t = start; t < start + chunk; ++t) mean += core.at(2, t);
        mean /= chunk;
        double var = 0.0;
        for (int t = start; t < start + chunk; ++t)
            var += (core.at(2, t) - mean) * (core.at(2, t) - mean);
        stds.push_back(std::sqrt(var / chunk));
    }
    REQUIRE(stds.size() >= 4);
    double mean = 0.0;
    for (double s : stds) mean += s;
    mean /= stds.size();
    double var = 0.0;
    for (double s : stds) var += (s - mean) * (s - mean);
    return std::sqrt(var / stds.size()) / mean;
}

double channel_std(const FeatureMap& m, int channel, int from, int count) {
    double mean = 0.0;
    for (int t = from; t < from + count; ++t) mean += m.at(channel, t);
    mean /= count;
    double var = 0.0;
    for (int t = from; t < from + count; ++t)
        var += (m.at(channel, t) - mean) * (m.at(channel, t) - mean);
    return std::sqrt(var / count);
}

}  // namespace

TEST_CASE("synthesize_dataset is byte-identical for a repeated (spec, seed)") {
    TempDir a, b;
    const auto spec = small_spec();
    const auto manifest_a = synth::synthesize_dataset(spec, 7, (a.path / "out").string());
    const auto manifest_b = synth::synthesize_dataset(spec, 7, (b.path / "out").string());

    CHECK(slurp(manifest_a) == slurp(manifest_b));
    auto loaded = data::load_manifest(manifest_a);
    for (const auto& entry : loaded.entries) {
        const auto rel = fs::relative(entry.path, a.path / "out");
        CHECK(slurp(entry.path) == slurp(b.path / "out" / rel));
    }

    TempDir c;
    const auto manifest_c = synth::synthesize_dataset(spec, 8, (c.path / "out").string());
    const bool seed_changes_content =
        slurp(manifest_a) != slurp(manifest_c) ||
        slurp(loaded.entries[0].path) !=
            slurp(c.path / "out" / fs::relative(loaded.entries[0].path, a.path / "out"));
    CHECK(seed_changes_content);
}

TEST_CASE("dataset shape follows the dog roster and trot policy") {
    TempDir dir;
    auto spec = small_spec();  // 2 healthy, 1 orthopedic, 2 neurological, 1 trots
    const auto manifest_path = synth::synthesize_dataset(spec, 3, (dir.path / "out").string());
    auto manifest = data::load_manifest(manifest_path);

    // walk: all 5 dogs x 3 placements; trot: 4 dogs x 3 placements.
    CHECK(manifest.entries.size() == 15u + 12u);
    auto per_class = manifest.dogs_per_class();
    CHECK(per_class[static_cast<int>(ClassLabel::healthy)] == 2);
    CHECK(per_class[static_cast<int>(ClassLabel::orthopedic)] == 1);
    CHECK(per_class[static_cast<int>(ClassLabel::neurological)] == 2);

    int neuro_trot = 0, healthy_trot = 0;
    std::vector<std::string> neuro_trot_dogs;
    for (const auto& e : manifest.entries) {
        if (e.protocol != Protocol::trot) continue;
        if (e.class_label == ClassLabel::neurological) {
            ++neuro_trot;
            neuro_trot_dogs.push_back(e.dog_id);
        }
        if (e.class_label == ClassLabel::healthy) ++healthy_trot;
    }
    CHECK(neuro_trot == 3);  // one tolerant dog, three placements
    CHECK(healthy_trot == 6);
    for (const auto& id : neuro_trot_dogs) CHECK(id == "dog04");

    // Every referenced file parses as a recording on the 120 Hz grid.
    for (const auto& e : manifest.entries) {
        auto rec = data::load_recording(e);
        CHECK(rec.samples.length > 0);
    }
}

TEST_CASE("default roster matches the study population") {
    synth::SynthSpec spec;
    CHECK(spec.healthy_dogs == 17);
    CHECK(spec.orthopedic_dogs == 6);
    CHECK(spec.neurological_dogs == 6);
    CHECK(synth::total_dogs(spec) == 29);
}

TEST_CASE("make_recording is deterministic and varies by dog and placement") {
    const auto spec = small_spec();
    auto a = synth::make_recording(spec, 5, 0, Placement::tail, Protocol::walk);
    auto b = synth::make_recording(spec, 5, 0, Placement::tail, Protocol::walk);
    CHECK(a.samples.values == b.samples.values);

    auto other_dog = synth::make_recording(spec, 5, 1, Placement::tail, Protocol::walk);
    CHECK(a.samples.values != other_dog.samples.values);
    auto other_placement = synth::make_recording(spec, 5, 0, Placement::head, Protocol::walk);
    CHECK(a.samples.values != other_placement.samples.values);
    auto other_seed = synth::make_recording(spec, 6, 0, Placement::tail, Protocol::walk);
    CHECK(a.samples.values != other_seed.samples.values);
}

TEST_CASE("still padding carries the datasheet noise floor") {
    auto spec = small_spec();
    spec.still_min_s = 2.0;
    spec.still_max_s = 2.0;  // lead pad is exactly 240 samples
    auto rec = synth::make_recording(spec, 11, 0, Placement::tail, Protocol::walk);

    const double accel_sigma = spec.accel_noise_density * std::sqrt(spec.sample_rate / 2.0);
    const double gyro_sigma = spec.gyro_noise_density * std::sqrt(spec.sample_rate / 2.0);
    const double fx_std = channel_std(rec.samples, 0, 0, 200);
    const double wx_std = channel_std(rec.samples, 3, 0, 200);
    CHECK(fx_std > 0.7 * accel_sigma);
    CHECK(fx_std < 1.3 * accel_sigma);
    CHECK(wx_std > 0.7 * gyro_sigma);
    CHECK(wx_std < 1.3 * gyro_sigma);

    // Gravity stays on the vertical channel while still.
    double fz_mean = 0.0;
    for (int t = 0; t < 200; ++t) fz_mean += rec.samples.at(2, t);
    CHECK(fz_mean / 200 == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("walk and trot land in their stride-rate bands") {
    auto spec = small_spec();
    for (double& d : spec.walk_mean_s) d = 10.0;
    for (double& d : spec.trot_mean_s) d = 10.0;
    for (int dog : {0, 1, 2, 3}) {
        auto walk = synth::make_recording(spec, 13, dog, Placement::tail, Protocol::walk);
        auto trot = synth::make_recording(spec, 13, dog, Placement::tail, Protocol::trot);
        const double f_walk = estimate_stride_hz(steady_core(walk), spec.sample_rate);
        const double f_trot = estimate_stride_hz(steady_core(trot), spec.sample_rate);
        CHECK(f_walk > 1.0);
        CHECK(f_walk < 2.0);
        CHECK(f_trot > 2.0);
        CHECK(f_trot < 3.1);
    }
}

TEST_CASE("placement changes the gait amplitude but not the pass length") {
    auto spec = small_spec();
    for (double& d : spec.walk_mean_s) d = 10.0;
    auto tail = synth::make_recording(spec, 17, 0, Placement::tail, Protocol::walk);
    auto head = synth::make_recording(spec, 17, 0, Placement::head, Protocol::walk);
    const auto tail_core = steady_core(tail);
    const auto head_core = steady_core(head);
    const double ratio = channel_std(head_core, 2, 0, head_core.length) /
                         channel_std(tail_core, 2, 0, tail_core.length);
    CHECK(ratio > 0.55);
    CHECK(ratio < 0.95);  // head gain 0.75 of tail
}

TEST_CASE("orthopedic gait shows stride-rate asymmetry energy healthy gait lacks") {
    auto spec = small_spec();
    spec.healthy_dogs = 6;
    spec.orthopedic_dogs = 6;
    spec.neurological_dogs = 0;
    spec.neurological_trot_dogs = 0;
    for (double& d : spec.walk_mean_s) d = 12.0;

    double healthy_mean = 0.0, ortho_mean = 0.0;
    for (int dog = 0; dog < 6; ++dog) {
        healthy_mean +=
            asymmetry_score(synth::make_recording(spec, 19, dog, Placement::tail, Protocol::walk));
        ortho_mean += asymmetry_score(
            synth::make_recording(spec, 19, 6 + dog, Placement::tail, Protocol::walk));
    }
    healthy_mean /= 6;
    ortho_mean /= 6;
    CHECK(ortho_mean > 3.0 * healthy_mean);
}

TEST_CASE("neurological gait is more variable stride to stride than healthy gait") {
    auto spec = small_spec();
    spec.healthy_dogs = 6;
    spec.orthopedic_dogs = 0;
    spec.neurological_dogs = 6;
    spec.neurological_trot_dogs = 0;
    for (double& d : spec.walk_mean_s) d = 12.0;

    double healthy_mean = 0.0, neuro_mean = 0.0;
    for (int dog = 0; dog < 6; ++dog) {
        healthy_mean += variability_score(
            synth::make_recording(spec, 23, dog, Placement::tail, Protocol::walk));
        neuro_mean += variability_score(
            synth::make_recording(spec, 23, 6 + dog, Placement::tail, Protocol::walk));
    }
    healthy_mean /= 6;
    neuro_mean /= 6;
    CHECK(neuro_mean > 2.0 * healthy_mean);
}

TEST_CASE("spec file loading keeps defaults for missing keys and rejects unknown ones") {
    TempDir dir;
    const auto p = dir.path / "spec.json";
    {
        std::ofstream out(p);
        out << R"({"healthy_dogs": 3, "walk_mean_s": [5, 6, 7], "duration_jitter": 0.05})";
    }
    auto spec = synth::load_spec(p.string());
    CHECK(spec.healthy_dogs == 3);
    CHECK(spec.orthopedic_dogs == 6);  // default kept
    CHECK(spec.walk_mean_s[0] == 5.0);
    CHECK(spec.walk_mean_s[2] == 7.0);
    CHECK(spec.duration_jitter == 0.05);

    {
        std::ofstream out(p);
        out << R"({"healthy_dogs": 3, "dog_size": "large"})";
    }
    CHECK_THROWS_AS(synth::load_spec(p.string()), SchemaError);

    {
        std::ofstream out(p);
        out << R"({"walk_mean_s": [5, 6]})";
    }
    CHECK_THROWS_AS(synth::load_spec(p.string()), SchemaError);

    {
        std::ofstream out(p);
        out << "not json";
    }
    CHECK_THROWS_AS(synth::load_spec(p.string()), ParseError);

    CHECK_THROWS_AS(synth::load_spec((dir.path / "missing.json").string()), InputError);
}

TEST_CASE("spec validation rejects impossible rosters") {
    synth::SynthSpec spec;
    spec.healthy_dogs = 0;
    spec.orthopedic_dogs = 0;
    spec.neurological_dogs = 0;
    spec.neurological_trot_dogs = 0;
    CHECK_THROWS_AS(synth::validate(spec), ConfigError);

    spec = synth::SynthSpec{};
    spec.neurological_trot_dogs = spec.neurological_dogs + 1;
    CHECK_THROWS_AS(synth::validate(spec), ConfigError);

    spec = synth::SynthSpec{};
    spec.walk_mean_s[1] = 0.0;
    CHECK_THROWS_AS(synth::validate(spec), ConfigError);

    spec = synth::SynthSpec{};
    spec.still_max_s = spec.still_min_s - 0.5;
    CHECK_THROWS_AS(synth::validate(spec), ConfigError);

    spec = synth::SynthSpec{};
    spec.sample_rate = 0.0;
    CHECK_THROWS_AS(synth::validate(spec), ConfigError);
}

TEST_CASE("make_recording rejects a dog index outside the roster") {
    const auto spec = small_spec();
    CHECK_THROWS_AS(synth::make_recording(spec, 1, 99, Placement::tail, Protocol::walk),
                    InputError);
    CHECK_THROWS_AS(synth::make_recording(spec, 1, -1, Placement::tail, Protocol::walk),
                    InputError);
}
