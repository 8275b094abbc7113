#pragma once

#include <cstdint>
#include <string>

#include "gaitnet/data.hpp"

namespace gaitnet::synth {

// Generator parameters. Defaults mirror the study population (17/6/6 dogs,
// three sensor placements, walk for everyone, trot scarce for neurological
// dogs) and the Movella DOT noise figures from its spec sheet.
struct SynthSpec {
    int healthy_dogs = 17;
    int orthopedic_dogs = 6;
    int neurological_dogs = 6;
    int neurological_trot_dogs = 2;

    // Mean active duration in seconds, indexed by ClassLabel.
    double walk_mean_s[3] = {27.0, 33.0, 40.0};
    double trot_mean_s[3] = {18.0, 18.0, 15.0};
    double duration_jitter = 0.15;  // relative, uniform

    double still_min_s = 1.0;  // still padding before and after the gait
    double still_max_s = 3.0;

    double sample_rate = 120.0;
    double accel_noise_density = 120e-6;  // g / sqrt(Hz)
    double gyro_noise_density = 0.007;    // (deg/s) / sqrt(Hz)
    double accel_bias_g = 0.03e-3;        // g
    double gyro_bias_dph = 10.0;          // deg / h
};

// JSON file with any subset of the SynthSpec keys; missing keys keep their
// defaults. Throws ParseError / SchemaError on malformed content.
SynthSpec load_spec(const std::string& path);

// Throws ConfigError (zero dogs, non-positive durations or rates, trot
// subset larger than the class).
void validate(const SynthSpec& spec);

int total_dogs(const SynthSpec& spec);

// Generates one recording in memory (used by synthesize_dataset and by
// tests that want traces without disk I/O).
ImuRecording make_recording(const SynthSpec& spec, std::uint64_t seed, int dog_index,
                            Placement placement, Protocol protocol);

// Writes recordings/*.csv and manifest.csv under out_dir; returns the
// manifest path. Identical (spec, seed) produce byte-identical trees.
std::string synthesize_dataset(const SynthSpec& spec, std::uint64_t seed,
                               const std::string& out_dir);

}  // namespace gaitnet::synth
