#include "gaitnet/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include <json.hpp>

#include "gaitnet/error.hpp"
#include "gaitnet/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gaitnet::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ClassLabel class_of_dog(const SynthSpec& spec, int dog_index) {
    if (dog_index < spec.healthy_dogs) return ClassLabel::healthy;
    if (dog_index < spec.healthy_dogs + spec.orthopedic_dogs) return ClassLabel::orthopedic;
    return ClassLabel::neurological;
}

// Only the first neurological_trot_dogs neurological dogs tolerate the trot
// protocol; everyone else has both protocols.
bool has_trot(const SynthSpec& spec, int dog_index) {
    if (class_of_dog(spec, dog_index) != ClassLabel::neurological) return true;
    const int within = dog_index - spec.healthy_dogs - spec.orthopedic_dogs;
    return within < spec.neurological_trot_dogs;
}

struct DogTraits {
    double stride_hz[2];   // walk, trot
    double amp_v[2];       // vertical accel amplitude (g)
    double gyro_amp[2];    // roll rate amplitude (deg/s)
    double fore_ratio;
    double lat_ratio;
    double h2;             // second harmonic weight
    double ph[7];          // fixed per-dog phase offsets
    double asym;           // alternating half-cycle amplitude asymmetry
    double jitter_sigma;   // phase irregularity (rad, OU step)
    double step_amp_lo;    // per-step amplitude range
    double step_amp_hi;
    double wobble_amp;     // broadband overlay (g)
};

std::uint64_t dog_tag(std::uint64_t seed, int dog_index) {
    return splitmix64(seed ^ splitmix64(0x900Dull + static_cast<std::uint64_t>(dog_index)));
}

DogTraits draw_traits(const SynthSpec& spec, std::uint64_t seed, int dog_index) {
    Rng rng(dog_tag(seed, dog_index));
    DogTraits t{};
    t.stride_hz[0] = rng.uniform(1.2, 1.8);
    t.stride_hz[1] = rng.uniform(2.2, 2.8);
    t.amp_v[0] = rng.uniform(0.25, 0.45);
    t.amp_v[1] = rng.uniform(0.5, 0.8);
    t.gyro_amp[0] = rng.uniform(20.0, 40.0);
    t.gyro_amp[1] = rng.uniform(35.0, 60.0);
    t.fore_ratio = rng.uniform(0.4, 0.6);
    t.lat_ratio = rng.uniform(0.3, 0.5);
    t.h2 = rng.uniform(0.2, 0.4);
    for (double& p : t.ph) p = rng.uniform(0.0, kTwoPi);
    t.step_amp_lo = 1.0;
    t.step_amp_hi = 1.0;
    switch (class_of_dog(spec, dog_index)) {
        case ClassLabel::healthy:
            t.asym = rng.uniform(0.0, 0.06);
            break;
        case ClassLabel::orthopedic:
            t.asym = rng.uniform(0.3, 0.6);
            break;
        case ClassLabel::neurological:
            t.asym = rng.uniform(0.0, 0.06);
            t.jitter_sigma = rng.uniform(0.04, 0.09);
            t.step_amp_lo = 0.6;
            t.step_amp_hi = 1.4;
            t.wobble_amp = rng.uniform(0.06, 0.15);
            break;
    }
    return t;
}

double placement_gain(Placement p) {
    switch (p) {
        case Placement::head: return 0.75;
        case Placement::tail: return 1.0;
        case Placement::neck: return 0.85;
    }
    return 1.0;
}

double placement_phase(Placement p) {
    switch (p) {
        case Placement::head: return 0.0;
        case Placement::tail: return std::numbers::pi / 6.0;
        case Placement::neck: return std::numbers::pi / 3.0;
    }
    return 0.0;
}

// Active duration is a property of (dog, protocol): the three sensors record
// the same pass over the walkway.
double active_duration_s(const SynthSpec& spec, std::uint64_t seed, int dog_index,
                         Protocol protocol) {
    const int cls = static_cast<int>(class_of_dog(spec, dog_index));
    const double mean =
        protocol == Protocol::walk ? spec.walk_mean_s[cls] : spec.trot_mean_s[cls];
    Rng rng(splitmix64(dog_tag(seed, dog_index) ^
                       (0xD0ull + static_cast<std::uint64_t>(protocol))));
    return mean * (1.0 + spec.duration_jitter * (2.0 * rng.uniform() - 1.0));
}

}  // namespace

void validate(const SynthSpec& spec) {
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError("synth spec: " + msg);
    };
    need(spec.healthy_dogs >= 0 && spec.orthopedic_dogs >= 0 && spec.neurological_dogs >= 0,
         "dog counts must be non-negative");
    need(total_dogs(spec) >= 1, "at least one dog required");
    need(spec.neurological_trot_dogs >= 0 &&
             spec.neurological_trot_dogs <= spec.neurological_dogs,
         "neurological_trot_dogs must be within the neurological class");
    for (int c = 0; c < 3; ++c)
        need(spec.walk_mean_s[c] > 0.0 && spec.trot_mean_s[c] > 0.0,
             "durations must be positive");
    need(spec.duration_jitter >= 0.0 && spec.duration_jitter < 1.0,
         "duration_jitter must be in [0, 1)");
    need(spec.still_min_s >= 0.0 && spec.still_max_s >= spec.still_min_s,
         "still segment bounds out of order");
    need(spec.sample_rate > 0.0, "sample_rate must be positive");
    need(spec.accel_noise_density >= 0.0 && spec.gyro_noise_density >= 0.0 &&
             spec.accel_bias_g >= 0.0 && spec.gyro_bias_dph >= 0.0,
         "noise magnitudes must be non-negative");
}

int total_dogs(const SynthSpec& spec) {
    return spec.healthy_dogs + spec.orthopedic_dogs + spec.neurological_dogs;
}

SynthSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("synth spec: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("synth spec: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("synth spec: top level must be an object");

    SynthSpec spec;
    auto get_int = [&](const char* key, int& field) {
        if (j.contains(key)) field = j.at(key).get<int>();
    };
    auto get_double = [&](const char* key, double& field) {
        if (j.contains(key)) field = j.at(key).get<double>();
    };
    auto get_triple = [&](const char* key, double (&field)[3]) {
        if (!j.contains(key)) return;
        const auto& arr = j.at(key);
        if (!arr.is_array() || arr.size() != 3)
            throw SchemaError(std::string("synth spec: ") + key +
                              " must be a 3-element array (healthy, orthopedic, neurological)");
        for (int c = 0; c < 3; ++c) field[c] = arr.at(c).get<double>();
    };
    const char* known[] = {"healthy_dogs",       "orthopedic_dogs",
                           "neurological_dogs",  "neurological_trot_dogs",
                           "walk_mean_s",        "trot_mean_s",
                           "duration_jitter",    "still_min_s",
                           "still_max_s",        "sample_rate",
                           "accel_noise_density", "gyro_noise_density",
                           "accel_bias_g",       "gyro_bias_dph"};
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw SchemaError("synth spec: unknown key '" + key + "'");
    }
    get_int("healthy_dogs", spec.healthy_dogs);
    get_int("orthopedic_dogs", spec.orthopedic_dogs);
    get_int("neurological_dogs", spec.neurological_dogs);
    get_int("neurological_trot_dogs", spec.neurological_trot_dogs);
    get_triple("walk_mean_s", spec.walk_mean_s);
    get_triple("trot_mean_s", spec.trot_mean_s);
    get_double("duration_jitter", spec.duration_jitter);
    get_double("still_min_s", spec.still_min_s);
    get_double("still_max_s", spec.still_max_s);
    get_double("sample_rate", spec.sample_rate);
    get_double("accel_noise_density", spec.accel_noise_density);
    get_double("gyro_noise_density", spec.gyro_noise_density);
    get_double("accel_bias_g", spec.accel_bias_g);
    get_double("gyro_bias_dph", spec.gyro_bias_dph);
    validate(spec);
    return spec;
}

ImuRecording make_recording(const SynthSpec& spec, std::uint64_t seed, int dog_index,
                            Placement placement, Protocol protocol) {
    validate(spec);
    if (dog_index < 0 || dog_index >= total_dogs(spec))
        throw InputError("make_recording: dog index " + std::to_string(dog_index) +
                         " outside the spec's " + std::to_string(total_dogs(spec)) + " dogs");

    const DogTraits traits = draw_traits(spec, seed, dog_index);
    const ClassLabel cls = class_of_dog(spec, dog_index);
    const int proto = static_cast<int>(protocol);
    const double rate = spec.sample_rate;
    const double dt = 1.0 / rate;

    Rng rng(splitmix64(dog_tag(seed, dog_index) ^
                       splitmix64(0x50ull + static_cast<std::uint64_t>(placement) * 2 +
                                  static_cast<std::uint64_t>(protocol))));

    const long n_lead = std::lround(rng.uniform(spec.still_min_s, spec.still_max_s) * rate);
    const long n_trail = std::lround(rng.uniform(spec.still_min_s, spec.still_max_s) * rate);
    const long n_active =
        std::lround(active_duration_s(spec, seed, dog_index, protocol) * rate);
    const long n = n_lead + n_active + n_trail;

    // Sensor imperfections per the device datasheet: white noise from the
    // densities over the Nyquist band, a small constant bias per axis.
    const double accel_sigma = spec.accel_noise_density * std::sqrt(rate / 2.0);
    const double gyro_sigma = spec.gyro_noise_density * std::sqrt(rate / 2.0);
    const double gyro_bias_dps = spec.gyro_bias_dph / 3600.0;
    double accel_bias[3], gyro_bias[3];
    for (double& b : accel_bias) b = rng.uniform(-spec.accel_bias_g, spec.accel_bias_g);
    for (double& b : gyro_bias) b = rng.uniform(-gyro_bias_dps, gyro_bias_dps);

    const double pgain = placement_gain(placement);
    const double pphase = placement_phase(placement);
    const double amp_v = traits.amp_v[proto];
    const double gyro_amp = traits.gyro_amp[proto];
    const double freq = traits.stride_hz[proto];
    const double ramp = 0.5 * rate;  // amplitude ramp at the span edges

    ImuRecording rec;
    rec.dog_id = "";  // filled by the caller (synthesize_dataset / tests)
    rec.class_label = cls;
    rec.placement = placement;
    rec.protocol = protocol;
    rec.sample_rate = rate;
    rec.samples = FeatureMap(6, static_cast<int>(n));

    double phase = 0.0;
    double jitter = 0.0;
    double wobble = 0.0;
    long last_step = -1;
    double step_amp = 1.0;

    for (long i = 0; i < n; ++i) {
        double sig[6] = {0.0, 0.0, 1.0, 0.0, 0.0, 0.0};  // gravity on fz at rest
        const bool in_active = i >= n_lead && i < n_lead + n_active;
        if (in_active) {
            const long a = i - n_lead;
            const double env = std::min(
                1.0, std::min(static_cast<double>(a) / ramp,
                              static_cast<double>(n_active - 1 - a) / ramp));
            phase += kTwoPi * freq * dt;
            if (cls == ClassLabel::neurological)
                jitter = 0.99 * jitter + traits.jitter_sigma * rng.gaussian();
            const double ph = phase + jitter;

            // Per-step amplitude: one draw each half stride cycle.
            const long step = static_cast<long>(std::floor(phase / std::numbers::pi));
            if (cls == ClassLabel::neurological && step != last_step) {
                step_amp = rng.uniform(traits.step_amp_lo, traits.step_amp_hi);
                last_step = step;
            }
            if (cls == ClassLabel::neurological)
                wobble = 0.95 * wobble + 0.32 * traits.wobble_amp * rng.gaussian();

            // Half-cycle asymmetry: a smoothed square wave at stride rate
            // makes alternating steps stronger and weaker.
            const double m =
                (1.0 + traits.asym * std::tanh(std::sin(ph) / 0.25)) * step_amp;
            const double A = pgain * env * m * amp_v;
            const double G = pgain * env * m * gyro_amp;
            const double gyro_wob = wobble * (gyro_amp / amp_v) * 0.5;

            sig[0] = traits.fore_ratio * A * std::sin(2.0 * ph + traits.ph[0] + pphase) +
                     0.5 * wobble;
            sig[1] = traits.lat_ratio * A * std::sin(ph + traits.ph[1] + pphase) +
                     0.5 * wobble;
            sig[2] = 1.0 + A * (std::sin(2.0 * ph + traits.ph[2] + pphase) +
                                traits.h2 * std::sin(4.0 * ph + traits.ph[3] + pphase)) +
                     wobble;
            sig[3] = G * std::sin(ph + traits.ph[4] + pphase) + gyro_wob;
            sig[4] = 0.7 * G * std::sin(2.0 * ph + traits.ph[5] + pphase) + gyro_wob;
            sig[5] = 0.5 * G * std::sin(ph + traits.ph[6] + pphase) + 0.5 * gyro_wob;
        }
        for (int c = 0; c < 3; ++c)
            rec.samples.at(c, static_cast<int>(i)) =
                sig[c] + accel_bias[c] + accel_sigma * rng.gaussian();
        for (int c = 0; c < 3; ++c)
            rec.samples.at(c + 3, static_cast<int>(i)) =
                sig[c + 3] + gyro_bias[c] + gyro_sigma * rng.gaussian();
    }
    return rec;
}

namespace {

void write_recording_csv(const ImuRecording& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("synth: cannot write " + path);
    out << "t,fx,fy,fz,wx,wy,wz\n";
    char buf[160];
    for (int i = 0; i < rec.samples.length; ++i) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                      static_cast<double>(i) / rec.sample_rate, rec.samples.at(0, i),
                      rec.samples.at(1, i), rec.samples.at(2, i), rec.samples.at(3, i),
                      rec.samples.at(4, i), rec.samples.at(5, i));
        out << buf;
    }
    if (!out) throw InputError("synth: write to " + path + " failed");
}

std::string dog_name(int dog_index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "dog%02d", dog_index + 1);
    return buf;
}

}  // namespace

std::string synthesize_dataset(const SynthSpec& spec, std::uint64_t seed,
                               const std::string& out_dir) {
    validate(spec);
    const fs::path root(out_dir);
    std::error_code ec;
    fs::create_directories(root / "recordings", ec);
    if (ec) throw InputError("synth: cannot create " + (root / "recordings").string());

    const std::string manifest_path = (root / "manifest.csv").string();
    std::ofstream manifest(manifest_path);
    if (!manifest) throw InputError("synth: cannot write " + manifest_path);
    manifest << "dog_id,class,placement,protocol,path\n";

    for (int dog = 0; dog < total_dogs(spec); ++dog) {
        const std::string id = dog_name(dog);
        for (Placement placement : {Placement::head, Placement::tail, Placement::neck}) {
            for (Protocol protocol : {Protocol::walk, Protocol::trot}) {
                if (protocol == Protocol::trot && !has_trot(spec, dog)) continue;
                ImuRecording rec = make_recording(spec, seed, dog, placement, protocol);
                rec.dog_id = id;
                const std::string rel = "recordings/" + id + "_" + to_string(placement) +
                                        "_" + to_string(protocol) + ".csv";
                write_recording_csv(rec, (root / rel).string());
                manifest << id << ',' << to_string(rec.class_label) << ','
                         << to_string(placement) << ',' << to_string(protocol) << ',' << rel
                         << '\n';
            }
        }
    }
    if (!manifest) throw InputError("synth: write to " + manifest_path + " failed");
    return manifest_path;
}

}  // namespace gaitnet::synth
