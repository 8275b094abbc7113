#include "gaitnet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <string>

#include "gaitnet/error.hpp"
#include "gaitnet/rng.hpp"

namespace fs = std::filesystem;

namespace gaitnet {

std::string to_string(ClassLabel v) {
    switch (v) {
        case ClassLabel::healthy: return "healthy";
        case ClassLabel::orthopedic: return "orthopedic";
        case ClassLabel::neurological: return "neurological";
    }
    return "?";
}

std::string to_string(Placement v) {
    switch (v) {
        case Placement::head: return "head";
        case Placement::tail: return "tail";
        case Placement::neck: return "neck";
    }
    return "?";
}

std::string to_string(Protocol v) {
    return v == Protocol::walk ? "walk" : "trot";
}

std::string to_string(Task v) {
    switch (v) {
        case Task::multi: return "multi";
        case Task::binary: return "binary";
        case Task::diagnosis: return "diagnosis";
    }
    return "?";
}

ClassLabel parse_class_label(const std::string& s) {
    if (s == "healthy") return ClassLabel::healthy;
    if (s == "orthopedic") return ClassLabel::orthopedic;
    if (s == "neurological") return ClassLabel::neurological;
    throw ParseError("unknown class label '" + s + "'");
}

Placement parse_placement(const std::string& s) {
    if (s == "head") return Placement::head;
    if (s == "tail") return Placement::tail;
    if (s == "neck") return Placement::neck;
    throw ParseError("unknown placement '" + s + "'");
}

Protocol parse_protocol(const std::string& s) {
    if (s == "walk") return Protocol::walk;
    if (s == "trot") return Protocol::trot;
    throw ParseError("unknown protocol '" + s + "'");
}

Task parse_task(const std::string& s) {
    if (s == "multi") return Task::multi;
    if (s == "binary") return Task::binary;
    if (s == "diagnosis") return Task::diagnosis;
    throw ParseError("unknown task '" + s + "'");
}

std::vector<int> DatasetManifest::dogs_per_class() const {
    std::vector<int> counts(3, 0);
    std::map<std::string, ClassLabel> seen;
    for (const auto& e : entries) {
        if (seen.emplace(e.dog_id, e.class_label).second)
            ++counts[static_cast<int>(e.class_label)];
    }
    return counts;
}

std::vector<std::string> DatasetManifest::dog_ids() const {
    std::vector<std::string> ids;
    for (const auto& e : entries)
        if (std::find(ids.begin(), ids.end(), e.dog_id) == ids.end()) ids.push_back(e.dog_id);
    return ids;
}

int TaskSpec::num_classes() const { return task == Task::multi ? 3 : 2; }

std::optional<int> TaskSpec::label_for(ClassLabel c) const {
    switch (task) {
        case Task::multi: return static_cast<int>(c);
        case Task::binary: return c == ClassLabel::healthy ? 0 : 1;
        case Task::diagnosis:
            if (c == ClassLabel::healthy) return std::nullopt;
            return c == ClassLabel::orthopedic ? 0 : 1;
    }
    return std::nullopt;
}

std::string TaskSpec::class_name(int label) const {
    switch (task) {
        case Task::multi:
            return to_string(static_cast<ClassLabel>(label));
        case Task::binary:
            return label == 0 ? "healthy" : "non_healthy";
        case Task::diagnosis:
            return label == 0 ? "orthopedic" : "neurological";
    }
    return "?";
}

namespace data {

namespace {

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_finite(const std::string& field, long line_no) {
    double v = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw ParseError("malformed number '" + field + "'", line_no);
    if (!std::isfinite(v)) throw ParseError("non-finite value '" + field + "'", line_no);
    return v;
}

constexpr const char* kRecordingHeader = "t,fx,fy,fz,wx,wy,wz";
constexpr const char* kManifestHeader = "dog_id,class,placement,protocol,path";

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("manifest: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || strip_cr(line).empty())
        throw SchemaError("manifest: empty file " + path);
    if (strip_cr(line) != kManifestHeader)
        throw SchemaError("manifest: expected header '" + std::string(kManifestHeader) + "'");

    const fs::path dir = fs::path(path).parent_path();
    DatasetManifest manifest;
    std::map<std::string, ClassLabel> dog_class;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 5)
            throw ParseError("manifest: expected 5 fields, got " + std::to_string(fields.size()),
                             line_no);
        ManifestEntry e;
        e.dog_id = fields[0];
        try {
            e.class_label = parse_class_label(fields[1]);
            e.placement = parse_placement(fields[2]);
            e.protocol = parse_protocol(fields[3]);
        } catch (const ParseError& err) {
            throw ParseError(std::string("manifest: ") + err.what(), line_no);
        }
        fs::path rec_path(fields[4]);
        if (rec_path.is_relative()) rec_path = dir / rec_path;
        e.path = rec_path.string();
        if (!fs::exists(rec_path))
            throw InputError("manifest: recording file not found: " + e.path);
        auto [it, inserted] = dog_class.emplace(e.dog_id, e.class_label);
        if (!inserted && it->second != e.class_label)
            throw SchemaError("manifest: dog " + e.dog_id + " listed under two classes");
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

ImuRecording load_recording(const ManifestEntry& entry) {
    std::ifstream in(entry.path);
    if (!in) throw InputError("recording: cannot open " + entry.path);
    std::string line;
    if (!std::getline(in, line) || strip_cr(line).empty())
        throw SchemaError("recording: empty file " + entry.path);
    if (strip_cr(line) != kRecordingHeader)
        throw SchemaError("recording: expected header '" + std::string(kRecordingHeader) +
                          "' in " + entry.path);

    std::vector<double> t;
    std::vector<double> channels[6];
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 7)
            throw ParseError("recording: expected 7 fields, got " +
                             std::to_string(fields.size()),
                             line_no);
        t.push_back(parse_finite(fields[0], line_no));
        for (int c = 0; c < 6; ++c) channels[c].push_back(parse_finite(fields[c + 1], line_no));
    }
    if (t.empty()) throw SchemaError("recording: no samples in " + entry.path);

    const double dt_nominal = 1.0 / 120.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double dt = t[i] - t[i - 1];
        if (std::abs(dt - dt_nominal) > 0.1 * dt_nominal)
            throw SchemaError("recording: timestamps not on the 120 Hz grid in " + entry.path +
                              " near row " + std::to_string(i + 1));
    }

    ImuRecording rec;
    rec.dog_id = entry.dog_id;
    rec.class_label = entry.class_label;
    rec.placement = entry.placement;
    rec.protocol = entry.protocol;
    rec.sample_rate = 120.0;
    rec.samples = FeatureMap(6, static_cast<int>(t.size()));
    for (int c = 0; c < 6; ++c)
        std::copy(channels[c].begin(), channels[c].end(), rec.samples.row(c));
    return rec;
}

std::optional<ImuRecording> trim_inactive(const ImuRecording& rec, double norm_threshold,
                                          int std_window, int min_active_run) {
    if (norm_threshold <= 0.0) throw ConfigError("trim_inactive: threshold must be positive");
    if (std_window < 1 || min_active_run < 1)
        throw ConfigError("trim_inactive: windows must be positive");

    const int n = rec.samples.length;
    if (n == 0) return std::nullopt;

    // Moving std of the accel norm via prefix sums.
    std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        const double fx = rec.samples.at(0, i);
        const double fy = rec.samples.at(1, i);
        const double fz = rec.samples.at(2, i);
        const double norm = std::sqrt(fx * fx + fy * fy + fz * fz);
        s1[i + 1] = s1[i] + norm;
        s2[i + 1] = s2[i] + norm * norm;
    }
    const int half = std_window / 2;
    std::vector<bool> active(n);
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - half);
        const int hi = std::min(n, i + std_window - half);
        const double cnt = hi - lo;
        const double mean = (s1[hi] - s1[lo]) / cnt;
        const double var = std::max(0.0, (s2[hi] - s2[lo]) / cnt - mean * mean);
        active[i] = std::sqrt(var) >= norm_threshold;
    }

    // First and last active runs of at least min_active_run samples.
    int first = -1, last = -1;
    int run_start = -1;
    for (int i = 0; i <= n; ++i) {
        const bool a = i < n && active[i];
        if (a && run_start < 0) run_start = i;
        if (!a && run_start >= 0) {
            if (i - run_start >= min_active_run) {
                if (first < 0) first = run_start;
                last = i;
            }
            run_start = -1;
        }
    }
    if (first < 0) return std::nullopt;

    ImuRecording out = rec;
    out.samples = FeatureMap(6, last - first);
    for (int c = 0; c < 6; ++c)
        std::copy_n(rec.samples.row(c) + first, last - first, out.samples.row(c));
    return out;
}

std::vector<LabeledWindow> window_series(const ImuRecording& rec, int window, int stride,
                                         const TaskSpec& task) {
    if (window < 1 || stride < 1) throw ConfigError("window_series: window and stride >= 1");
    const auto label = task.label_for(rec.class_label);
    if (!label)
        throw InputError("window_series: task " + to_string(task.task) + " drops class " +
                         to_string(rec.class_label));

    std::vector<LabeledWindow> out;
    const int n = rec.samples.length;
    if (n < window) return out;
    const int count = (n - window) / stride + 1;
    out.reserve(static_cast<std::size_t>(count));
    for (int w = 0; w < count; ++w) {
        const int start = w * stride;
        LabeledWindow lw;
        lw.features = FeatureMap(6, window);
        for (int c = 0; c < 6; ++c)
            std::copy_n(rec.samples.row(c) + start, window, lw.features.row(c));
        lw.label = *label;
        lw.provenance = {rec.dog_id, rec.placement, rec.protocol, start, false};
        out.push_back(std::move(lw));
    }
    return out;
}

void rotate_x_inplace(FeatureMap& samples, double angle_degrees) {
    if (samples.channels != 6)
        throw ConfigError("rotate_x: expected 6 channels, got " +
                          std::to_string(samples.channels));
    const double rad = angle_degrees * std::numbers::pi / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    for (int base : {1, 4}) {  // (fy, fz) and (wy, wz)
        double* y = samples.row(base);
        double* z = samples.row(base + 1);
        for (int i = 0; i < samples.length; ++i) {
            const double yi = y[i];
            const double zi = z[i];
            y[i] = c * yi - s * zi;
            z[i] = s * yi + c * zi;
        }
    }
}

LabeledWindow augment_rotate_x(const LabeledWindow& window, double angle_degrees) {
    LabeledWindow out = window;
    rotate_x_inplace(out.features, angle_degrees);
    out.provenance.augmented = true;
    return out;
}

std::vector<LabeledWindow> merge_placements(std::vector<std::vector<LabeledWindow>> groups) {
    std::vector<LabeledWindow> out;
    std::size_t total = 0;
    for (const auto& g : groups) total += g.size();
    out.reserve(total);
    for (auto& g : groups)
        for (auto& w : g) out.push_back(std::move(w));
    return out;
}

RandomSplit split_random(const std::vector<LabeledWindow>& windows, int num_classes,
                         double test_fraction, std::uint64_t seed) {
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
        throw ConfigError("split_random: test_fraction must be in (0, 1)");

    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const int label = windows[i].label;
        if (label < 0 || label >= num_classes)
            throw InputError("split_random: window label " + std::to_string(label) +
                             " outside " + std::to_string(num_classes) + " classes");
        by_class[static_cast<std::size_t>(label)].push_back(i);
    }

    RandomSplit split;
    Rng rng(seed);
    for (int k = 0; k < num_classes; ++k) {
        auto& idx = by_class[static_cast<std::size_t>(k)];
        if (idx.empty())
            throw InputError("split_random: class " + std::to_string(k) +
                             " has no windows to stratify");
        rng.shuffle(idx);
        const auto n_test = static_cast<std::size_t>(
            std::lround(test_fraction * static_cast<double>(idx.size())));
        if (n_test >= idx.size())
            throw InputError("split_random: class " + std::to_string(k) +
                             " would keep no training windows");
        split.test.insert(split.test.end(), idx.begin(), idx.begin() + n_test);
        split.train.insert(split.train.end(), idx.begin() + n_test, idx.end());
    }
    return split;
}

std::vector<LooFold> split_leave_one_dog_out(const DatasetManifest& manifest,
                                             const TaskSpec& task,
                                             const std::vector<LabeledWindow>& windows,
                                             std::vector<std::string>* log) {
    std::vector<std::string> eligible;
    for (const auto& e : manifest.entries) {
        if (!task.label_for(e.class_label)) continue;
        if (std::find(eligible.begin(), eligible.end(), e.dog_id) == eligible.end())
            eligible.push_back(e.dog_id);
    }
    if (eligible.size() < 2)
        throw InputError("leave-one-dog-out: need at least 2 eligible dogs, have " +
                         std::to_string(eligible.size()));

    std::vector<LooFold> folds;
    for (const auto& dog : eligible) {
        LooFold fold;
        fold.dog_id = dog;
        for (std::size_t i = 0; i < windows.size(); ++i) {
            if (windows[i].provenance.dog_id == dog)
                fold.test.push_back(i);
            else
                fold.train.push_back(i);
        }
        if (fold.test.empty()) {
            if (log != nullptr)
                log->push_back("leave-one-dog-out: dog " + dog +
                               " produced no windows, fold skipped");
            continue;
        }
        folds.push_back(std::move(fold));
    }
    return folds;
}

WindowSet build_windows(const DatasetManifest& manifest, const PipelineConfig& config) {
    WindowSet set;
    for (const auto& entry : manifest.entries) {
        if (!config.task.label_for(entry.class_label)) continue;
        if (config.placement && entry.placement != *config.placement) continue;
        if (entry.protocol != config.protocol) continue;

        const ImuRecording rec = load_recording(entry);
        const auto trimmed = trim_inactive(rec, config.trim_threshold, config.trim_std_window,
                                           config.min_active_run);
        if (!trimmed) {
            set.log.push_back("excluded " + entry.path + ": no activity above threshold");
            continue;
        }
        if (trimmed->samples.length < config.window) {
            set.log.push_back("excluded " + entry.path + ": " +
                              std::to_string(trimmed->samples.length) +
                              " samples after trimming, window needs " +
                              std::to_string(config.window));
            continue;
        }
        auto windows = window_series(*trimmed, config.window, config.stride, config.task);
        set.windows.insert(set.windows.end(), std::make_move_iterator(windows.begin()),
                           std::make_move_iterator(windows.end()));
    }
    return set;
}

}  // namespace data
}  // namespace gaitnet
