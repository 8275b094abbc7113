#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gaitnet/tensor.hpp"

namespace gaitnet {

enum class ClassLabel { healthy, orthopedic, neurological };
enum class Placement { head, tail, neck };
enum class Protocol { walk, trot };
enum class Task { multi, binary, diagnosis };

std::string to_string(ClassLabel v);
std::string to_string(Placement v);
std::string to_string(Protocol v);
std::string to_string(Task v);
ClassLabel parse_class_label(const std::string& s);
Placement parse_placement(const std::string& s);
Protocol parse_protocol(const std::string& s);
Task parse_task(const std::string& s);

// One sensor trace: 120 Hz, channels (fx, fy, fz) in g and (wx, wy, wz)
// in deg/s, stored channel-major.
struct ImuRecording {
    std::string dog_id;
    ClassLabel class_label = ClassLabel::healthy;
    Placement placement = Placement::head;
    Protocol protocol = Protocol::walk;
    double sample_rate = 120.0;
    FeatureMap samples;  // 6 x sample count
};

struct WindowProvenance {
    std::string dog_id;
    Placement placement = Placement::head;
    Protocol protocol = Protocol::walk;
    int start = 0;       // sample offset within the trimmed recording
    bool augmented = false;
};

struct LabeledWindow {
    FeatureMap features;  // 6 x window length
    int label = 0;        // task-relative class index
    WindowProvenance provenance;
};

struct ManifestEntry {
    std::string dog_id;
    ClassLabel class_label = ClassLabel::healthy;
    Placement placement = Placement::head;
    Protocol protocol = Protocol::walk;
    std::string path;  // resolved against the manifest's directory on load
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    // Distinct dogs per clinical class, indexed by ClassLabel.
    std::vector<int> dogs_per_class() const;
    // Distinct dog ids in first-appearance order, optionally class-filtered.
    std::vector<std::string> dog_ids() const;
};

// Maps clinical classes to task-relative indices.
//   multi:     healthy 0, orthopedic 1, neurological 2
//   binary:    healthy 0, {orthopedic, neurological} 1
//   diagnosis: orthopedic 0, neurological 1, healthy dropped
struct TaskSpec {
    Task task = Task::multi;

    int num_classes() const;
    std::optional<int> label_for(ClassLabel c) const;
    std::string class_name(int label) const;
};

namespace data {

// CSV with header `dog_id,class,placement,protocol,path`. Paths are
// resolved relative to the manifest file. Throws ParseError on bad rows,
// SchemaError on a bad header or a dog listed under two classes,
// InputError when a referenced file is missing.
DatasetManifest load_manifest(const std::string& path);

// CSV with header `t,fx,fy,fz,wx,wy,wz` at 120 Hz. Metadata comes from the
// manifest entry. Throws ParseError (with line) on malformed or non-finite
// rows, SchemaError on an empty file, a wrong header, or timestamps not on
// the 120 Hz grid.
ImuRecording load_recording(const ManifestEntry& entry);

// Drops leading and trailing spans where the centered moving standard
// deviation (std_window samples) of the accelerometer norm stays below
// norm_threshold; interior samples are untouched. Activity shorter than
// min_active_run samples does not count. Returns nullopt when nothing
// survives.
std::optional<ImuRecording> trim_inactive(const ImuRecording& rec, double norm_threshold = 0.05,
                                          int std_window = 60, int min_active_run = 30);

// Windows at offsets 0, stride, 2*stride, ...; count is
// floor((len - window)/stride) + 1, or zero when the recording is shorter
// than the window. Labels come from the task mapping; throws InputError
// when the task drops the recording's class.
std::vector<LabeledWindow> window_series(const ImuRecording& rec, int window, int stride,
                                         const TaskSpec& task);

// Rotates the (y, z) pairs of both the accel and gyro triples around the
// x axis; marks the window augmented.
LabeledWindow augment_rotate_x(const LabeledWindow& window, double angle_degrees);

// In-place x-axis rotation of a 6-channel map (used by augment_rotate_x;
// exposed so recordings can be rotated too).
void rotate_x_inplace(FeatureMap& samples, double angle_degrees);

// Pools per-placement window sets into one dataset; order is group order.
std::vector<LabeledWindow> merge_placements(std::vector<std::vector<LabeledWindow>> groups);

struct RandomSplit {
    std::vector<std::size_t> train;  // indices into the window vector
    std::vector<std::size_t> test;
};

// Stratified by task label: each class is shuffled with the seed and split
// at round(test_fraction * class size). Throws InputError when a class is
// missing from the input or would lose all training windows.
RandomSplit split_random(const std::vector<LabeledWindow>& windows, int num_classes,
                         double test_fraction, std::uint64_t seed);

struct LooFold {
    std::string dog_id;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// One fold per task-eligible dog in manifest order. Dogs that produced no
// windows are skipped with a note in log.
std::vector<LooFold> split_leave_one_dog_out(const DatasetManifest& manifest,
                                             const TaskSpec& task,
                                             const std::vector<LabeledWindow>& windows,
                                             std::vector<std::string>* log = nullptr);

struct PipelineConfig {
    TaskSpec task;
    std::optional<Placement> placement;  // nullopt pools all placements
    Protocol protocol = Protocol::walk;
    int window = 120;
    int stride = 5;
    double trim_threshold = 0.05;  // g
    int trim_std_window = 60;      // samples (0.5 s)
    int min_active_run = 30;       // samples
};

struct WindowSet {
    std::vector<LabeledWindow> windows;
    std::vector<std::string> log;  // recordings skipped and why
};

// Manifest -> filter by task/placement/protocol -> load -> trim -> window.
WindowSet build_windows(const DatasetManifest& manifest, const PipelineConfig& config);

}  // namespace data
}  // namespace gaitnet
