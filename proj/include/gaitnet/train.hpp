#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gaitnet/data.hpp"
#include "gaitnet/model.hpp"
#include "gaitnet/tensor.hpp"

namespace gaitnet {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

// Moments shape-matched to the model, one shared step counter.
struct AdamState {
    AdamConfig config;
    std::vector<LayerGrad> m;
    std::vector<LayerGrad> v;
    long t = 0;
};

struct TrainConfig {
    int epochs = 60;
    int restarts = 60;
    int batch_size = 32;
    std::uint64_t seed = 0;
    double validation_fraction = 0.15;  // carved from training windows
    double test_fraction = 0.2;         // random-split regime
    bool augment = false;
    double augment_angle_deg = 15.0;
    AdamConfig adam;
};

struct EvalReport {
    std::string task;
    std::string placement;  // head | tail | neck | all
    std::string protocol;
    std::string regime;     // random | loo
    double accuracy = 0.0;
    double f1 = 0.0;  // macro
    double f1_micro = 0.0;
    double f1_weighted = 0.0;
    std::vector<std::string> class_names;
    std::vector<std::vector<long>> confusion;  // rows = ground truth
    long train_windows = 0;
    long test_windows = 0;

    struct Fold {
        std::string dog_id;
        double accuracy = 0.0;
        double f1 = 0.0;
        long test_windows = 0;
        bool diverged = false;
    };
    std::vector<Fold> folds;  // LOO only
    std::vector<std::string> notes;
};

namespace train {

AdamState make_adam_state(const ModelParams& params, const AdamConfig& config);

// Decoupled weight decay, then the bias-corrected Adam update; the step
// counter advances once per call for all tensors. Throws ConfigError on
// shape mismatch.
void adam_step(ModelParams& params, const GradientSet& grads, AdamState& state);

struct TrainRun {
    ModelParams params;
    std::vector<double> curve;  // per-epoch mean training loss
};

// Shuffled mini-batch NLL minimization. Throws InputError when the train
// set is empty or misses a class, DivergenceError (naming the epoch) when
// the loss goes non-finite.
TrainRun train_once(const std::vector<LabeledWindow>& train, const GaitNetConfig& model_config,
                    const TrainConfig& config, std::uint64_t seed);

// Stratified carve of a validation share out of a training set.
void carve_validation(std::vector<LabeledWindow>& train, std::vector<LabeledWindow>& validation,
                      int num_classes, double fraction, std::uint64_t seed);

struct RestartResult {
    ModelParams params;
    int restart = 0;             // winning restart index
    double val_accuracy = 0.0;
    std::vector<std::string> notes;
};

// config.restarts independent seeded runs; the winner maximizes validation
// accuracy, ties toward the lower restart index. Runs that diverge are
// recorded and skipped; if all diverge the last DivergenceError propagates.
RestartResult train_with_restarts(const std::vector<LabeledWindow>& train,
                                  const std::vector<LabeledWindow>& validation,
                                  const GaitNetConfig& model_config, const TrainConfig& config);

// Pure metric arithmetic, shared with the brute-force metric tests.
std::vector<std::vector<long>> confusion_matrix(const std::vector<int>& truth,
                                                const std::vector<int>& predictions,
                                                int num_classes);

struct Metrics {
    double accuracy = 0.0;
    double f1_macro = 0.0;
    double f1_micro = 0.0;
    double f1_weighted = 0.0;
};

Metrics compute_metrics(const std::vector<std::vector<long>>& confusion);

// Window-level predictions on the test set. Throws InputError when empty.
EvalReport evaluate(const ModelParams& params, const std::vector<LabeledWindow>& test,
                    const TaskSpec& task);

// One experiment cell: what to select, how to train, which architecture.
struct ExperimentConfig {
    data::PipelineConfig pipeline;
    GaitNetConfig model;  // num_classes is forced from pipeline.task
    TrainConfig train;
};

struct RandomSplitResult {
    EvalReport report;
    ModelParams params;
};

// Stratified random split, restart training, test-set evaluation.
RandomSplitResult run_random_split(const DatasetManifest& manifest,
                                   const ExperimentConfig& config);

// One fold per eligible dog: restart training on the other dogs, evaluation
// on the held-out dog. Aggregate accuracy/F1 are unweighted fold means;
// confusion matrices are summed. Diverged folds are flagged and excluded
// from the means.
EvalReport run_loo(const DatasetManifest& manifest, const ExperimentConfig& config);

struct MatrixResult {
    std::vector<EvalReport> reports;
    std::vector<std::string> log;  // skipped cells and why
};

// Cross product of tasks x placements x protocols x regimes; empty cells
// are skipped with a log entry. nullopt placement = pooled "all".
MatrixResult run_matrix(const DatasetManifest& manifest, const ExperimentConfig& base,
                        const std::vector<Task>& tasks,
                        const std::vector<std::optional<Placement>>& placements,
                        const std::vector<Protocol>& protocols,
                        const std::vector<std::string>& regimes);

}  // namespace train
}  // namespace gaitnet
