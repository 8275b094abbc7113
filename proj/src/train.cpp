#include "gaitnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gaitnet/error.hpp"
#include "gaitnet/kernels.hpp"
#include "gaitnet/rng.hpp"

namespace gaitnet::train {

namespace {

void scale_gradients(GradientSet& grads, double s) {
    for (auto& layer : grads.layers) {
        for (auto& w : layer.weights) w *= s;
        for (auto& b : layer.bias) b *= s;
    }
}

double validation_accuracy(const ModelParams& params,
                           const std::vector<LabeledWindow>& validation) {
    long hits = 0;
    for (const auto& w : validation)
        if (model::predict(params, w.features) == w.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(validation.size());
}

void check_class_presence(const std::vector<LabeledWindow>& windows, int num_classes,
                          const char* who) {
    std::vector<long> counts(static_cast<std::size_t>(num_classes), 0);
    for (const auto& w : windows) {
        if (w.label < 0 || w.label >= num_classes)
            throw InputError(std::string(who) + ": window label " + std::to_string(w.label) +
                             " outside " + std::to_string(num_classes) + " classes");
        ++counts[static_cast<std::size_t>(w.label)];
    }
    for (int k = 0; k < num_classes; ++k)
        if (counts[static_cast<std::size_t>(k)] == 0)
            throw InputError(std::string(who) + ": class " + std::to_string(k) +
                             " has no windows");
}

void append_augmented(std::vector<LabeledWindow>& train, double angle_degrees) {
    const std::size_t n = train.size();
    train.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i)
        train.push_back(data::augment_rotate_x(train[i], angle_degrees));
}

std::vector<LabeledWindow> gather(const std::vector<LabeledWindow>& windows,
                                  const std::vector<std::size_t>& idx) {
    std::vector<LabeledWindow> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(windows[i]);
    return out;
}

}  // namespace

AdamState make_adam_state(const ModelParams& params, const AdamConfig& config) {
    AdamState state;
    state.config = config;
    for (const auto& l : params.layers) {
        state.m.push_back(LayerGrad::zeros_like(l));
        state.v.push_back(LayerGrad::zeros_like(l));
    }
    return state;
}

void adam_step(ModelParams& params, const GradientSet& grads, AdamState& state) {
    const std::size_t n = params.layers.size();
    if (grads.layers.size() != n || state.m.size() != n || state.v.size() != n)
        throw ConfigError("adam_step: layer count mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (grads.layers[i].weights.size() != params.layers[i].weights.size() ||
            grads.layers[i].bias.size() != params.layers[i].bias.size())
            throw ConfigError("adam_step: gradient shape mismatch at layer " +
                              std::to_string(i));
    }
    const AdamConfig& c = state.config;
    ++state.t;
    for (std::size_t i = 0; i < n; ++i) {
        auto& layer = params.layers[i];
        kernels::par::adam_update(layer.weights.data(), grads.layers[i].weights.data(),
                                  state.m[i].weights.data(), state.v[i].weights.data(),
                                  static_cast<std::int64_t>(layer.weights.size()), c.lr,
                                  c.beta1, c.beta2, c.eps, c.weight_decay, state.t);
        kernels::par::adam_update(layer.bias.data(), grads.layers[i].bias.data(),
                                  state.m[i].bias.data(), state.v[i].bias.data(),
                                  static_cast<std::int64_t>(layer.bias.size()), c.lr, c.beta1,
                                  c.beta2, c.eps, c.weight_decay, state.t);
    }
}

TrainRun train_once(const std::vector<LabeledWindow>& train, const GaitNetConfig& model_config,
                    const TrainConfig& config, std::uint64_t seed) {
    if (config.epochs < 1) throw ConfigError("train_once: epochs must be >= 1");
    if (config.batch_size < 1) throw ConfigError("train_once: batch_size must be >= 1");
    if (train.empty()) throw InputError("train_once: empty training set");
    check_class_presence(train, model_config.num_classes, "train_once");

    TrainRun run;
    run.params = model::init_params(model_config, splitmix64(seed ^ 0xA11CEull));
    AdamState adam = make_adam_state(run.params, config.adam);
    GradientSet grads = model::make_gradients(run.params);
    Rng rng(splitmix64(seed ^ 0xB0B5ull));

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t at = 0; at < order.size(); at += config.batch_size) {
            const std::size_t batch_end =
                std::min(order.size(), at + static_cast<std::size_t>(config.batch_size));
            grads.zero();
            double batch_loss = 0.0;
            for (std::size_t i = at; i < batch_end; ++i) {
                const LabeledWindow& w = train[order[i]];
                batch_loss +=
                    model::backprop(run.params, w.features, w.label, true, rng, grads);
            }
            if (!std::isfinite(batch_loss))
                throw DivergenceError("training loss became non-finite", epoch);
            scale_gradients(grads, 1.0 / static_cast<double>(batch_end - at));
            adam_step(run.params, grads, adam);
            epoch_loss += batch_loss;
        }
        run.curve.push_back(epoch_loss / static_cast<double>(train.size()));
    }
    return run;
}

void carve_validation(std::vector<LabeledWindow>& train, std::vector<LabeledWindow>& validation,
                      int num_classes, double fraction, std::uint64_t seed) {
    if (fraction <= 0.0 || fraction >= 1.0)
        throw ConfigError("carve_validation: fraction must be in (0, 1)");

    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < train.size(); ++i) {
        const int label = train[i].label;
        if (label < 0 || label >= num_classes)
            throw InputError("carve_validation: label " + std::to_string(label) +
                             " outside task classes");
        by_class[static_cast<std::size_t>(label)].push_back(i);
    }

    Rng rng(seed);
    std::vector<bool> to_val(train.size(), false);
    for (auto& idx : by_class) {
        if (idx.size() < 2) continue;  // too small to carve; stays in train
        rng.shuffle(idx);
        auto n_val = static_cast<std::size_t>(
            std::lround(fraction * static_cast<double>(idx.size())));
        n_val = std::max<std::size_t>(1, std::min(n_val, idx.size() - 1));
        for (std::size_t i = 0; i < n_val; ++i) to_val[idx[i]] = true;
    }

    std::vector<LabeledWindow> kept;
    kept.reserve(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (to_val[i])
            validation.push_back(std::move(train[i]));
        else
            kept.push_back(std::move(train[i]));
    }
    train = std::move(kept);
}

RestartResult train_with_restarts(const std::vector<LabeledWindow>& train,
                                  const std::vector<LabeledWindow>& validation,
                                  const GaitNetConfig& model_config,
                                  const TrainConfig& config) {
    if (config.restarts < 1) throw ConfigError("train_with_restarts: restarts must be >= 1");
    if (validation.empty())
        throw InputError("train_with_restarts: validation set must not be empty");

    RestartResult best;
    bool have_best = false;
    std::string last_failure;
    int last_epoch = 0;
    for (int r = 0; r < config.restarts; ++r) {
        const std::uint64_t run_seed =
            splitmix64(config.seed ^ splitmix64(0x3E57A27ull + static_cast<std::uint64_t>(r)));
        TrainRun run;
        try {
            run = train_once(train, model_config, config, run_seed);
        } catch (const DivergenceError& e) {
            best.notes.push_back("restart " + std::to_string(r) + " diverged: " + e.what());
            last_failure = e.what();
            last_epoch = e.epoch();
            continue;
        }
        const double acc = validation_accuracy(run.params, validation);
        if (!have_best || acc > best.val_accuracy) {
            best.params = std::move(run.params);
            best.restart = r;
            best.val_accuracy = acc;
            have_best = true;
        }
    }
    if (!have_best)
        throw DivergenceError("all " + std::to_string(config.restarts) +
                                  " restarts diverged; last failure: " + last_failure,
                              last_epoch);
    return best;
}

std::vector<std::vector<long>> confusion_matrix(const std::vector<int>& truth,
                                                const std::vector<int>& predictions,
                                                int num_classes) {
    if (truth.size() != predictions.size())
        throw InputError("confusion_matrix: truth and prediction sizes differ");
    std::vector<std::vector<long>> m(static_cast<std::size_t>(num_classes),
                                     std::vector<long>(static_cast<std::size_t>(num_classes),
                                                       0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i];
        const int p = predictions[i];
        if (t < 0 || t >= num_classes || p < 0 || p >= num_classes)
            throw InputError("confusion_matrix: label outside class range at index " +
                             std::to_string(i));
        ++m[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    }
    return m;
}

Metrics compute_metrics(const std::vector<std::vector<long>>& confusion) {
    const auto k = confusion.size();
    long total = 0, trace = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (confusion[i].size() != k) throw InputError("compute_metrics: matrix not square");
        for (std::size_t j = 0; j < k; ++j) total += confusion[i][j];
        trace += confusion[i][i];
    }
    if (total == 0) throw InputError("compute_metrics: empty confusion matrix");

    Metrics out;
    out.accuracy = static_cast<double>(trace) / static_cast<double>(total);

    double f1_sum = 0.0, f1_weighted = 0.0;
    long tp_all = 0, fp_all = 0, fn_all = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const long tp = confusion[c][c];
        long fn = 0, fp = 0, support = 0;
        for (std::size_t j = 0; j < k; ++j) {
            support += confusion[c][j];
            if (j != c) {
                fn += confusion[c][j];
                fp += confusion[j][c];
            }
        }
        const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        const double f1 =
            precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        f1_sum += f1;
        f1_weighted += f1 * static_cast<double>(support);
        tp_all += tp;
        fp_all += fp;
        fn_all += fn;
    }
    out.f1_macro = f1_sum / static_cast<double>(k);
    out.f1_weighted = f1_weighted / static_cast<double>(total);
    const double micro_p = tp_all + fp_all > 0 ? static_cast<double>(tp_all) / (tp_all + fp_all)
                                               : 0.0;
    const double micro_r = tp_all + fn_all > 0 ? static_cast<double>(tp_all) / (tp_all + fn_all)
                                               : 0.0;
    out.f1_micro =
        micro_p + micro_r > 0.0 ? 2.0 * micro_p * micro_r / (micro_p + micro_r) : 0.0;
    return out;
}

EvalReport evaluate(const ModelParams& params, const std::vector<LabeledWindow>& test,
                    const TaskSpec& task) {
    if (test.empty()) throw InputError("evaluate: empty test set");
    std::vector<int> truth, pred;
    truth.reserve(test.size());
    pred.reserve(test.size());
    for (const auto& w : test) {
        truth.push_back(w.label);
        pred.push_back(model::predict(params, w.features));
    }
    EvalReport report;
    report.task = to_string(task.task);
    report.confusion = confusion_matrix(truth, pred, task.num_classes());
    const Metrics m = compute_metrics(report.confusion);
    report.accuracy = m.accuracy;
    report.f1 = m.f1_macro;
    report.f1_micro = m.f1_micro;
    report.f1_weighted = m.f1_weighted;
    for (int c = 0; c < task.num_classes(); ++c)
        report.class_names.push_back(task.class_name(c));
    report.test_windows = static_cast<long>(test.size());
    return report;
}

namespace {

std::string placement_name(const std::optional<Placement>& p) {
    return p ? to_string(*p) : "all";
}

std::string cell_name(const data::PipelineConfig& pipeline) {
    return to_string(pipeline.task.task) + "/" + placement_name(pipeline.placement) + "/" +
           to_string(pipeline.protocol);
}

// num_classes follows the task; the window geometry follows the pipeline.
GaitNetConfig resolved_model(const ExperimentConfig& config) {
    GaitNetConfig m = config.model;
    m.num_classes = config.pipeline.task.num_classes();
    m.window_len = config.pipeline.window;
    return m;
}

}  // namespace

RandomSplitResult run_random_split(const DatasetManifest& manifest,
                                   const ExperimentConfig& config) {
    const GaitNetConfig model_config = resolved_model(config);
    const TaskSpec& task = config.pipeline.task;

    data::WindowSet set = data::build_windows(manifest, config.pipeline);
    if (set.windows.empty())
        throw InputError("empty cell " + cell_name(config.pipeline) + ": no windows survive");

    const data::RandomSplit split =
        data::split_random(set.windows, task.num_classes(), config.train.test_fraction,
                           splitmix64(config.train.seed ^ 0x5EED5117ull));
    std::vector<LabeledWindow> train_set = gather(set.windows, split.train);
    const std::vector<LabeledWindow> test_set = gather(set.windows, split.test);
    set.windows.clear();
    set.windows.shrink_to_fit();

    std::vector<LabeledWindow> validation;
    carve_validation(train_set, validation, task.num_classes(),
                     config.train.validation_fraction,
                     splitmix64(config.train.seed ^ 0xCA2FE0ull));
    if (config.train.augment) append_augmented(train_set, config.train.augment_angle_deg);

    RestartResult best =
        train_with_restarts(train_set, validation, model_config, config.train);

    RandomSplitResult result;
    result.report = evaluate(best.params, test_set, task);
    result.report.placement = placement_name(config.pipeline.placement);
    result.report.protocol = to_string(config.pipeline.protocol);
    result.report.regime = "random";
    result.report.train_windows = static_cast<long>(train_set.size());
    result.report.notes = std::move(best.notes);
    result.report.notes.insert(result.report.notes.end(), set.log.begin(), set.log.end());
    result.report.notes.push_back("validation windows: " + std::to_string(validation.size()));
    result.report.notes.push_back("selected restart " + std::to_string(best.restart) +
                                  " at validation accuracy " +
                                  std::to_string(best.val_accuracy));
    result.params = std::move(best.params);
    return result;
}

EvalReport run_loo(const DatasetManifest& manifest, const ExperimentConfig& config) {
    const GaitNetConfig model_config = resolved_model(config);
    const TaskSpec& task = config.pipeline.task;
    const int num_classes = task.num_classes();

    data::WindowSet set = data::build_windows(manifest, config.pipeline);
    if (set.windows.empty())
        throw InputError("empty cell " + cell_name(config.pipeline) + ": no windows survive");

    EvalReport report;
    report.task = to_string(task.task);
    report.placement = placement_name(config.pipeline.placement);
    report.protocol = to_string(config.pipeline.protocol);
    report.regime = "loo";
    report.notes = set.log;
    for (int c = 0; c < num_classes; ++c) report.class_names.push_back(task.class_name(c));
    report.confusion.assign(static_cast<std::size_t>(num_classes),
                            std::vector<long>(static_cast<std::size_t>(num_classes), 0));

    const auto folds =
        data::split_leave_one_dog_out(manifest, task, set.windows, &report.notes);

    double acc_sum = 0.0, f1_sum = 0.0;
    int counted = 0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto& fold = folds[f];
        EvalReport::Fold entry;
        entry.dog_id = fold.dog_id;
        entry.test_windows = static_cast<long>(fold.test.size());

        std::vector<long> class_counts(static_cast<std::size_t>(num_classes), 0);
        for (std::size_t i : fold.train)
            ++class_counts[static_cast<std::size_t>(set.windows[i].label)];
        const bool trainable =
            std::all_of(class_counts.begin(), class_counts.end(), [](long n) { return n > 0; });
        if (!trainable) {
            report.notes.push_back("fold " + fold.dog_id +
                                   " skipped: a class is absent from its training dogs");
            continue;
        }

        std::vector<LabeledWindow> train_set = gather(set.windows, fold.train);
        const std::vector<LabeledWindow> test_set = gather(set.windows, fold.test);
        std::vector<LabeledWindow> validation;
        carve_validation(train_set, validation, num_classes,
                         config.train.validation_fraction,
                         splitmix64(config.train.seed ^ splitmix64(0xCAFEull + f)));
        if (config.train.augment) append_augmented(train_set, config.train.augment_angle_deg);

        TrainConfig fold_train = config.train;
        fold_train.seed = splitmix64(config.train.seed ^ splitmix64(0xF01Dull + f));
        try {
            const RestartResult best =
                train_with_restarts(train_set, validation, model_config, fold_train);
            const EvalReport fold_report = evaluate(best.params, test_set, task);
            entry.accuracy = fold_report.accuracy;
            entry.f1 = fold_report.f1;
            for (int a = 0; a < num_classes; ++a)
                for (int b = 0; b < num_classes; ++b)
                    report.confusion[a][b] += fold_report.confusion[a][b];
            acc_sum += entry.accuracy;
            f1_sum += entry.f1;
            ++counted;
        } catch (const DivergenceError& e) {
            entry.diverged = true;
            report.notes.push_back("fold " + fold.dog_id +
                                   " diverged and is excluded from the mean: " + e.what());
        }
        report.test_windows += entry.test_windows;
        report.folds.push_back(std::move(entry));
    }

    if (counted == 0)
        throw InputError("leave-one-dog-out on " + cell_name(config.pipeline) +
                         ": no fold finished training");
    // Headline numbers are unweighted fold means; micro/weighted F1 come
    // from the summed confusion matrix.
    report.accuracy = acc_sum / counted;
    report.f1 = f1_sum / counted;
    const Metrics pooled = compute_metrics(report.confusion);
    report.f1_micro = pooled.f1_micro;
    report.f1_weighted = pooled.f1_weighted;
    report.notes.push_back("window-level accuracy over summed confusion: " +
                           std::to_string(pooled.accuracy));
    return report;
}

MatrixResult run_matrix(const DatasetManifest& manifest, const ExperimentConfig& base,
                        const std::vector<Task>& tasks,
                        const std::vector<std::optional<Placement>>& placements,
                        const std::vector<Protocol>& protocols,
                        const std::vector<std::string>& regimes) {
    MatrixResult result;
    for (Task task : tasks) {
        for (const auto& placement : placements) {
            for (Protocol protocol : protocols) {
                for (const std::string& regime : regimes) {
                    if (regime != "random" && regime != "loo")
                        throw ConfigError("run_matrix: unknown regime '" + regime + "'");
                    ExperimentConfig cfg = base;
                    cfg.pipeline.task.task = task;
                    cfg.pipeline.placement = placement;
                    cfg.pipeline.protocol = protocol;
                    try {
                        if (regime == "random")
                            result.reports.push_back(
                                run_random_split(manifest, cfg).report);
                        else
                            result.reports.push_back(run_loo(manifest, cfg));
                    } catch (const InputError& e) {
                        result.log.push_back(
                            "skipped " + cell_name(cfg.pipeline) + " (" + regime +
                            "): " + e.what());
                    }
                }
            }
        }
    }
    return result;
}

}  // namespace gaitnet::train
