#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stockcnn/data.hpp"
#include "stockcnn/metrics.hpp"
#include "stockcnn/model.hpp"
#include "stockcnn/optim.hpp"

namespace stockcnn {

struct TrainConfig {
    std::size_t max_epochs = 25;
    std::size_t patience = 5;
    std::size_t batch_size = 1000;
    bool early_stopping = true;
    std::uint64_t seed = 42;
    double validation_fraction = 0.1;  // taken from the chronological end of the training set
    HyperParams optimizer;
    double threshold = 0.5;
    std::size_t threads = 0;  // 0: hardware concurrency; results do not depend on it

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    std::optional<double> test_loss;
    std::optional<double> test_acc;
    double wall_time_s = 0.0;  // not written to the history CSV
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    bool stopped_early = false;

    std::vector<double> val_losses() const;
};

struct TrainResult {
    Model model;          // parameters from the best-validation-loss epoch
    AdamState optimizer;  // optimizer state at that epoch
    TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(const Model& initial, const SampleSet& train_set, const TrainConfig& config,
                  const SampleSet* test_set = nullptr, const EpochCallback& on_epoch = {});

enum class StopDecision { Continue, Stop };

// Stop once each of the last `patience` losses is >= the best loss seen before them.
StopDecision early_stop_check(std::span<const double> val_losses, std::size_t patience);

struct Evaluation {
    ConfusionMatrix confusion;
    Metric accuracy;
    Metric precision;
    Metric recall;
    Metric f1;
    double loss = 0.0;
    std::vector<double> predictions;
};

Evaluation evaluate(const Model& model, const SampleSet& data, double threshold = 0.5);

struct GradCheckOptions {
    double epsilon = 1e-5;
    std::size_t max_parameters = 0;  // 0 checks every parameter, otherwise a seeded random subset
    std::uint64_t seed = 0;
    // Relative error is |a - n| / max(|a|, |n|, denominator_floor).
    double denominator_floor = 1e-6;
    bool corrupt_backward = false;  // negative control: perturbs the analytic gradient
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t checked = 0;
};

// init_model() plus biases drawn uniformly from +-bias_scale. With zero biases a
// dead ReLU channel feeds exact zeros forward, leaving later pre-activations on
// the activation kink and pooling windows tied, where no one-sided derivative
// matches a central difference.
Model init_probe_model(const ModelConfig& config, std::uint64_t seed, double bias_scale = 0.1);

// Central differences of the per-sample cross-entropy against model_backward,
// with dropout disabled (inference-mode forward).
GradCheckResult grad_check(const Model& model, const FeatureMap& sample, int label,
                           const GradCheckOptions& options = {});

// Header: epoch,train_loss,train_acc,val_loss,val_acc,test_loss,test_acc
void write_history_csv(std::ostream& out, const TrainHistory& history);

}  // namespace stockcnn
