#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vmi/core/epochs.hpp"
#include "vmi/nn/network.hpp"

namespace vmi::nn {

enum class Optimizer { Adam, Sgd };

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 16;
    std::size_t epochs = 100;
    double dropout = 0.5;
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::Adam;
    // Early stop when the training loss has not improved by min_delta for
    // `patience` epochs. patience 0 disables it.
    std::size_t patience = 10;
    double min_delta = 1e-4;

    nlohmann::json to_json() const;
    // Missing keys keep their defaults; bad values raise ConfigError.
    static TrainConfig from_json(const nlohmann::json& j);
};

struct TrainResult {
    std::vector<double> loss_curve;
    std::vector<double> accuracy_curve;  // training accuracy per epoch (train mode)
    bool early_stopped = false;
};

// Mini-batch training on labelled windows. Deterministic for a fixed seed.
// DivergenceError when the loss becomes non-finite.
TrainResult train(Network& net, const core::EpochSet& windows, const TrainConfig& config);

// Eval-mode probabilities, one row per window.
Probabilities predict_proba(Network& net, const core::EpochSet& windows, std::size_t batch_size = 64);

// Mean of the window probability rows, then argmax (ties to the lowest id).
int predict_trial(const Probabilities& window_probs);

struct TrialPrediction {
    std::vector<std::size_t> source_trials;  // ascending
    std::vector<int> labels;                 // true label of each source trial
    std::vector<int> predicted;
};

// Groups windows by source trial and applies predict_trial to each group.
TrialPrediction predict_trials(const core::EpochSet& windows, const Probabilities& window_probs);

// Overlapping windows of win_s seconds every win_s * (1 - overlap) seconds.
// Labels are inherited and source_trials keeps the originating trial id.
// RangeError when the window is longer than the epochs.
core::EpochSet slide_windows(const core::EpochSet& epochs, double win_s = 2.0, double overlap = 0.5);

}  // namespace vmi::nn
