#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vmi/core/epochs.hpp"
#include "vmi/core/timeline.hpp"
#include "vmi/nn/model_spec.hpp"
#include "vmi/nn/train.hpp"

namespace vmi::harness {

enum class Method { Cnn, CspLda };

std::string to_string(Method m);
// ConfigError("method") for unknown names.
Method method_from_string(const std::string& name);

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Stratified k-fold split: each class is shuffled with `seed` and dealt
// round-robin over the folds. StratificationError when a class has fewer
// than k trials.
std::vector<Fold> stratified_folds(const std::vector<int>& labels, std::size_t k, std::uint64_t seed);

struct CvOptions {
    Method method = Method::Cnn;
    // 0, or the channel count, uses every channel without ranking.
    std::size_t k_channels = 0;
    std::size_t folds = 5;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    nn::TrainConfig train;
    nn::ArchitectureOptions arch;
    double win_s = 2.0;
    double overlap = 0.5;
    // Without augmentation each trial contributes its central window only.
    bool augment = true;
    std::size_t csp_m = 2;
    std::size_t threads = 1;
    // Per-trial PLV matrices of the dataset (connectivity::trial_plv). Computed
    // on demand when absent; sharing them across sweep cells saves the
    // analytic-signal work.
    std::shared_ptr<const std::vector<Eigen::MatrixXd>> trial_plv;

    nlohmann::json to_json() const;
};

using Confusion = std::array<std::array<std::size_t, core::kNumClasses>, core::kNumClasses>;

struct FoldResult {
    std::uint64_t seed = 0;
    std::size_t fold = 0;
    double accuracy = 0.0;         // trial level
    double window_accuracy = 0.0;  // equals accuracy for CSP-LDA
    std::vector<std::string> selected_channels;
    std::vector<std::size_t> train_trials;  // source trial ids
    std::vector<std::size_t> test_trials;
    std::size_t train_windows = 0;
    std::size_t test_windows = 0;
    Confusion confusion{};  // rows: true class, columns: predicted
    std::vector<double> loss_curve;
};

// Accuracies are fractions internally; percent only in formatted output.
struct EvalReport {
    std::string dataset;
    Method method = Method::Cnn;
    std::size_t k_channels = 0;
    std::vector<FoldResult> folds;  // seed-major, fold-minor
    double mean = 0.0;              // over folds x seeds
    double stdev = 0.0;             // sample std over folds x seeds
    double std_between_seeds = 0.0; // std of per-seed means
    double std_within_seeds = 0.0;  // mean of per-seed fold stds
    double window_mean = 0.0;
    double window_stdev = 0.0;
    std::vector<Confusion> confusion_per_seed;
    nlohmann::json config;

    nlohmann::json to_json() const;
};

// Channel ranking is fitted on the training trials of each fold only, and
// sliding windows are cut after the split so all windows of a trial share a
// fold. Jobs (seed, fold) run on a bounded worker pool; results do not depend
// on the thread count.
EvalReport cross_validate(const core::EpochSet& dataset, const CvOptions& options, const std::string& dataset_id = "");

// One-vs-rest CSP-LDA on every channel.
EvalReport csp_lda_4class(const core::EpochSet& epochs, std::size_t m, std::size_t folds,
                          std::vector<std::uint64_t> seeds = {1});

// Indices (ascending) of the top-k channels ranked by class-wise PLV on the
// given trials. k = 0 or k = channel count returns every channel.
std::vector<std::size_t> select_on_trials(const core::EpochSet& dataset, std::span<const std::size_t> trials,
                                          std::size_t k);
std::vector<std::size_t> select_on_trials(const core::EpochSet& dataset, std::span<const Eigen::MatrixXd> trial_plv,
                                          std::span<const std::size_t> trials, std::size_t k);

// Runs fn(i) for i in [0, n) on at most `threads` workers. The first
// exception (by index) is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

// CSP filter pairs actually fitted on n channels: min(m, n / 2), at least 1.
std::size_t effective_csp_m(std::size_t m, std::size_t n_channels);

// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_std(std::span<const double> values);

}  // namespace vmi::harness
