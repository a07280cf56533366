#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vmi/core/recording.hpp"

namespace vmi::core {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Labeled trials x channels x samples tensor. t0_ms is the time of the first
// sample relative to imagery onset. source_trials records which original
// trial each row came from (identity for plain epoching, repeated entries
// after sliding-window augmentation).
class EpochSet {
public:
    EpochSet() = default;
    EpochSet(std::vector<std::string> channel_names, int fs, double t0_ms, std::size_t samples,
             std::vector<int> labels, std::vector<double> data, std::vector<std::size_t> source_trials = {});

    std::size_t trials() const noexcept { return labels_.size(); }
    std::size_t channels() const noexcept { return channel_names_.size(); }
    std::size_t samples() const noexcept { return samples_; }
    int fs() const noexcept { return fs_; }
    double t0_ms() const noexcept { return t0_ms_; }

    const std::vector<std::string>& channel_names() const noexcept { return channel_names_; }
    const std::vector<int>& labels() const noexcept { return labels_; }
    int label(std::size_t trial) const { return labels_.at(trial); }
    const std::vector<std::size_t>& source_trials() const noexcept { return source_trials_; }
    const std::vector<double>& data() const noexcept { return data_; }

    std::span<const double> series(std::size_t trial, std::size_t channel) const;
    std::span<double> series(std::size_t trial, std::size_t channel);
    // channels x samples view of one trial.
    Eigen::Map<const RowMatrix> trial(std::size_t t) const;

    EpochSet subset_trials(std::span<const std::size_t> indices) const;
    EpochSet subset_channels(std::span<const std::size_t> indices) const;
    EpochSet with_labels(std::vector<int> labels) const;
    std::vector<std::size_t> trials_of_class(int label) const;

    bool operator==(const EpochSet&) const = default;

private:
    std::vector<std::string> channel_names_;
    int fs_ = 0;
    double t0_ms_ = 0.0;
    std::size_t samples_ = 0;
    std::vector<int> labels_;
    std::vector<std::size_t> source_trials_;
    std::vector<double> data_;
};

enum class Phase {
    Imagery,  // [0, 5000) ms after imagery onset
    Rest,     // the 5 s rest preceding imagery: [-5000, 0) ms
    Trial,    // anywhere in the trial: [-12000, 5000) ms, used for baseline-referenced maps
};

// Half-open window [start_ms, end_ms) relative to imagery onset.
struct WindowMs {
    double start_ms = 0.0;
    double end_ms = 0.0;
};

// One epoch per event. Throws RangeError when the window leaves the phase or
// the recording or does not fall on whole samples, EmptyInputError when the
// recording has no events.
EpochSet epoch_recording(const EegRecording& rec, Phase phase, WindowMs window);

void save_epochs(const EpochSet& epochs, const std::filesystem::path& path);
EpochSet load_epochs(const std::filesystem::path& path);

}  // namespace vmi::core
