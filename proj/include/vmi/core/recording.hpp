#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "vmi/core/montage.hpp"

namespace vmi::core {

using SignalMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Trial start marker.
struct Event {
    std::size_t sample = 0;
    int label = 0;

    bool operator==(const Event&) const = default;
};

// Continuous multichannel EEG in microvolts, one row per montage channel.
class EegRecording {
public:
    EegRecording(Montage montage, int fs, SignalMatrix data, std::vector<Event> events);

    const Montage& montage() const noexcept { return montage_; }
    int fs() const noexcept { return fs_; }
    const SignalMatrix& data() const noexcept { return data_; }
    const std::vector<Event>& events() const noexcept { return events_; }

    std::size_t n_channels() const noexcept { return static_cast<std::size_t>(data_.rows()); }
    std::size_t n_samples() const noexcept { return static_cast<std::size_t>(data_.cols()); }

    // Same events and montage, new signal and rate. Event samples are rescaled
    // when the rate changes.
    EegRecording with_data(SignalMatrix data, int fs) const;

    bool operator==(const EegRecording& other) const;

private:
    Montage montage_;
    int fs_;
    SignalMatrix data_;
    std::vector<Event> events_;
};

void save_recording(const EegRecording& rec, const std::filesystem::path& path);
EegRecording load_recording(const std::filesystem::path& path);

}  // namespace vmi::core
