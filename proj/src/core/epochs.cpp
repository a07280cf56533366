#include "vmi/core/epochs.hpp"

#include <cmath>

#include "vmi/container.hpp"
#include "vmi/core/timeline.hpp"
#include "vmi/error.hpp"

namespace vmi::core {

EpochSet::EpochSet(std::vector<std::string> channel_names, int fs, double t0_ms, std::size_t samples,
                   std::vector<int> labels, std::vector<double> data, std::vector<std::size_t> source_trials)
    : channel_names_(std::move(channel_names)),
      fs_(fs),
      t0_ms_(t0_ms),
      samples_(samples),
      labels_(std::move(labels)),
      source_trials_(std::move(source_trials)),
      data_(std::move(data))
{
    if (fs_ <= 0) {
        throw RangeError("sampling rate must be positive");
    }
    if (data_.size() != labels_.size() * channel_names_.size() * samples_) {
        throw ShapeError("epoch data size does not match trials x channels x samples");
    }
    for (int l : labels_) {
        if (l < 0 || l >= kNumClasses) {
            throw RangeError("class label " + std::to_string(l) + " outside 0..3");
        }
    }
    if (source_trials_.empty()) {
        source_trials_.resize(labels_.size());
        for (std::size_t i = 0; i < source_trials_.size(); ++i) {
            source_trials_[i] = i;
        }
    } else if (source_trials_.size() != labels_.size()) {
        throw ShapeError("source trial ids must match the trial count");
    }
}

std::span<const double> EpochSet::series(std::size_t trial, std::size_t channel) const
{
    return {data_.data() + (trial * channels() + channel) * samples_, samples_};
}

std::span<double> EpochSet::series(std::size_t trial, std::size_t channel)
{
    return {data_.data() + (trial * channels() + channel) * samples_, samples_};
}

Eigen::Map<const RowMatrix> EpochSet::trial(std::size_t t) const
{
    return {data_.data() + t * channels() * samples_, static_cast<Eigen::Index>(channels()),
            static_cast<Eigen::Index>(samples_)};
}

EpochSet EpochSet::subset_trials(std::span<const std::size_t> indices) const
{
    std::vector<int> labels;
    std::vector<std::size_t> sources;
    std::vector<double> data;
    const std::size_t block = channels() * samples_;
    data.reserve(indices.size() * block);
    for (std::size_t idx : indices) {
        if (idx >= trials()) {
            throw RangeError("trial index out of range");
        }
        labels.push_back(labels_[idx]);
        sources.push_back(source_trials_[idx]);
        data.insert(data.end(), data_.begin() + static_cast<std::ptrdiff_t>(idx * block),
                    data_.begin() + static_cast<std::ptrdiff_t>((idx + 1) * block));
    }
    return EpochSet(channel_names_, fs_, t0_ms_, samples_, std::move(labels), std::move(data), std::move(sources));
}

EpochSet EpochSet::subset_channels(std::span<const std::size_t> indices) const
{
    std::vector<std::string> names;
    for (std::size_t c : indices) {
        if (c >= channels()) {
            throw RangeError("channel index out of range");
        }
        names.push_back(channel_names_[c]);
    }
    std::vector<double> data;
    data.reserve(trials() * indices.size() * samples_);
    for (std::size_t t = 0; t < trials(); ++t) {
        for (std::size_t c : indices) {
            auto s = series(t, c);
            data.insert(data.end(), s.begin(), s.end());
        }
    }
    return EpochSet(std::move(names), fs_, t0_ms_, samples_, labels_, std::move(data), source_trials_);
}

EpochSet EpochSet::with_labels(std::vector<int> labels) const
{
    if (labels.size() != trials()) {
        throw ShapeError("label count must equal trial count");
    }
    return EpochSet(channel_names_, fs_, t0_ms_, samples_, std::move(labels), data_, source_trials_);
}

std::vector<std::size_t> EpochSet::trials_of_class(int label) const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] == label) {
            out.push_back(i);
        }
    }
    return out;
}

namespace {

std::ptrdiff_t ms_to_samples(double ms, int fs)
{
    const double exact = ms * fs / 1000.0;
    const double rounded = std::round(exact);
    if (std::abs(exact - rounded) > 1e-9) {
        throw RangeError("window edge " + std::to_string(ms) + " ms is not a whole sample at " + std::to_string(fs) +
                         " Hz");
    }
    return static_cast<std::ptrdiff_t>(rounded);
}

}  // namespace

EpochSet epoch_recording(const EegRecording& rec, Phase phase, WindowMs window)
{
    double lo = 0.0;
    double hi = 0.0;
    switch (phase) {
    case Phase::Imagery:
        lo = 0.0;
        hi = TrialTimeline::imagery_ms;
        break;
    case Phase::Rest:
        lo = -TrialTimeline::rest2_ms;
        hi = 0.0;
        break;
    case Phase::Trial:
        lo = -TrialTimeline::imagery_onset_ms;
        hi = TrialTimeline::imagery_ms;
        break;
    }
    if (!(window.end_ms > window.start_ms) || window.start_ms < lo || window.end_ms > hi) {
        throw RangeError("window [" + std::to_string(window.start_ms) + ", " + std::to_string(window.end_ms) +
                         ") ms outside phase bounds [" + std::to_string(lo) + ", " + std::to_string(hi) + ")");
    }
    if (rec.events().empty()) {
        throw EmptyInputError("recording has no events");
    }
    const int fs = rec.fs();
    const std::ptrdiff_t onset = ms_to_samples(TrialTimeline::imagery_onset_ms, fs);
    const std::ptrdiff_t first = ms_to_samples(window.start_ms, fs);
    const std::ptrdiff_t last = ms_to_samples(window.end_ms, fs);
    const auto samples = static_cast<std::size_t>(last - first);
    const std::size_t channels = rec.n_channels();

    std::vector<int> labels;
    std::vector<double> data;
    data.reserve(rec.events().size() * channels * samples);
    for (const auto& ev : rec.events()) {
        const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(ev.sample) + onset + first;
        if (start < 0 || start + static_cast<std::ptrdiff_t>(samples) > static_cast<std::ptrdiff_t>(rec.n_samples())) {
            throw RangeError("epoch for event at sample " + std::to_string(ev.sample) + " leaves the recording");
        }
        labels.push_back(ev.label);
        for (std::size_t c = 0; c < channels; ++c) {
            const float* row = rec.data().row(static_cast<Eigen::Index>(c)).data() + start;
            data.insert(data.end(), row, row + samples);
        }
    }
    return EpochSet(rec.montage().names(), fs, window.start_ms, samples, std::move(labels), std::move(data));
}

void save_epochs(const EpochSet& epochs, const std::filesystem::path& path)
{
    nlohmann::json header;
    header["kind"] = "epochs";
    header["fs"] = epochs.fs();
    header["t0_ms"] = epochs.t0_ms();
    header["labels"] = epochs.labels();
    header["dims"] = {epochs.trials(), epochs.channels(), epochs.samples()};
    header["channel_names"] = epochs.channel_names();
    header["source_trials"] = epochs.source_trials();
    std::vector<float> payload(epochs.data().begin(), epochs.data().end());
    write_container(path, header, payload);
}

EpochSet load_epochs(const std::filesystem::path& path)
{
    Container c = read_container(path);
    const auto& h = c.header;
    expect_kind(h, "epochs");
    try {
        const auto dims = h.at("dims").get<std::vector<std::size_t>>();
        if (dims.size() != 3) {
            throw FormatError("dims must have three entries");
        }
        if (c.payload.size() != dims[0] * dims[1] * dims[2]) {
            throw CorruptionError("epoch payload does not match dims");
        }
        auto labels = h.at("labels").get<std::vector<int>>();
        if (labels.size() != dims[0]) {
            throw CorruptionError("label count does not match dims");
        }
        std::vector<std::string> names;
        if (h.contains("channel_names")) {
            names = h["channel_names"].get<std::vector<std::string>>();
        } else {
            for (std::size_t i = 0; i < dims[1]; ++i) {
                names.push_back("ch" + std::to_string(i));
            }
        }
        if (names.size() != dims[1]) {
            throw CorruptionError("channel name count does not match dims");
        }
        std::vector<std::size_t> sources;
        if (h.contains("source_trials")) {
            sources = h["source_trials"].get<std::vector<std::size_t>>();
        }
        std::vector<double> data(c.payload.begin(), c.payload.end());
        return EpochSet(std::move(names), h.at("fs").get<int>(), h.at("t0_ms").get<double>(), dims[2],
                        std::move(labels), std::move(data), std::move(sources));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed epoch header: ") + e.what());
    }
}

}  // namespace vmi::core
