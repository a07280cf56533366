#include "vmi/core/recording.hpp"

#include <algorithm>
#include <cstring>

#include "vmi/container.hpp"
#include "vmi/core/timeline.hpp"
#include "vmi/error.hpp"

namespace vmi::core {

EegRecording::EegRecording(Montage montage, int fs, SignalMatrix data, std::vector<Event> events)
    : montage_(std::move(montage)), fs_(fs), data_(std::move(data)), events_(std::move(events))
{
    if (fs_ != 1000 && fs_ != 250) {
        throw RangeError("sampling rate must be 1000 or 250 Hz, got " + std::to_string(fs_));
    }
    if (static_cast<std::size_t>(data_.rows()) != montage_.size()) {
        throw ShapeError("data has " + std::to_string(data_.rows()) + " rows for a montage of " +
                         std::to_string(montage_.size()) + " channels");
    }
    for (const auto& e : events_) {
        if (e.sample >= n_samples()) {
            throw RangeError("event at sample " + std::to_string(e.sample) + " beyond recording end");
        }
        if (e.label < 0 || e.label >= kNumClasses) {
            throw RangeError("event label " + std::to_string(e.label) + " outside 0..3");
        }
    }
}

EegRecording EegRecording::with_data(SignalMatrix data, int fs) const
{
    std::vector<Event> events = events_;
    if (fs != fs_) {
        for (auto& e : events) {
            e.sample = e.sample * static_cast<std::size_t>(fs) / static_cast<std::size_t>(fs_);
        }
    }
    return EegRecording(montage_, fs, std::move(data), std::move(events));
}

bool EegRecording::operator==(const EegRecording& other) const
{
    if (montage_ != other.montage_ || fs_ != other.fs_ || events_ != other.events_ ||
        data_.rows() != other.data_.rows() || data_.cols() != other.data_.cols()) {
        return false;
    }
    // Bitwise comparison so that NaN payloads round-trip as equal.
    return std::memcmp(data_.data(), other.data_.data(), sizeof(float) * static_cast<std::size_t>(data_.size())) == 0;
}

void save_recording(const EegRecording& rec, const std::filesystem::path& path)
{
    nlohmann::json header;
    header["kind"] = "recording";
    header["fs"] = rec.fs();
    header["channel_names"] = rec.montage().names();
    header["unit"] = "uV";
    header["samples"] = rec.n_samples();
    auto events = nlohmann::json::array();
    for (const auto& e : rec.events()) {
        events.push_back({{"sample", e.sample}, {"label", e.label}});
    }
    header["events"] = std::move(events);
    write_container(path, header, std::span<const float>(rec.data().data(), static_cast<std::size_t>(rec.data().size())));
}

EegRecording load_recording(const std::filesystem::path& path)
{
    Container c = read_container(path);
    const auto& h = c.header;
    expect_kind(h, "recording");
    std::vector<std::string> names;
    std::vector<Event> events;
    int fs = 0;
    std::size_t samples = 0;
    try {
        fs = h.at("fs").get<int>();
        names = h.at("channel_names").get<std::vector<std::string>>();
        if (h.contains("unit") && h["unit"] != "uV") {
            throw FormatError("unsupported unit " + h["unit"].dump());
        }
        for (const auto& e : h.at("events")) {
            events.push_back({e.at("sample").get<std::size_t>(), e.at("label").get<int>()});
        }
        if (h.contains("samples")) {
            samples = h["samples"].get<std::size_t>();
        } else if (!names.empty()) {
            if (c.payload.size() % names.size() != 0) {
                throw CorruptionError("payload size not divisible by channel count");
            }
            samples = c.payload.size() / names.size();
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed recording header: ") + e.what());
    }
    if (c.payload.size() != names.size() * samples) {
        throw CorruptionError("header declares " + std::to_string(names.size()) + " x " + std::to_string(samples) +
                              " values, payload holds " + std::to_string(c.payload.size()));
    }
    SignalMatrix data(static_cast<Eigen::Index>(names.size()), static_cast<Eigen::Index>(samples));
    std::copy(c.payload.begin(), c.payload.end(), data.data());
    return EegRecording(Montage(std::move(names)), fs, std::move(data), std::move(events));
}

}  // namespace vmi::core
