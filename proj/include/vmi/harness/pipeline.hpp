#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vmi/core/epochs.hpp"
#include "vmi/core/recording.hpp"
#include "vmi/core/synth.hpp"
#include "vmi/dsp/ersp.hpp"
#include "vmi/dsp/psd.hpp"
#include "vmi/harness/cv.hpp"
#include "vmi/harness/sweep.hpp"
#include "vmi/stats/stats.hpp"

namespace vmi::harness {

struct PipelineConfig {
    std::uint64_t seed = 0;

    std::string dataset_id = "synthetic";
    std::optional<std::filesystem::path> recording_path;  // synthesize when empty
    core::SynthSpec synth;

    stats::Band band{0.5, 13.0};
    int target_fs = 250;

    core::WindowMs imagery_window{500.0, 4500.0};
    core::WindowMs rest_window{-4500.0, -500.0};
    core::WindowMs ersp_window{-1500.0, 5000.0};

    double edge_threshold = 0.9;
    std::size_t select_k = 8;

    stats::Band stats_band{0.5, 13.0};
    std::size_t n_perm = 10000;

    dsp::ErspOptions ersp;
    std::vector<std::string> ersp_channels;  // empty: the planted channels, else Fp1 and O1

    double psd_seg_s = 1.0;
    double psd_overlap = 0.5;

    CvOptions cv;  // k_channels = select_k
    std::vector<Method> cv_methods{Method::Cnn, Method::CspLda};
    bool shuffled_control = true;
    std::size_t control_cnn_epochs = 0;  // 0: same as cv

    bool run_sweep = true;
    SweepOptions sweep;

    // Parses and validates; ConfigError names the offending key. A
    // seed_override (the --seed flag) replaces or supplies "seed".
    static PipelineConfig from_json(const nlohmann::json& j, std::optional<std::uint64_t> seed_override = {});
    // Normalized echo of every effective setting.
    nlohmann::json to_json() const;
};

// Zero-phase band-pass of every channel, then decimation to target_fs.
core::EegRecording preprocess_recording(const core::EegRecording& rec, stats::Band band, int target_fs);
// Broadband copy at target_fs (anti-aliased decimation only), used for
// spectra and time-frequency maps.
core::EegRecording resample_recording(const core::EegRecording& rec, int target_fs);

// The recording the config describes: loaded from disk or synthesized.
core::EegRecording acquire_recording(const PipelineConfig& config);

// Trial-averaged Welch spectrum of every channel.
std::vector<dsp::Spectrum> mean_spectra(const core::EpochSet& epochs, double seg_s, double overlap);

struct PipelineSummary {
    nlohmann::json json;
};

// synth/load -> preprocess -> connectivity -> stats -> ERSP/PSD -> CV ->
// sweep. Writes CSV/JSON artifacts and manifest.json under out_dir.
PipelineSummary run_pipeline(const PipelineConfig& config, const std::filesystem::path& out_dir,
                             std::size_t threads = 1, const nlohmann::json& raw_config = {});

}  // namespace vmi::harness
