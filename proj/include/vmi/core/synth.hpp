#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "vmi/core/recording.hpp"
#include "vmi/core/timeline.hpp"

namespace vmi::core {

// Recipe for a seeded synthetic visual-imagery recording.
//
// Every trial follows TrialTimeline. Background noise is pink plus white at
// equal power on all channels. From onset_ms after imagery onset to the end
// of the imagery phase, the planted channels of the trial's class carry a
// sinusoid at that class's carrier frequency with a trial-random phase that
// is shared across the planted channels. Each planted channel adds a slow
// Gaussian phase jitter of variance -ln(coupling), so the expected pairwise
// phase locking is `coupling` and coupling = 1 gives identical phases.
struct SynthSpec {
    std::size_t n_trials_per_class = 50;
    std::array<std::vector<std::size_t>, kNumClasses> planted_channels;
    std::array<double, kNumClasses> carrier_hz = {4.0, 6.0, 8.5, 11.0};
    double coupling = 1.0;
    // Oscillation power over broadband noise power; +inf gives noiseless data.
    double snr_db = 10.0;
    // Peak amplitude of the planted oscillation.
    double signal_uv = 10.0;
    double onset_ms = 500.0;
    int fs = 1000;
    std::uint64_t seed = 0;
    Montage montage = Montage::standard64();

    // Throws RangeError when a planted channel or carrier is out of bounds.
    void validate() const;
    std::vector<std::size_t> planted_union() const;
};

EegRecording synth_dataset(const SynthSpec& spec);

// Four classes, two planted channels each (one prefrontal, one occipital).
SynthSpec default_synth_spec(std::uint64_t seed);

}  // namespace vmi::core
