#pragma once

#include <array>
#include <string_view>

namespace vmi::core {

// Phase durations of one trial, in milliseconds.
struct TrialTimeline {
    static constexpr int rest1_ms = 2000;
    static constexpr int cue_ms = 5000;
    static constexpr int rest2_ms = 5000;
    static constexpr int imagery_ms = 5000;
    static constexpr int total_ms = 17000;

    // Offset of imagery onset from the trial start marker.
    static constexpr int imagery_onset_ms = rest1_ms + cue_ms + rest2_ms;
};

static_assert(TrialTimeline::rest1_ms + TrialTimeline::cue_ms + TrialTimeline::rest2_ms +
                  TrialTimeline::imagery_ms ==
              TrialTimeline::total_ms);

inline constexpr int kNumClasses = 4;

// Class ids follow the stimulus order: 0=phone, 1=door, 2=eat, 3=pour.
enum class Task : int { Phone = 0, Door = 1, Eat = 2, Pour = 3 };

inline constexpr std::array<std::string_view, kNumClasses> kTaskNames = {"phone", "door", "eat", "pour"};

}  // namespace vmi::core
