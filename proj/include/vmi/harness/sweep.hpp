#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vmi/harness/cv.hpp"

namespace vmi::harness {

inline const std::vector<std::size_t> kChannelCounts = {2, 4, 8, 16, 20, 32, 64};

struct SweepOptions {
    std::vector<Method> methods{Method::Cnn};
    std::vector<std::size_t> channel_counts = kChannelCounts;
    CvOptions base;  // method and k_channels are overwritten per cell
};

// Cells are method-major: cells[m * counts + c].
struct SweepTable {
    std::string dataset;
    std::vector<Method> methods;
    std::vector<std::size_t> channel_counts;
    std::vector<EvalReport> cells;

    const EvalReport& cell(std::size_t method_index, std::size_t count_index) const;
    nlohmann::json to_json() const;
};

// Evaluates the full (method x channel count) grid. Per-trial PLV is
// computed once and shared by every cell.
SweepTable sweep(const core::EpochSet& dataset, const SweepOptions& options, const std::string& dataset_id);

// "67.50% (±1.52)" from percentages.
std::string format_cell(double mean_percent, double std_percent);

// Header: dataset,method,2ch,4ch,... ; one row per (dataset, method).
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepTable>& tables);

}  // namespace vmi::harness
