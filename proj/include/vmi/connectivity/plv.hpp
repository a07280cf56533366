#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vmi/core/epochs.hpp"

namespace vmi::connectivity {

// Symmetric channels x channels phase locking values, unit diagonal.
struct ConnectivityMatrix {
    std::vector<std::string> channel_names;
    Eigen::MatrixXd values;

    std::size_t size() const noexcept { return channel_names.size(); }
};

struct Edge {
    std::size_t i = 0;
    std::size_t j = 0;
    double value = 0.0;
};

struct RankedChannel {
    std::size_t index = 0;
    double score = 0.0;
};

// Descending by score; equal scores keep ascending channel index.
struct ChannelRanking {
    std::vector<std::string> channel_names;
    std::vector<RankedChannel> entries;
};

// Per trial, |mean_t exp(i (phi_a - phi_b))| with phases from the analytic
// signal over the whole epoch, then averaged over trials. Expects epochs that
// are already band-limited. RangeError for epochs shorter than two samples.
ConnectivityMatrix plv_matrix(const core::EpochSet& epochs);

// Upper-triangle entries strictly above threshold, sorted by value
// (descending; ties by (i, j)).
std::vector<Edge> strong_edges(const ConnectivityMatrix& conn, double threshold = 0.9);

// Score of a channel: mean over matrices of its largest off-diagonal value.
// ShapeError when the matrices do not share a montage.
ChannelRanking rank_channels(std::span<const ConnectivityMatrix> conns);

// Top-k channels of the ranking, returned in ascending index order.
// RangeError when k exceeds the channel count.
std::vector<std::size_t> select_channels(const ChannelRanking& ranking, std::size_t k);

// Per-class matrices of an epoch set (classes absent from the set are skipped).
std::vector<ConnectivityMatrix> class_plv_matrices(const core::EpochSet& epochs);

// Per-trial resultant matrices |mean_t exp(i dphi)|, before trial averaging.
// Computing them once lets many trial subsets be averaged cheaply.
std::vector<Eigen::MatrixXd> trial_plv(const core::EpochSet& epochs);
// Mean of the selected per-trial matrices, symmetrized, clamped to [0, 1]
// and given a unit diagonal.
ConnectivityMatrix average_plv(const std::vector<std::string>& channel_names,
                               std::span<const Eigen::MatrixXd> per_trial, std::span<const std::size_t> trials);
// Per-class averages over a subset of trials.
std::vector<ConnectivityMatrix> class_plv_matrices(const std::vector<std::string>& channel_names,
                                                   const std::vector<int>& labels,
                                                   std::span<const Eigen::MatrixXd> per_trial,
                                                   std::span<const std::size_t> trials);

void write_matrix_csv(const std::filesystem::path& path, const ConnectivityMatrix& conn);
void write_edges_csv(const std::filesystem::path& path, const ConnectivityMatrix& conn, const std::vector<Edge>& edges);
void write_ranking_csv(const std::filesystem::path& path, const ChannelRanking& ranking);

}  // namespace vmi::connectivity
