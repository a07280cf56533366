#include "vmi/connectivity/plv.hpp"

#include <algorithm>
#include <complex>
#include <fstream>
#include <numeric>

#include "vmi/core/timeline.hpp"
#include "vmi/dsp/hilbert.hpp"
#include "vmi/error.hpp"
#include "vmi/format.hpp"

namespace vmi::connectivity {

std::vector<Eigen::MatrixXd> trial_plv(const core::EpochSet& epochs)
{
    if (epochs.samples() < 2) {
        throw RangeError("PLV needs epochs of at least two samples");
    }
    const auto C = static_cast<Eigen::Index>(epochs.channels());
    const auto T = static_cast<Eigen::Index>(epochs.samples());
    // Series shorter than the analytic-signal minimum are zero-padded to 4.
    const std::size_t n_fft = std::max<std::size_t>(epochs.samples(), 4);
    dsp::FftPlan plan(n_fft);

    std::vector<Eigen::MatrixXd> out;
    out.reserve(epochs.trials());
    Eigen::MatrixXcd phases(C, T);
    std::vector<double> padded(n_fft, 0.0);
    for (std::size_t t = 0; t < epochs.trials(); ++t) {
        for (Eigen::Index c = 0; c < C; ++c) {
            auto x = epochs.series(t, static_cast<std::size_t>(c));
            std::copy(x.begin(), x.end(), padded.begin());
            const auto a = dsp::analytic_signal(padded, plan);
            for (Eigen::Index s = 0; s < T; ++s) {
                const double mag = std::abs(a[static_cast<std::size_t>(s)]);
                phases(c, s) = mag > 0.0 ? a[static_cast<std::size_t>(s)] * (1.0 / mag) : std::complex<double>(1.0, 0.0);
            }
        }
        const Eigen::MatrixXcd g = phases * phases.adjoint();
        out.push_back(g.cwiseAbs() / static_cast<double>(T));
    }
    return out;
}

ConnectivityMatrix average_plv(const std::vector<std::string>& channel_names,
                               std::span<const Eigen::MatrixXd> per_trial, std::span<const std::size_t> trials)
{
    if (trials.empty()) {
        throw EmptyInputError("PLV needs at least one trial");
    }
    const auto n = static_cast<Eigen::Index>(channel_names.size());
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t t : trials) {
        if (t >= per_trial.size()) {
            throw RangeError("trial index out of range");
        }
        acc += per_trial[t];
    }
    acc /= static_cast<double>(trials.size());

    ConnectivityMatrix out;
    out.channel_names = channel_names;
    out.values = (0.5 * (acc + acc.transpose())).cwiseMax(0.0).cwiseMin(1.0);
    out.values.diagonal().setOnes();
    return out;
}

ConnectivityMatrix plv_matrix(const core::EpochSet& epochs)
{
    if (epochs.trials() == 0) {
        throw EmptyInputError("PLV needs at least one trial");
    }
    const auto per_trial = trial_plv(epochs);
    std::vector<std::size_t> all(epochs.trials());
    std::iota(all.begin(), all.end(), 0);
    return average_plv(epochs.channel_names(), per_trial, all);
}

std::vector<Edge> strong_edges(const ConnectivityMatrix& conn, double threshold)
{
    std::vector<Edge> edges;
    const auto n = conn.values.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (conn.values(i, j) > threshold) {
                edges.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), conn.values(i, j)});
            }
        }
    }
    std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.value > b.value; });
    return edges;
}

ChannelRanking rank_channels(std::span<const ConnectivityMatrix> conns)
{
    if (conns.empty()) {
        throw EmptyInputError("no connectivity matrices to rank");
    }
    const auto& names = conns.front().channel_names;
    const auto n = static_cast<Eigen::Index>(names.size());
    for (const auto& m : conns) {
        if (m.channel_names != names || m.values.rows() != n || m.values.cols() != n) {
            throw ShapeError("connectivity matrices do not share a montage");
        }
    }
    ChannelRanking ranking;
    ranking.channel_names = names;
    for (Eigen::Index c = 0; c < n; ++c) {
        double score = 0.0;
        for (const auto& m : conns) {
            double best = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j != c) {
                    best = std::max(best, m.values(c, j));
                }
            }
            score += best;
        }
        ranking.entries.push_back({static_cast<std::size_t>(c), score / static_cast<double>(conns.size())});
    }
    std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                     [](const RankedChannel& a, const RankedChannel& b) { return a.score > b.score; });
    return ranking;
}

std::vector<std::size_t> select_channels(const ChannelRanking& ranking, std::size_t k)
{
    if (k > ranking.entries.size()) {
        throw RangeError("cannot select " + std::to_string(k) + " of " + std::to_string(ranking.entries.size()) +
                         " channels");
    }
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back(ranking.entries[i].index);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<ConnectivityMatrix> class_plv_matrices(const core::EpochSet& epochs)
{
    if (epochs.trials() == 0) {
        throw EmptyInputError("PLV needs at least one trial");
    }
    const auto per_trial = trial_plv(epochs);
    std::vector<std::size_t> all(epochs.trials());
    std::iota(all.begin(), all.end(), 0);
    return class_plv_matrices(epochs.channel_names(), epochs.labels(), per_trial, all);
}

std::vector<ConnectivityMatrix> class_plv_matrices(const std::vector<std::string>& channel_names,
                                                   const std::vector<int>& labels,
                                                   std::span<const Eigen::MatrixXd> per_trial,
                                                   std::span<const std::size_t> trials)
{
    std::vector<ConnectivityMatrix> out;
    for (int c = 0; c < core::kNumClasses; ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t t : trials) {
            if (labels.at(t) == c) {
                idx.push_back(t);
            }
        }
        if (!idx.empty()) {
            out.push_back(average_plv(channel_names, per_trial, idx));
        }
    }
    return out;
}

void write_matrix_csv(const std::filesystem::path& path, const ConnectivityMatrix& conn)
{
    std::ofstream os(path);
    os << "channel";
    for (const auto& n : conn.channel_names) {
        os << ',' << n;
    }
    os << '\n';
    for (Eigen::Index i = 0; i < conn.values.rows(); ++i) {
        os << conn.channel_names[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < conn.values.cols(); ++j) {
            os << ',' << format_number(conn.values(i, j));
        }
        os << '\n';
    }
}

void write_edges_csv(const std::filesystem::path& path, const ConnectivityMatrix& conn, const std::vector<Edge>& edges)
{
    std::ofstream os(path);
    os << "src,dst,plv\n";
    for (const auto& e : edges) {
        os << conn.channel_names[e.i] << ',' << conn.channel_names[e.j] << ',' << format_number(e.value) << '\n';
    }
}

void write_ranking_csv(const std::filesystem::path& path, const ChannelRanking& ranking)
{
    std::ofstream os(path);
    os << "rank,channel,index,score\n";
    for (std::size_t r = 0; r < ranking.entries.size(); ++r) {
        const auto& e = ranking.entries[r];
        os << r + 1 << ',' << ranking.channel_names[e.index] << ',' << e.index << ',' << format_number(e.score) << '\n';
    }
}

}  // namespace vmi::connectivity
