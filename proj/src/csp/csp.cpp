#include "vmi/csp/csp.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "vmi/error.hpp"

namespace vmi::csp {

std::vector<std::size_t> CspModel::selected() const
{
    const auto n = static_cast<std::size_t>(all_filters.rows());
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < m; ++i) {
        idx.push_back(i);
    }
    for (std::size_t i = 0; i < m; ++i) {
        idx.push_back(n - m + i);
    }
    return idx;
}

Eigen::MatrixXd CspModel::filters() const
{
    const auto idx = selected();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), all_filters.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        out.row(static_cast<Eigen::Index>(r)) = all_filters.row(static_cast<Eigen::Index>(idx[r]));
    }
    return out;
}

Eigen::MatrixXd trial_covariance(const core::EpochSet& epochs, std::size_t trial)
{
    const Eigen::MatrixXd x = epochs.trial(trial);
    const Eigen::MatrixXd centered = x.colwise() - x.rowwise().mean();
    Eigen::MatrixXd cov = centered * centered.transpose();
    const double tr = cov.trace();
    if (!(tr > 0.0)) {
        throw DegenerateInputError("trial " + std::to_string(trial) + " has zero variance on every channel");
    }
    return cov / tr;
}

Eigen::MatrixXd class_covariance(const core::EpochSet& epochs)
{
    if (epochs.trials() == 0) {
        throw EmptyInputError("covariance of an empty class");
    }
    const auto c = static_cast<Eigen::Index>(epochs.channels());
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(c, c);
    for (std::size_t t = 0; t < epochs.trials(); ++t) {
        acc += trial_covariance(epochs, t);
    }
    acc /= static_cast<double>(epochs.trials());
    acc.diagonal().array() += 1e-6 * acc.trace() / static_cast<double>(c);
    return acc;
}

CspModel csp_fit(const core::EpochSet& class_a, const core::EpochSet& class_b, std::size_t m)
{
    if (class_a.trials() < 2 || class_b.trials() < 2) {
        throw RangeError("CSP needs at least two trials per class");
    }
    if (class_a.channel_names() != class_b.channel_names()) {
        throw ShapeError("CSP classes use different channels");
    }
    const std::size_t channels = class_a.channels();
    if (m == 0 || 2 * m > channels) {
        throw RangeError("need 1 <= m and 2m <= channels");
    }
    const Eigen::MatrixXd ca = class_covariance(class_a);
    const Eigen::MatrixXd cb = class_covariance(class_b);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(ca, ca + cb);
    if (solver.info() != Eigen::Success) {
        throw NumericError("composite covariance is singular");
    }
    const auto n = static_cast<Eigen::Index>(channels);
    CspModel model;
    model.channel_names = class_a.channel_names();
    model.m = m;
    model.all_filters.resize(n, n);
    model.eigenvalues.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        // Solver returns ascending eigenvalues.
        const Eigen::Index src = n - 1 - i;
        Eigen::VectorXd w = solver.eigenvectors().col(src);
        Eigen::Index arg = 0;
        w.cwiseAbs().maxCoeff(&arg);
        if (w(arg) < 0) {
            w = -w;
        }
        model.all_filters.row(i) = w.transpose();
        model.eigenvalues(i) = solver.eigenvalues()(src);
    }
    return model;
}

Eigen::MatrixXd csp_features(const CspModel& model, const core::EpochSet& epochs)
{
    if (epochs.channel_names() != model.channel_names) {
        throw ShapeError("epoch channels do not match the CSP model");
    }
    const Eigen::MatrixXd w = model.filters();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(epochs.trials()), w.rows());
    for (std::size_t t = 0; t < epochs.trials(); ++t) {
        const Eigen::MatrixXd z = w * epochs.trial(t);
        const Eigen::MatrixXd centered = z.colwise() - z.rowwise().mean();
        const Eigen::VectorXd var = centered.rowwise().squaredNorm() / static_cast<double>(z.cols());
        const double total = var.sum();
        if (!(total > 0.0) || (var.array() <= 0.0).any()) {
            throw DegenerateInputError("zero variance in CSP projection of trial " + std::to_string(t));
        }
        out.row(static_cast<Eigen::Index>(t)) = (var / total).array().log().transpose();
    }
    return out;
}

}  // namespace vmi::csp
