#include "vmi/csp/lda.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <set>

#include "vmi/error.hpp"

namespace vmi::csp {

LdaModel lda_fit(const Eigen::MatrixXd& features, std::span<const int> labels, double shrinkage)
{
    const Eigen::Index n = features.rows();
    const Eigen::Index d = features.cols();
    if (static_cast<std::size_t>(n) != labels.size()) {
        throw ShapeError("one label per feature row required");
    }
    if (!features.allFinite()) {
        throw DegenerateInputError("LDA features must be finite");
    }
    const std::set<int> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) {
        throw DataError("LDA needs at least two classes");
    }
    LdaModel model;
    model.classes.assign(distinct.begin(), distinct.end());
    const auto k = static_cast<Eigen::Index>(model.classes.size());
    if (n <= k) {
        throw DataError("LDA needs more samples than classes");
    }

    Eigen::MatrixXd means = Eigen::MatrixXd::Zero(k, d);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    auto class_row = [&](int label) {
        return static_cast<Eigen::Index>(std::lower_bound(model.classes.begin(), model.classes.end(), label) -
                                         model.classes.begin());
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index r = class_row(labels[static_cast<std::size_t>(i)]);
        means.row(r) += features.row(i);
        counts(r) += 1.0;
    }
    for (Eigen::Index r = 0; r < k; ++r) {
        means.row(r) /= counts(r);
    }
    Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::RowVectorXd diff = features.row(i) - means.row(class_row(labels[static_cast<std::size_t>(i)]));
        pooled += diff.transpose() * diff;
    }
    pooled /= static_cast<double>(n - k);
    const double ridge = shrinkage * std::max(pooled.trace(), 1e-300) / static_cast<double>(d);
    pooled.diagonal().array() += ridge;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(pooled);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw NumericError("pooled covariance is singular");
    }
    model.priors = counts / static_cast<double>(n);
    model.weights.resize(k, d);
    model.bias.resize(k);
    for (Eigen::Index r = 0; r < k; ++r) {
        const Eigen::VectorXd mu = means.row(r).transpose();
        const Eigen::VectorXd w = ldlt.solve(mu);
        model.weights.row(r) = w.transpose();
        model.bias(r) = -0.5 * mu.dot(w) + std::log(model.priors(r));
    }
    if (!model.weights.allFinite()) {
        throw NumericError("LDA solution is not finite");
    }
    return model;
}

Eigen::MatrixXd lda_scores(const LdaModel& model, const Eigen::MatrixXd& features)
{
    if (features.cols() != model.weights.cols()) {
        throw ShapeError("feature dimension does not match the LDA model");
    }
    return (features * model.weights.transpose()).rowwise() + model.bias.transpose();
}

std::vector<int> lda_predict(const LdaModel& model, const Eigen::MatrixXd& features)
{
    const Eigen::MatrixXd scores = lda_scores(model, features);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < scores.cols(); ++j) {
            if (scores(i, j) > scores(i, best)) {
                best = j;
            }
        }
        out.push_back(model.classes[static_cast<std::size_t>(best)]);
    }
    return out;
}

}  // namespace vmi::csp
