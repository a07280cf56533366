#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace vmi::csp {

// Linear discriminant with a shared (pooled) covariance:
// score_k(x) = w_k . x + b_k, w_k = S^-1 mu_k, b_k = -mu_k.S^-1 mu_k / 2 + log prior_k.
struct LdaModel {
    std::vector<int> classes;
    Eigen::MatrixXd weights;  // classes x features
    Eigen::VectorXd bias;
    Eigen::VectorXd priors;
};

// Ridge shrinkage of `shrinkage * trace / dim` on the pooled covariance.
// Needs at least two classes and finite features (DataError otherwise).
LdaModel lda_fit(const Eigen::MatrixXd& features, std::span<const int> labels, double shrinkage = 1e-6);

// samples x classes discriminant scores.
Eigen::MatrixXd lda_scores(const LdaModel& model, const Eigen::MatrixXd& features);

// Argmax score; ties go to the lowest class id.
std::vector<int> lda_predict(const LdaModel& model, const Eigen::MatrixXd& features);

}  // namespace vmi::csp
