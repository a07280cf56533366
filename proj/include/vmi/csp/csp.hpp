#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vmi/core/epochs.hpp"

namespace vmi::csp {

// Common spatial patterns for one two-class problem. Rows of all_filters are
// the generalized eigenvectors of C_a w = lambda (C_a + C_b) w, sorted by
// descending eigenvalue and scaled so that W (C_a + C_b) W^T = I.
struct CspModel {
    std::vector<std::string> channel_names;
    Eigen::MatrixXd all_filters;
    Eigen::VectorXd eigenvalues;
    std::size_t m = 2;

    // Indices of the retained rows: the first m and the last m.
    std::vector<std::size_t> selected() const;
    // 2m x channels.
    Eigen::MatrixXd filters() const;
};

// Trace-normalized covariance of one (centered) trial.
Eigen::MatrixXd trial_covariance(const core::EpochSet& epochs, std::size_t trial);

// Mean of trace-normalized trial covariances plus a ridge of
// 1e-6 * trace / channels on the diagonal.
Eigen::MatrixXd class_covariance(const core::EpochSet& epochs);

// Needs at least 2 trials per class (RangeError) and matching channels (ShapeError).
// NumericError if the composite covariance stays singular after the ridge.
CspModel csp_fit(const core::EpochSet& class_a, const core::EpochSet& class_b, std::size_t m = 2);

// trials x 2m features: log(var_k / sum_j var_j) of the retained filter
// outputs. DegenerateInputError for an all-zero trial.
Eigen::MatrixXd csp_features(const CspModel& model, const core::EpochSet& epochs);

}  // namespace vmi::csp
