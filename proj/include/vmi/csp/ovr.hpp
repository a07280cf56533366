#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "vmi/core/epochs.hpp"
#include "vmi/csp/csp.hpp"
#include "vmi/csp/lda.hpp"

namespace vmi::csp {

// Four-class CSP+LDA built from one-vs-rest binary problems. Each class gets
// its own CSP filters (class vs all others) and a two-class LDA on the 2m
// log-variance features; the signed discriminant (one minus rest) is the
// class score and the largest score wins, ties to the lowest class id.
class CspLdaClassifier {
public:
    explicit CspLdaClassifier(std::size_t m = 2) : m_(m) {}

    void fit(const core::EpochSet& train);
    Eigen::MatrixXd decision_scores(const core::EpochSet& epochs) const;  // trials x classes
    std::vector<int> predict(const core::EpochSet& epochs) const;

    std::size_t m() const noexcept { return m_; }
    const std::vector<int>& classes() const noexcept { return classes_; }
    const std::vector<CspModel>& csp_models() const noexcept { return csp_; }
    const std::vector<LdaModel>& lda_models() const noexcept { return lda_; }

    void save(const std::filesystem::path& path) const;
    static CspLdaClassifier load(const std::filesystem::path& path);

private:
    std::size_t m_;
    std::vector<int> classes_;
    std::vector<CspModel> csp_;
    std::vector<LdaModel> lda_;
};

}  // namespace vmi::csp
