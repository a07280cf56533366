#include "vmi/csp/ovr.hpp"

#include <algorithm>
#include <set>

#include "vmi/container.hpp"
#include "vmi/error.hpp"

namespace vmi::csp {

void CspLdaClassifier::fit(const core::EpochSet& train)
{
    const std::set<int> present(train.labels().begin(), train.labels().end());
    if (present.size() < 2) {
        throw StratificationError("CSP-LDA needs at least two classes in the training set");
    }
    classes_.assign(present.begin(), present.end());
    csp_.clear();
    lda_.clear();
    for (int cls : classes_) {
        std::vector<std::size_t> one;
        std::vector<std::size_t> rest;
        std::vector<int> binary;
        for (std::size_t t = 0; t < train.trials(); ++t) {
            const bool is_one = train.label(t) == cls;
            (is_one ? one : rest).push_back(t);
            binary.push_back(is_one ? 1 : 0);
        }
        CspModel model = csp_fit(train.subset_trials(one), train.subset_trials(rest), m_);
        const Eigen::MatrixXd features = csp_features(model, train);
        lda_.push_back(lda_fit(features, binary));
        csp_.push_back(std::move(model));
    }
}

Eigen::MatrixXd CspLdaClassifier::decision_scores(const core::EpochSet& epochs) const
{
    if (csp_.empty()) {
        throw DataError("classifier is not fitted");
    }
    Eigen::MatrixXd scores(static_cast<Eigen::Index>(epochs.trials()), static_cast<Eigen::Index>(classes_.size()));
    for (std::size_t k = 0; k < classes_.size(); ++k) {
        const Eigen::MatrixXd s = lda_scores(lda_[k], csp_features(csp_[k], epochs));
        // Column 1 is the "one" class, column 0 the rest.
        scores.col(static_cast<Eigen::Index>(k)) = s.col(1) - s.col(0);
    }
    return scores;
}

std::vector<int> CspLdaClassifier::predict(const core::EpochSet& epochs) const
{
    const Eigen::MatrixXd scores = decision_scores(epochs);
    std::vector<int> out;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < scores.cols(); ++j) {
            if (scores(i, j) > scores(i, best)) {
                best = j;
            }
        }
        out.push_back(classes_[static_cast<std::size_t>(best)]);
    }
    return out;
}

void CspLdaClassifier::save(const std::filesystem::path& path) const
{
    if (csp_.empty()) {
        throw DataError("classifier is not fitted");
    }
    nlohmann::json header;
    header["kind"] = "csp_lda";
    header["scheme"] = "one-vs-rest";
    header["m"] = m_;
    header["classes"] = classes_;
    header["channel_names"] = csp_.front().channel_names;
    header["layout"] = "per class: filters[channels x channels], eigenvalues[channels], lda weights[2 x 2m], "
                       "lda bias[2], lda priors[2]";
    std::vector<float> payload;
    auto push = [&payload](const auto& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                payload.push_back(static_cast<float>(m(i, j)));
            }
        }
    };
    for (std::size_t k = 0; k < classes_.size(); ++k) {
        push(csp_[k].all_filters);
        push(csp_[k].eigenvalues);
        push(lda_[k].weights);
        push(lda_[k].bias);
        push(lda_[k].priors);
    }
    write_container(path, header, payload);
}

CspLdaClassifier CspLdaClassifier::load(const std::filesystem::path& path)
{
    Container c = read_container(path);
    const auto& h = c.header;
    if (!h.contains("kind") || h["kind"] != "csp_lda") {
        throw FormatError("not a CSP-LDA model file");
    }
    CspLdaClassifier clf(h.at("m").get<std::size_t>());
    clf.classes_ = h.at("classes").get<std::vector<int>>();
    const auto names = h.at("channel_names").get<std::vector<std::string>>();
    const auto ch = static_cast<Eigen::Index>(names.size());
    const auto f = static_cast<Eigen::Index>(2 * clf.m_);
    const std::size_t per_class = static_cast<std::size_t>(ch * ch + ch + 2 * f + 2 + 2);
    if (c.payload.size() != per_class * clf.classes_.size()) {
        throw CorruptionError("CSP-LDA payload size does not match header");
    }
    std::size_t pos = 0;
    auto take = [&](Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols) {
        m.resize(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) {
                m(i, j) = c.payload[pos++];
            }
        }
    };
    for (std::size_t k = 0; k < clf.classes_.size(); ++k) {
        CspModel csp;
        csp.channel_names = names;
        csp.m = clf.m_;
        take(csp.all_filters, ch, ch);
        Eigen::MatrixXd tmp;
        take(tmp, ch, 1);
        csp.eigenvalues = tmp.col(0);
        LdaModel lda;
        lda.classes = {0, 1};
        take(lda.weights, 2, f);
        take(tmp, 2, 1);
        lda.bias = tmp.col(0);
        take(tmp, 2, 1);
        lda.priors = tmp.col(0);
        clf.csp_.push_back(std::move(csp));
        clf.lda_.push_back(std::move(lda));
    }
    return clf;
}

}  // namespace vmi::csp
