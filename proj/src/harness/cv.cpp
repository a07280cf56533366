#include "vmi/harness/cv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "vmi/connectivity/plv.hpp"
#include "vmi/csp/ovr.hpp"
#include "vmi/error.hpp"
#include "vmi/nn/network.hpp"
#include "vmi/random.hpp"

namespace vmi::harness {

std::string to_string(Method m)
{
    return m == Method::Cnn ? "cnn" : "csp_lda";
}

Method method_from_string(const std::string& name)
{
    if (name == "cnn") {
        return Method::Cnn;
    }
    if (name == "csp_lda" || name == "csp-lda") {
        return Method::CspLda;
    }
    throw ConfigError("method", "unknown method '" + name + "' (expected cnn or csp_lda)");
}

std::vector<Fold> stratified_folds(const std::vector<int>& labels, std::size_t k, std::uint64_t seed)
{
    if (k < 2) {
        throw RangeError("need at least two folds");
    }
    std::vector<Fold> folds(k);
    std::mt19937_64 rng = make_rng(seed, "cv-folds");
    const int max_label = labels.empty() ? -1 : *std::max_element(labels.begin(), labels.end());
    std::vector<std::size_t> assigned(labels.size(), 0);
    for (int cls = 0; cls <= max_label; ++cls) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cls) {
                members.push_back(i);
            }
        }
        if (members.empty()) {
            continue;
        }
        if (members.size() < k) {
            throw StratificationError("class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                                      " trials, fewer than " + std::to_string(k) + " folds");
        }
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t r = 0; r < members.size(); ++r) {
            assigned[members[r]] = r % k;
        }
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t f = 0; f < k; ++f) {
            (assigned[i] == f ? folds[f].test : folds[f].train).push_back(i);
        }
    }
    return folds;
}

nlohmann::json CvOptions::to_json() const
{
    return {{"method", to_string(method)},
            {"k_channels", k_channels},
            {"folds", folds},
            {"seeds", seeds},
            {"train", train.to_json()},
            {"activation", arch.activation == nn::Activation::Elu    ? "elu"
                           : arch.activation == nn::Activation::Relu ? "relu"
                                                                     : "identity"},
            {"win_s", win_s},
            {"overlap", overlap},
            {"augment", augment},
            {"csp_m", csp_m}};
}

nlohmann::json EvalReport::to_json() const
{
    nlohmann::json j;
    j["dataset"] = dataset;
    j["method"] = to_string(method);
    j["k_channels"] = k_channels;
    j["accuracy_level"] = "trial";
    j["mean_percent"] = 100.0 * mean;
    j["std_percent"] = 100.0 * stdev;
    j["std_decomposition"] = {{"folds_x_seeds", 100.0 * stdev},
                              {"between_seeds", 100.0 * std_between_seeds},
                              {"within_seeds", 100.0 * std_within_seeds}};
    j["window_mean_percent"] = 100.0 * window_mean;
    j["window_std_percent"] = 100.0 * window_stdev;
    auto folds_json = nlohmann::json::array();
    for (const FoldResult& f : folds) {
        folds_json.push_back({{"seed", f.seed},
                              {"fold", f.fold},
                              {"accuracy", f.accuracy},
                              {"window_accuracy", f.window_accuracy},
                              {"selected_channels", f.selected_channels},
                              {"train_trials", f.train_trials.size()},
                              {"test_trials", f.test_trials.size()},
                              {"train_windows", f.train_windows},
                              {"test_windows", f.test_windows},
                              {"confusion", f.confusion},
                              {"loss_curve", f.loss_curve}});
    }
    j["folds"] = std::move(folds_json);
    j["confusion_per_seed"] = confusion_per_seed;
    j["config"] = config;
    return j;
}

std::size_t effective_csp_m(std::size_t m, std::size_t n_channels)
{
    return std::max<std::size_t>(1, std::min(m, n_channels / 2));
}

double sample_std(std::span<const double> values)
{
    if (values.size() < 2) {
        return 0.0;
    }
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn)
{
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::vector<std::size_t> select_on_trials(const core::EpochSet& dataset, std::span<const std::size_t> trials,
                                          std::size_t k)
{
    const std::size_t n = dataset.channels();
    if (k > n) {
        throw RangeError("k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " channels");
    }
    if (k == 0 || k == n) {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        return all;
    }
    const auto conns = connectivity::class_plv_matrices(dataset.subset_trials(trials));
    return connectivity::select_channels(connectivity::rank_channels(conns), k);
}

std::vector<std::size_t> select_on_trials(const core::EpochSet& dataset, std::span<const Eigen::MatrixXd> trial_plv,
                                          std::span<const std::size_t> trials, std::size_t k)
{
    const std::size_t n = dataset.channels();
    if (k > n) {
        throw RangeError("k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " channels");
    }
    if (k == 0 || k == n) {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        return all;
    }
    if (trial_plv.size() != dataset.trials()) {
        throw ShapeError("per-trial PLV cache does not match the dataset");
    }
    const auto conns =
        connectivity::class_plv_matrices(dataset.channel_names(), dataset.labels(), trial_plv, trials);
    return connectivity::select_channels(connectivity::rank_channels(conns), k);
}

namespace {

// Central window of each trial, used when augmentation is switched off.
core::EpochSet central_windows(const core::EpochSet& epochs, double win_s)
{
    const auto win = static_cast<std::size_t>(std::llround(win_s * epochs.fs()));
    if (win == 0 || win > epochs.samples()) {
        throw RangeError("window does not fit the epochs");
    }
    const std::size_t start = (epochs.samples() - win) / 2;
    std::vector<double> data;
    for (std::size_t t = 0; t < epochs.trials(); ++t) {
        for (std::size_t c = 0; c < epochs.channels(); ++c) {
            const auto s = epochs.series(t, c);
            data.insert(data.end(), s.begin() + static_cast<std::ptrdiff_t>(start),
                        s.begin() + static_cast<std::ptrdiff_t>(start + win));
        }
    }
    return core::EpochSet(epochs.channel_names(), epochs.fs(), epochs.t0_ms(), win, epochs.labels(),
                          std::move(data), epochs.source_trials());
}

FoldResult run_fold(const core::EpochSet& dataset, const CvOptions& o, std::span<const Eigen::MatrixXd> trial_plv,
                    std::uint64_t seed, std::size_t fold_index, const Fold& fold)
{
    FoldResult r;
    r.seed = seed;
    r.fold = fold_index;
    const auto channels = select_on_trials(dataset, trial_plv, fold.train, o.k_channels);
    for (std::size_t c : channels) {
        r.selected_channels.push_back(dataset.channel_names()[c]);
    }
    const core::EpochSet train = dataset.subset_trials(fold.train).subset_channels(channels);
    const core::EpochSet test = dataset.subset_trials(fold.test).subset_channels(channels);
    r.train_trials = train.source_trials();
    r.test_trials = test.source_trials();

    std::vector<int> truth;
    std::vector<int> predicted;
    if (o.method == Method::CspLda) {
        // Two filter pairs need four channels; fewer channels keep one pair.
        csp::CspLdaClassifier clf(effective_csp_m(o.csp_m, train.channels()));
        clf.fit(train);
        predicted = clf.predict(test);
        truth = test.labels();
        r.train_windows = train.trials();
        r.test_windows = test.trials();
        r.window_accuracy = -1.0;
    } else {
        const auto windows = [&](const core::EpochSet& e) {
            return o.augment ? nn::slide_windows(e, o.win_s, o.overlap) : central_windows(e, o.win_s);
        };
        const core::EpochSet train_w = windows(train);
        const core::EpochSet test_w = windows(test);
        r.train_windows = train_w.trials();
        r.test_windows = test_w.trials();

        nn::ArchitectureOptions arch = o.arch;
        arch.window = train_w.samples();
        arch.dropout = o.train.dropout;
        nn::Network net(nn::build_model(channels.size(), arch), derive_seed(seed, "cv-cnn-init", fold_index));
        nn::TrainConfig cfg = o.train;
        cfg.seed = derive_seed(seed, "cv-cnn-train", fold_index);
        r.loss_curve = nn::train(net, train_w, cfg).loss_curve;

        const nn::Probabilities probs = nn::predict_proba(net, test_w);
        std::size_t hits = 0;
        for (Eigen::Index w = 0; w < probs.rows(); ++w) {
            Eigen::Index best = 0;
            probs.row(w).maxCoeff(&best);
            hits += static_cast<int>(best) == test_w.label(static_cast<std::size_t>(w)) ? 1 : 0;
        }
        r.window_accuracy = static_cast<double>(hits) / static_cast<double>(probs.rows());
        const nn::TrialPrediction tp = nn::predict_trials(test_w, probs);
        truth = tp.labels;
        predicted = tp.predicted;
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        hits += truth[i] == predicted[i] ? 1 : 0;
        r.confusion.at(static_cast<std::size_t>(truth[i])).at(static_cast<std::size_t>(predicted[i]))++;
    }
    r.accuracy = static_cast<double>(hits) / static_cast<double>(truth.size());
    if (r.window_accuracy < 0.0) {
        r.window_accuracy = r.accuracy;
    }
    return r;
}

}  // namespace

EvalReport cross_validate(const core::EpochSet& dataset, const CvOptions& o, const std::string& dataset_id)
{
    if (dataset.trials() == 0) {
        throw EmptyInputError("empty dataset");
    }
    if (o.seeds.empty()) {
        throw ConfigError("seeds", "at least one seed is required");
    }
    for (int l : dataset.labels()) {
        if (l < 0 || l >= core::kNumClasses) {
            throw RangeError("label " + std::to_string(l) + " outside the four classes");
        }
    }
    std::vector<std::vector<Fold>> splits;
    for (std::uint64_t seed : o.seeds) {
        splits.push_back(stratified_folds(dataset.labels(), o.folds, seed));
        for (const Fold& f : splits.back()) {
            for (int cls = 0; cls < core::kNumClasses; ++cls) {
                const bool in_data =
                    std::find(dataset.labels().begin(), dataset.labels().end(), cls) != dataset.labels().end();
                const bool in_test = std::any_of(f.test.begin(), f.test.end(),
                                                 [&](std::size_t i) { return dataset.label(i) == cls; });
                if (in_data && !in_test) {
                    throw StratificationError("class " + std::to_string(cls) + " missing from a test fold");
                }
            }
        }
    }

    EvalReport report;
    report.dataset = dataset_id;
    report.method = o.method;
    report.k_channels = o.k_channels == 0 ? dataset.channels() : o.k_channels;
    report.config = o.to_json();
    if (o.method == Method::CspLda) {
        report.config["csp_m_effective"] = effective_csp_m(o.csp_m, report.k_channels);
    }
    report.folds.resize(o.seeds.size() * o.folds);
    if (report.k_channels > dataset.channels()) {
        throw RangeError("k = " + std::to_string(report.k_channels) + " exceeds " +
                         std::to_string(dataset.channels()) + " channels");
    }
    auto plv = o.trial_plv;
    if (!plv && report.k_channels < dataset.channels()) {
        plv = std::make_shared<const std::vector<Eigen::MatrixXd>>(connectivity::trial_plv(dataset));
    }
    const std::span<const Eigen::MatrixXd> plv_view =
        plv ? std::span<const Eigen::MatrixXd>(*plv) : std::span<const Eigen::MatrixXd>();
    parallel_for(report.folds.size(), o.threads, [&](std::size_t job) {
        const std::size_t s = job / o.folds;
        const std::size_t f = job % o.folds;
        report.folds[job] = run_fold(dataset, o, plv_view, o.seeds[s], f, splits[s][f]);
    });

    std::vector<double> acc;
    std::vector<double> wacc;
    std::vector<double> seed_means;
    std::vector<double> seed_stds;
    for (std::size_t s = 0; s < o.seeds.size(); ++s) {
        std::vector<double> per_seed;
        Confusion conf{};
        for (std::size_t f = 0; f < o.folds; ++f) {
            const FoldResult& r = report.folds[s * o.folds + f];
            acc.push_back(r.accuracy);
            wacc.push_back(r.window_accuracy);
            per_seed.push_back(r.accuracy);
            for (std::size_t i = 0; i < conf.size(); ++i) {
                for (std::size_t j = 0; j < conf.size(); ++j) {
                    conf[i][j] += r.confusion[i][j];
                }
            }
        }
        report.confusion_per_seed.push_back(conf);
        seed_means.push_back(std::accumulate(per_seed.begin(), per_seed.end(), 0.0) /
                             static_cast<double>(per_seed.size()));
        seed_stds.push_back(sample_std(per_seed));
    }
    report.mean = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
    report.stdev = sample_std(acc);
    report.window_mean = std::accumulate(wacc.begin(), wacc.end(), 0.0) / static_cast<double>(wacc.size());
    report.window_stdev = sample_std(wacc);
    report.std_between_seeds = sample_std(seed_means);
    report.std_within_seeds =
        std::accumulate(seed_stds.begin(), seed_stds.end(), 0.0) / static_cast<double>(seed_stds.size());
    return report;
}

EvalReport csp_lda_4class(const core::EpochSet& epochs, std::size_t m, std::size_t folds,
                          std::vector<std::uint64_t> seeds)
{
    for (int cls = 0; cls < core::kNumClasses; ++cls) {
        if (epochs.trials_of_class(cls).empty()) {
            throw StratificationError("class " + std::to_string(cls) + " absent from the dataset");
        }
    }
    CvOptions o;
    o.method = Method::CspLda;
    o.k_channels = 0;
    o.folds = folds;
    o.seeds = std::move(seeds);
    o.csp_m = m;
    return cross_validate(epochs, o);
}

}  // namespace vmi::harness
