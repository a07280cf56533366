#include "vmi/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "vmi/error.hpp"
#include "vmi/random.hpp"

namespace vmi::nn {

nlohmann::json TrainConfig::to_json() const
{
    return {{"learning_rate", learning_rate},
            {"batch_size", batch_size},
            {"epochs", epochs},
            {"dropout", dropout},
            {"seed", seed},
            {"optimizer", optimizer == Optimizer::Adam ? "adam" : "sgd"},
            {"patience", patience},
            {"min_delta", min_delta}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j)
{
    TrainConfig c;
    auto read = [&j](const char* key, auto& dst) {
        if (!j.contains(key)) {
            return;
        }
        try {
            j.at(key).get_to(dst);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(key, e.what());
        }
    };
    read("learning_rate", c.learning_rate);
    read("batch_size", c.batch_size);
    read("epochs", c.epochs);
    read("dropout", c.dropout);
    read("seed", c.seed);
    read("patience", c.patience);
    read("min_delta", c.min_delta);
    std::string opt = "adam";
    read("optimizer", opt);
    if (opt == "adam") {
        c.optimizer = Optimizer::Adam;
    } else if (opt == "sgd") {
        c.optimizer = Optimizer::Sgd;
    } else {
        throw ConfigError("optimizer", "expected adam or sgd");
    }
    if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
        throw ConfigError("learning_rate", "must be finite and non-negative");
    }
    if (c.batch_size == 0) {
        throw ConfigError("batch_size", "must be positive");
    }
    if (!(c.dropout >= 0.0 && c.dropout < 1.0)) {
        throw ConfigError("dropout", "must lie in [0, 1)");
    }
    return c;
}

namespace {

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::size_t step = 0;
};

void apply_update(std::vector<Parameter*>& params, AdamState& state, const TrainConfig& cfg)
{
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    if (cfg.optimizer == Optimizer::Sgd) {
        for (Parameter* p : params) {
            for (std::size_t i = 0; i < p->value.size(); ++i) {
                p->value[i] -= cfg.learning_rate * p->grad[i];
            }
        }
        return;
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter* p = params[k];
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double g = p->grad[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            p->value[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        }
    }
}

}  // namespace

TrainResult train(Network& net, const core::EpochSet& windows, const TrainConfig& cfg)
{
    if (windows.trials() == 0) {
        throw EmptyInputError("no training windows");
    }
    if (cfg.batch_size == 0) {
        throw ConfigError("batch_size", "must be positive");
    }
    std::vector<Parameter*> params = net.parameters();
    AdamState adam;
    for (Parameter* p : params) {
        adam.m.emplace_back(p->value.size(), 0.0);
        adam.v.emplace_back(p->value.size(), 0.0);
    }
    net.reseed_dropout(derive_seed(cfg.seed, "train-dropout"));

    std::vector<std::size_t> order(windows.trials());
    std::iota(order.begin(), order.end(), 0);
    TrainResult result;
    double best = INFINITY;
    std::size_t stale = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::mt19937_64 rng = make_rng(cfg.seed, "train-shuffle", epoch);
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size();) {
            std::size_t end = std::min(order.size(), start + cfg.batch_size);
            // Batch norm needs two items; fold a lone leftover into this batch.
            if (order.size() - end == 1) {
                end = order.size();
            }
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            std::vector<int> labels;
            for (std::size_t i : idx) {
                labels.push_back(windows.label(i));
            }
            const Probabilities probs = net.forward(to_batch(windows, idx), Mode::Train);
            const double loss = net.backward(labels);
            if (!std::isfinite(loss)) {
                throw DivergenceError("training loss became non-finite at epoch " + std::to_string(epoch + 1),
                                      static_cast<int>(epoch + 1));
            }
            for (Eigen::Index r = 0; r < probs.rows(); ++r) {
                Eigen::Index best_c = 0;
                probs.row(r).maxCoeff(&best_c);
                correct += static_cast<int>(best_c) == labels[static_cast<std::size_t>(r)] ? 1 : 0;
            }
            loss_sum += loss * static_cast<double>(idx.size());
            apply_update(params, adam, cfg);
            start = end;
        }
        const double epoch_loss = loss_sum / static_cast<double>(order.size());
        result.loss_curve.push_back(epoch_loss);
        result.accuracy_curve.push_back(static_cast<double>(correct) / static_cast<double>(order.size()));

        if (epoch_loss < best - cfg.min_delta) {
            best = epoch_loss;
            stale = 0;
        } else if (cfg.patience > 0 && ++stale >= cfg.patience) {
            result.early_stopped = true;
            break;
        }
    }
    return result;
}

Probabilities predict_proba(Network& net, const core::EpochSet& windows, std::size_t batch_size)
{
    Probabilities out(static_cast<Eigen::Index>(windows.trials()), static_cast<Eigen::Index>(net.n_classes()));
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < windows.trials(); start += batch_size) {
        const std::size_t end = std::min(windows.trials(), start + batch_size);
        idx.resize(end - start);
        std::iota(idx.begin(), idx.end(), start);
        out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(end - start)) =
            net.forward(to_batch(windows, idx), Mode::Eval);
    }
    return out;
}

int predict_trial(const Probabilities& window_probs)
{
    if (window_probs.rows() == 0) {
        throw EmptyInputError("trial has no windows");
    }
    const Eigen::RowVectorXd mean = window_probs.colwise().mean();
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < mean.size(); ++k) {
        if (mean(k) > mean(best)) {
            best = k;
        }
    }
    return static_cast<int>(best);
}

TrialPrediction predict_trials(const core::EpochSet& windows, const Probabilities& window_probs)
{
    if (static_cast<std::size_t>(window_probs.rows()) != windows.trials()) {
        throw ShapeError("one probability row per window expected");
    }
    std::map<std::size_t, std::vector<Eigen::Index>> groups;
    for (std::size_t w = 0; w < windows.trials(); ++w) {
        groups[windows.source_trials()[w]].push_back(static_cast<Eigen::Index>(w));
    }
    TrialPrediction out;
    for (const auto& [trial, rows] : groups) {
        Probabilities sub(static_cast<Eigen::Index>(rows.size()), window_probs.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            sub.row(static_cast<Eigen::Index>(i)) = window_probs.row(rows[i]);
        }
        out.source_trials.push_back(trial);
        out.labels.push_back(windows.label(static_cast<std::size_t>(rows.front())));
        out.predicted.push_back(predict_trial(sub));
    }
    return out;
}

core::EpochSet slide_windows(const core::EpochSet& epochs, double win_s, double overlap)
{
    if (!(win_s > 0.0) || !(overlap >= 0.0 && overlap < 1.0)) {
        throw RangeError("window must be positive and overlap in [0, 1)");
    }
    const auto win = static_cast<std::size_t>(std::llround(win_s * epochs.fs()));
    const auto hop = static_cast<std::size_t>(std::llround(static_cast<double>(win) * (1.0 - overlap)));
    if (win == 0 || hop == 0) {
        throw RangeError("window or hop rounds to zero samples");
    }
    if (win > epochs.samples()) {
        throw RangeError("window of " + std::to_string(win) + " samples exceeds epoch length " +
                         std::to_string(epochs.samples()));
    }
    std::vector<int> labels;
    std::vector<std::size_t> sources;
    std::vector<double> data;
    for (std::size_t t = 0; t < epochs.trials(); ++t) {
        for (std::size_t start = 0; start + win <= epochs.samples(); start += hop) {
            labels.push_back(epochs.label(t));
            sources.push_back(epochs.source_trials()[t]);
            for (std::size_t c = 0; c < epochs.channels(); ++c) {
                const auto s = epochs.series(t, c);
                data.insert(data.end(), s.begin() + static_cast<std::ptrdiff_t>(start),
                            s.begin() + static_cast<std::ptrdiff_t>(start + win));
            }
        }
    }
    return core::EpochSet(epochs.channel_names(), epochs.fs(), epochs.t0_ms(), win, std::move(labels),
                          std::move(data), std::move(sources));
}

}  // namespace vmi::nn
