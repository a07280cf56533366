#include <chrono>
#include <cstdio>

#include "vmi/core/synth.hpp"
#include "vmi/dsp/filter.hpp"
#include "vmi/harness/cv.hpp"

using namespace vmi;

int main(int argc, char** argv)
{
    const std::size_t epochs = argc > 1 ? std::stoul(argv[1]) : 5;
    const std::size_t k = argc > 2 ? std::stoul(argv[2]) : 8;
    const std::string method = argc > 3 ? argv[3] : "cnn";
    const std::size_t folds = argc > 4 ? std::stoul(argv[4]) : 5;
    const bool shuffle = argc > 5 && std::string(argv[5]) == "shuffle";
    auto t0 = std::chrono::steady_clock::now();
    core::SynthSpec spec = core::default_synth_spec(11);
    spec.fs = 250;
    const core::EegRecording rec = core::synth_dataset(spec);
    core::SignalMatrix filtered(rec.data().rows(), rec.data().cols());
    for (Eigen::Index c = 0; c < rec.data().rows(); ++c) {
        std::vector<double> x(rec.data().row(c).begin(), rec.data().row(c).end());
        const auto y = dsp::bandpass(x, 0.5, 13.0, 250);
        for (Eigen::Index i = 0; i < filtered.cols(); ++i) filtered(c, i) = static_cast<float>(y[static_cast<std::size_t>(i)]);
    }
    core::EpochSet ep = core::epoch_recording(rec.with_data(filtered, 250), core::Phase::Imagery, {500, 4500});
    if (shuffle) {
        auto labels = ep.labels();
        std::mt19937_64 rng(5);
        std::shuffle(labels.begin(), labels.end(), rng);
        ep = ep.with_labels(labels);
    }
    auto t1 = std::chrono::steady_clock::now();
    std::printf("prep %.1f s\n", std::chrono::duration<double>(t1 - t0).count());
    harness::CvOptions o;
    o.method = harness::method_from_string(method);
    o.k_channels = k;
    o.folds = folds;
    o.seeds = {1};
    o.train.epochs = epochs;
    const auto rep = harness::cross_validate(ep, o, "demo");
    auto t2 = std::chrono::steady_clock::now();
    std::printf("acc %.3f +- %.3f window %.3f  (%.1f s)\n", rep.mean, rep.stdev, rep.window_mean,
                std::chrono::duration<double>(t2 - t1).count());
    for (auto& f : rep.folds) {
        std::printf("fold %zu acc %.3f loss:", f.fold, f.accuracy);
        for (double l : f.loss_curve) std::printf(" %.3f", l);
        std::printf(" sel:");
        for (auto& s : f.selected_channels) std::printf(" %s", s.c_str());
        std::printf("\n");
    }
}
