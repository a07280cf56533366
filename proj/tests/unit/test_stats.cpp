#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "helpers.hpp"
#include "vmi/core/synth.hpp"
#include "vmi/error.hpp"
#include "vmi/harness/pipeline.hpp"
#include "vmi/stats/stats.hpp"

using namespace vmi;
using namespace vmi::stats;

namespace {

double ks_uniform(std::vector<double> p)
{
    std::sort(p.begin(), p.end());
    const double n = static_cast<double>(p.size());
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        d = std::max({d, static_cast<double>(i + 1) / n - p[i], p[i] - static_cast<double>(i) / n});
    }
    return d;
}

core::EpochSet synth_phase(const core::EegRecording& rec, core::Phase phase, core::WindowMs w)
{
    return core::epoch_recording(rec, phase, w);
}

}  // namespace

TEST_CASE("band power localizes a tone")
{
    const auto e = testutil::make_epochs(2, 1, 1000, 250, {0, 1}, [](auto, auto, std::size_t s) {
        return std::sin(2.0 * std::numbers::pi * 10.0 * static_cast<double>(s) / 250.0);
    });
    const auto alpha = band_power(e, {8.0, 13.0});
    const auto delta = band_power(e, {1.0, 4.0});
    CHECK(alpha(0, 0) > 100.0 * delta(0, 0));
    CHECK(alpha(0, 0) == doctest::Approx(0.5).epsilon(0.05));

    const auto zero = testutil::make_epochs(3, 2, 500, 250, {0, 1, 2}, [](auto, auto, auto) { return 0.0; });
    CHECK(band_power(zero, {0.5, 13.0}).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(band_power(e, {13.0, 8.0}), RangeError);
    CHECK_THROWS_AS(band_power(e, {1.0, 126.0}), RangeError);
}

TEST_CASE("white-noise band power follows the flat spectrum")
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> d;
    const auto e = testutil::make_epochs(40, 1, 1000, 250, std::vector<int>(40, 0), [&](auto, auto, auto) { return d(rng); });
    const auto bp = band_power(e, {10.0, 40.0});
    CHECK(bp.mean() == doctest::Approx(30.0 / 125.0).epsilon(0.2));
}

TEST_CASE("paired t")
{
    const std::vector<double> a{3, 5, 7, 9};
    const std::vector<double> b{2, 3, 4, 5};
    CHECK(paired_t(a, b) == doctest::Approx(3.873).epsilon(1e-3));
    CHECK(paired_t(b, a) == doctest::Approx(-paired_t(a, b)));
    CHECK(paired_t(a, a) == 0.0);
    std::vector<double> a2 = a, b2 = b;
    for (std::size_t i = 0; i < 4; ++i) {
        a2[i] += 17.5;
        b2[i] += 17.5;
    }
    CHECK(paired_t(a2, b2) == doctest::Approx(paired_t(a, b)));
    const std::vector<double> c{2, 4, 6, 8};
    CHECK(std::isinf(paired_t(a, c)));
    CHECK(paired_t(a, c) > 0);
    CHECK(paired_t(c, a) < 0);
    CHECK_THROWS_AS(paired_t(std::vector<double>{1}, std::vector<double>{2}), RangeError);
    CHECK_THROWS_AS(paired_t(a, std::vector<double>{1, 2}), ShapeError);
}

TEST_CASE("exhaustive permutation on four constant differences")
{
    const std::vector<double> a{5, 6, 7, 8};
    const std::vector<double> b{4, 5, 6, 7};
    CHECK(permutation_test(a, b, 10000, 1) == doctest::Approx(0.125));
    CHECK(permutation_test(a, b, 10000, 1, PermutationMode::Exhaustive) == doctest::Approx(0.125));
    CHECK(permutation_test(a, a, 10000, 1) == 1.0);
    CHECK_THROWS_AS(permutation_test(a, std::vector<double>{1, 2}, 100, 1), ShapeError);
}

TEST_CASE("Monte Carlo agrees with exhaustive enumeration")
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> d;
    for (std::size_t n = 4; n <= 12; ++n) {
        for (int rep = 0; rep < 3; ++rep) {
            std::vector<double> a(n), b(n);
            for (std::size_t i = 0; i < n; ++i) {
                a[i] = d(rng) + 0.4;
                b[i] = d(rng);
            }
            const double ex = permutation_test(a, b, 10000, 3, PermutationMode::Exhaustive);
            const double mc = permutation_test(a, b, 10000, 100 + n * 10 + static_cast<std::size_t>(rep), PermutationMode::MonteCarlo);
            CAPTURE(n);
            CHECK(std::abs(ex - mc) < 0.02);
        }
    }
}

TEST_CASE("null p-values are uniform")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> d;
    std::vector<double> ps;
    for (int run = 0; run < 1000; ++run) {
        std::vector<double> a(30), b(30);
        for (std::size_t i = 0; i < 30; ++i) {
            a[i] = d(rng);
            b[i] = d(rng);
        }
        const double p = permutation_test(a, b, 200, static_cast<std::uint64_t>(run));
        REQUIRE(p > 0.0);
        REQUIRE(p <= 1.0);
        ps.push_back(p);
    }
    CHECK(ks_uniform(ps) < 0.05);
}

TEST_CASE("Monte Carlo p is never zero")
{
    const std::vector<double> a{10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24};
    const std::vector<double> b(15, 0.0);
    const double p = permutation_test(a, b, 50, 1, PermutationMode::MonteCarlo);
    CHECK(p > 0.0);
    CHECK(p == doctest::Approx(1.0 / 51.0));
}

TEST_CASE("stat map on identical phases flags nothing")
{
    std::mt19937_64 rng(4);
    std::normal_distribution<double> d;
    const auto e = testutil::make_epochs(20, 5, 500, 250, std::vector<int>(20, 0), [&](auto, auto, auto) { return d(rng); });
    const auto m = stat_map(e, e, {0.5, 13.0}, 500, 1);
    for (std::size_t c = 0; c < 5; ++c) {
        CHECK_FALSE(m.significant[c]);
        CHECK(m.t_values[c] == 0.0);
        CHECK(m.p_values[c] == 1.0);
    }
    const auto fewer = e.subset_trials(std::vector<std::size_t>{0, 1, 2});
    CHECK_THROWS_AS(stat_map(e, fewer, {0.5, 13.0}, 100, 1), ShapeError);
}

namespace {

struct PlantedRun {
    core::EpochSet imagery;
    core::EpochSet rest;
    std::size_t fp1 = 0;
    std::size_t o1 = 0;
};

PlantedRun planted_run(std::uint64_t seed)
{
    auto spec = core::default_synth_spec(seed);
    spec.n_trials_per_class = 13;  // 52 trials
    spec.fs = 250;
    spec.snr_db = 20.0;
    const auto fp1 = spec.montage.index_of("Fp1");
    const auto o1 = spec.montage.index_of("O1");
    for (auto& set : spec.planted_channels) {
        set = {fp1, o1};
    }
    const auto rec = harness::preprocess_recording(core::synth_dataset(spec), {0.5, 13.0}, 250);
    return {synth_phase(rec, core::Phase::Imagery, {500, 4500}), synth_phase(rec, core::Phase::Rest, {-4500, -500}),
            fp1, o1};
}

}  // namespace

TEST_CASE("planted imagery effect is detected on its channels only")
{
    // Each run holds 62 null channels at alpha 0.01, so single runs see 0.62
    // false positives on average; the tolerance applies to that rate.
    std::size_t false_pos = 0;
    const int runs = 6;
    for (int r = 0; r < runs; ++r) {
        const auto run = planted_run(200 + static_cast<std::uint64_t>(r));
        const auto m = stat_map(run.imagery, run.rest, {0.5, 13.0}, 2000, 5);
        CHECK(m.significant[run.fp1]);
        CHECK(m.significant[run.o1]);
        CHECK(m.p_values[run.fp1] <= 0.01);
        CHECK(m.t_values[run.fp1] > 0.0);
        for (std::size_t c = 0; c < m.significant.size(); ++c) {
            REQUIRE(m.p_values[c] > 0.0);
            REQUIRE(m.p_values[c] <= 1.0);
            REQUIRE(m.significant[c] == (m.p_values[c] <= StatMap::alpha));
            if (c != run.fp1 && c != run.o1 && m.significant[c]) {
                ++false_pos;
            }
        }
    }
    CHECK(static_cast<double>(false_pos) / runs <= 1.0);
}

TEST_CASE("stat map follows channel reordering")
{
    const auto run = planted_run(300);
    const auto m = stat_map(run.imagery, run.rest, {0.5, 13.0}, 1000, 5);
    std::vector<std::size_t> order{run.o1, 5, run.fp1, 40};
    const auto m2 = stat_map(run.imagery.subset_channels(order), run.rest.subset_channels(order), {0.5, 13.0}, 1000, 5);
    for (std::size_t i = 0; i < order.size(); ++i) {
        CHECK(m2.channel_names[i] == m.channel_names[order[i]]);
        CHECK(m2.t_values[i] == m.t_values[order[i]]);
        CHECK(m2.p_values[i] == m.p_values[order[i]]);
    }
}

TEST_CASE("stat map CSV")
{
    testutil::TempDir dir("stats_csv");
    StatMap m{{"Fp1", "O1"}, {2.5, -0.5}, {0.004, 0.6}, {true, false}};
    write_stat_map_csv(dir / "s.csv", m);
    std::ifstream is(dir / "s.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line == "channel,t,p,significant");
    std::getline(is, line);
    CHECK(line == "Fp1,2.5,0.004,1");
    std::getline(is, line);
    CHECK(line == "O1,-0.5,0.6,0");
}
