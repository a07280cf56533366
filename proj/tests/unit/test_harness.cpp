#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "vmi/connectivity/plv.hpp"
#include "vmi/error.hpp"
#include "vmi/harness/config.hpp"
#include "vmi/harness/cv.hpp"
#include "vmi/harness/manifest.hpp"
#include "vmi/harness/pipeline.hpp"
#include "vmi/harness/sweep.hpp"
#include "vmi/random.hpp"

using namespace vmi;
using namespace vmi::harness;

namespace {

// Class c: channels 2c and 2c+1 share a 6 Hz oscillation with extra power;
// the rest is independent noise.
core::EpochSet coupled(std::size_t per_class, std::size_t channels, std::size_t samples, int fs, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> ph(0.0, 6.283185307179586);
    const auto labels = testutil::balanced_labels(per_class);
    std::vector<double> phase(labels.size());
    for (double& p : phase) {
        p = ph(rng);
    }
    return testutil::make_epochs(labels.size(), channels, samples, fs, labels,
                                 [&](std::size_t t, std::size_t c, std::size_t s) {
                                     const auto hot = static_cast<std::size_t>(labels[t]) * 2;
                                     double v = n(rng);
                                     if (c == hot || c == hot + 1) {
                                         v += 2.0 * std::sin(6.283185307179586 * 6.0 * static_cast<double>(s) / fs +
                                                             phase[t]);
                                     }
                                     return v;
                                 });
}

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

CvOptions csp_options(std::size_t k, std::size_t folds, std::vector<std::uint64_t> seeds)
{
    CvOptions o;
    o.method = Method::CspLda;
    o.k_channels = k;
    o.folds = folds;
    o.seeds = std::move(seeds);
    return o;
}

// A CNN small enough for unit tests: 100-sample windows (2 s at 50 Hz).
CvOptions tiny_cnn_options()
{
    CvOptions o;
    o.method = Method::Cnn;
    o.folds = 2;
    o.seeds = {3};
    o.arch.window = 100;
    o.arch.temporal_kernel = 11;
    o.arch.temporal_maps = 4;
    o.arch.spatial_maps = 4;
    o.arch.block3_maps = 4;
    o.arch.block4_maps = 4;
    o.arch.conv_kernel = 3;
    o.arch.pool = 2;
    o.train.epochs = 1;
    o.train.batch_size = 8;
    return o;
}

}  // namespace

TEST_CASE("stratified folds")
{
    const auto labels = testutil::balanced_labels(50);
    const auto folds = stratified_folds(labels, 5, 9);
    REQUIRE(folds.size() == 5);
    std::vector<int> seen(labels.size(), 0);
    for (const auto& f : folds) {
        CHECK(f.test.size() == 40);
        CHECK(f.train.size() == 160);
        std::array<int, 4> per{};
        for (std::size_t t : f.test) {
            ++per[static_cast<std::size_t>(labels[t])];
            ++seen[t];
        }
        CHECK(per == std::array<int, 4>{10, 10, 10, 10});
        std::vector<std::size_t> both;
        std::set_intersection(f.train.begin(), f.train.end(), f.test.begin(), f.test.end(), std::back_inserter(both));
        CHECK(both.empty());
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
    CHECK(stratified_folds(labels, 5, 9)[2].test == folds[2].test);
    CHECK(stratified_folds(labels, 5, 10)[0].test != folds[0].test);

    std::vector<int> thin = testutil::balanced_labels(4);
    CHECK_THROWS_AS(stratified_folds(thin, 5, 1), StratificationError);
}

TEST_CASE("csp cross-validation report")
{
    const auto data = coupled(10, 12, 200, 50, 21);
    const auto report = cross_validate(data, csp_options(4, 5, {1, 2}), "toy");
    REQUIRE(report.folds.size() == 10);
    CHECK(report.dataset == "toy");
    CHECK(report.config["csp_m_effective"] == 2);

    SUBCASE("mean and spread follow the fold list")
    {
        std::vector<double> acc;
        for (const auto& f : report.folds) {
            acc.push_back(f.accuracy);
            CHECK(f.window_accuracy == f.accuracy);
        }
        const double mean = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
        CHECK(std::abs(report.mean - mean) < 1e-9);
        CHECK(std::abs(report.stdev - sample_std(acc)) < 1e-9);
        const double m1 = std::accumulate(acc.begin(), acc.begin() + 5, 0.0) / 5.0;
        const double m2 = std::accumulate(acc.begin() + 5, acc.end(), 0.0) / 5.0;
        const std::vector<double> seed_means{m1, m2};
        CHECK(std::abs(report.std_between_seeds - sample_std(seed_means)) < 1e-9);
    }
    SUBCASE("confusion rows count every trial once per seed")
    {
        REQUIRE(report.confusion_per_seed.size() == 2);
        for (const auto& conf : report.confusion_per_seed) {
            for (const auto& row : conf) {
                CHECK(std::accumulate(row.begin(), row.end(), std::size_t{0}) == 10);
            }
        }
    }
    SUBCASE("selection sees training trials only")
    {
        for (const auto& f : report.folds) {
            std::vector<std::size_t> both;
            std::set_intersection(f.train_trials.begin(), f.train_trials.end(), f.test_trials.begin(),
                                  f.test_trials.end(), std::back_inserter(both));
            CHECK(both.empty());
            CHECK(f.train_trials.size() + f.test_trials.size() == data.trials());
            const auto picked = select_on_trials(data, f.train_trials, 4);
            std::vector<std::string> names;
            for (std::size_t i : picked) {
                names.push_back(data.channel_names()[i]);
            }
            CHECK(f.selected_channels == names);
        }
    }
    SUBCASE("json echo")
    {
        const auto j = report.to_json();
        CHECK(j["folds"].size() == 10);
        CHECK(j["method"] == "csp_lda");
        CHECK(j["k_channels"] == 4);
    }
}

TEST_CASE("thread count does not change results")
{
    const auto data = coupled(6, 8, 150, 50, 22);
    auto o = csp_options(4, 3, {1, 2});
    const auto a = cross_validate(data, o);
    o.threads = 3;
    const auto b = cross_validate(data, o);
    CHECK(a.to_json() == b.to_json());
}

TEST_CASE("augmentation multiplies windows but keeps the partition")
{
    const auto data = coupled(4, 6, 200, 50, 23);
    auto o = tiny_cnn_options();
    o.k_channels = 4;
    const auto with = cross_validate(data, o);
    o.augment = false;
    const auto without = cross_validate(data, o);
    REQUIRE(with.folds.size() == without.folds.size());
    for (std::size_t i = 0; i < with.folds.size(); ++i) {
        CHECK(with.folds[i].train_trials == without.folds[i].train_trials);
        CHECK(with.folds[i].test_trials == without.folds[i].test_trials);
        CHECK(with.folds[i].selected_channels == without.folds[i].selected_channels);
        CHECK(with.folds[i].train_windows == 3 * without.folds[i].train_windows);
        CHECK(with.folds[i].test_windows == 3 * without.folds[i].test_windows);
        CHECK(without.folds[i].train_windows == with.folds[i].train_trials.size());
    }
}

TEST_CASE("shuffled labels give chance accuracy")
{
    auto data = coupled(10, 8, 200, 50, 24);
    double sum = 0.0;
    const int runs = 4;
    for (int r = 0; r < runs; ++r) {
        auto labels = data.labels();
        std::mt19937_64 rng(700 + static_cast<std::uint64_t>(r));
        std::shuffle(labels.begin(), labels.end(), rng);
        sum += cross_validate(data.with_labels(labels), csp_options(4, 5, {1})).mean;
    }
    CHECK(std::abs(sum / runs - 0.25) <= 0.10);
}

TEST_CASE("cell formatting")
{
    CHECK(format_cell(67.5, 1.52) == "67.50% (±1.52)");
    CHECK(format_cell(30.97, 0.0) == "30.97% (±0.00)");
    CHECK(format_cell(100.0, 12.345) == "100.00% (±12.35)");
}

TEST_CASE("channel sweep")
{
    const auto data = coupled(4, 64, 120, 50, 25);
    SweepOptions o;
    o.methods = {Method::CspLda};
    o.base = csp_options(0, 2, {1});
    const auto table = sweep(data, o, "toy");
    REQUIRE(table.cells.size() == 7);
    CHECK(table.channel_counts == kChannelCounts);
    for (std::size_t c = 0; c < 7; ++c) {
        CHECK(table.cell(0, c).k_channels == kChannelCounts[c]);
        CHECK(table.cell(0, c).folds.front().selected_channels.size() == kChannelCounts[c]);
    }
    CHECK(table.cell(0, 6).folds.front().selected_channels == data.channel_names());
    CHECK(table.cell(0, 0).config["csp_m_effective"] == 1);

    testutil::TempDir dir("sweep");
    write_sweep_csv(dir / "sweep.csv", {table});
    std::istringstream csv(read_file(dir / "sweep.csv"));
    std::string header, row, extra;
    std::getline(csv, header);
    std::getline(csv, row);
    CHECK(header == "dataset,method,2ch,4ch,8ch,16ch,20ch,32ch,64ch");
    CHECK(std::regex_match(row, std::regex(R"(toy,csp_lda(,\d+\.\d\d% \(±\d+\.\d\d\)){7})")));
    CHECK_FALSE(std::getline(csv, extra));
}

TEST_CASE("helpers")
{
    CHECK(effective_csp_m(2, 2) == 1);
    CHECK(effective_csp_m(2, 3) == 1);
    CHECK(effective_csp_m(2, 4) == 2);
    CHECK(effective_csp_m(2, 64) == 2);
    CHECK(effective_csp_m(3, 1) == 1);

    CHECK(sample_std(std::vector<double>{1.0}) == 0.0);
    CHECK(sample_std(std::vector<double>{1.0, 3.0}) == doctest::Approx(std::sqrt(2.0)));

    CHECK(method_from_string("cnn") == Method::Cnn);
    CHECK(method_from_string("csp_lda") == Method::CspLda);
    CHECK_THROWS_AS(method_from_string("svm"), ConfigError);

    std::vector<int> hit(50, 0);
    parallel_for(50, 4, [&](std::size_t i) { hit[i] += 1; });
    CHECK(std::all_of(hit.begin(), hit.end(), [](int v) { return v == 1; }));
    try {
        parallel_for(10, 3, [](std::size_t i) {
            if (i == 4 || i == 7) {
                throw RangeError("job " + std::to_string(i));
            }
        });
        FAIL("no exception");
    } catch (const RangeError& e) {
        CHECK(std::string(e.what()) == "job 4");
    }
}

TEST_CASE("pipeline config")
{
    const nlohmann::json base = {{"seed", 5}, {"dataset", {{"synth", {{"n_trials_per_class", 10}}}}}};

    SUBCASE("missing seed")
    {
        try {
            PipelineConfig::from_json({{"dataset", {{"id", "x"}}}});
            FAIL("no exception");
        } catch (const ConfigError& e) {
            CHECK(e.key() == "seed");
        }
        CHECK(PipelineConfig::from_json(nlohmann::json::object(), 9).seed == 9);
    }
    SUBCASE("unknown and mistyped keys name the key")
    {
        auto j = base;
        j["cnn"] = {{"learning_rte", 0.1}};
        try {
            PipelineConfig::from_json(j);
            FAIL("no exception");
        } catch (const ConfigError& e) {
            CHECK(e.key() == "cnn.learning_rte");
        }
        j = base;
        j["connectivity"] = {{"k", "eight"}};
        try {
            PipelineConfig::from_json(j);
            FAIL("no exception");
        } catch (const ConfigError& e) {
            CHECK(e.key() == "connectivity.k");
        }
        j = base;
        j["cv"] = {{"methods", {"cnn", "svm"}}};
        CHECK_THROWS_AS(PipelineConfig::from_json(j), ConfigError);
    }
    SUBCASE("seed override and derived seeds")
    {
        const auto c = PipelineConfig::from_json(base, 77);
        CHECK(c.seed == 77);
        CHECK(c.synth.seed == derive_seed(77, "synth"));
        CHECK(c.synth.n_trials_per_class == 10);
        CHECK(c.select_k == 8);
    }
    SUBCASE("normalized echo")
    {
        auto j = base;
        j["cv"] = {{"n_seeds", 3}, {"folds", 4}};
        const auto echo = PipelineConfig::from_json(j).to_json();
        CHECK(echo["seed"] == 5);
        CHECK(echo["dataset"]["synth"]["seed"] == derive_seed(5, "synth"));
        CHECK(echo["cv"]["seeds"].size() == 3);
        CHECK(echo["cv"]["folds"] == 4);
        CHECK(echo["connectivity"]["k"] == 8);

        j["dataset"]["synth"]["seed"] = 123;
        CHECK(PipelineConfig::from_json(j).synth.seed == 123);
    }
}

TEST_CASE("manifest")
{
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

    testutil::TempDir dir("manifest");
    std::filesystem::create_directories(dir / "sub");
    std::ofstream(dir / "b.csv") << "x,y\n1,2\n";
    std::ofstream(dir / "sub" / "a.json") << "{}\n";

    auto make = [&] {
        Manifest m("report");
        m.set_config({{"seed", 3}});
        m.add_seed("root", 3);
        m.add_seed("synth", derive_seed(3, "synth"));
        return m;
    };
    const auto doc = make().write(dir.path());
    const auto first = read_file(dir / "manifest.json");
    make().write(dir.path());
    CHECK(read_file(dir / "manifest.json") == first);

    REQUIRE(doc["outputs"].size() == 2);
    CHECK(doc["outputs"][0]["path"] == "b.csv");
    CHECK(doc["outputs"][1]["path"] == "sub/a.json");
    CHECK(doc["outputs"][0]["sha256"] == sha256_hex("x,y\n1,2\n"));
    CHECK(doc["seeds"]["root"] == 3);
    CHECK(first.find("manifest.json") == std::string::npos);

    std::ofstream(dir / "b.csv") << "x,y\n1,3\n";
    make().write(dir.path());
    CHECK(read_file(dir / "manifest.json") != first);

    CHECK_THROWS_AS(sha256_file(dir / "nope"), FormatError);
}
