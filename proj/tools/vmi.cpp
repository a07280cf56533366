#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>

#include <nlohmann/json.hpp>

#include "vmi/connectivity/plv.hpp"
#include "vmi/core/epochs.hpp"
#include "vmi/core/recording.hpp"
#include "vmi/core/synth.hpp"
#include "vmi/csp/ovr.hpp"
#include "vmi/dsp/ersp.hpp"
#include "vmi/dsp/psd.hpp"
#include "vmi/error.hpp"
#include "vmi/harness/cv.hpp"
#include "vmi/harness/manifest.hpp"
#include "vmi/harness/pipeline.hpp"
#include "vmi/harness/sweep.hpp"
#include "vmi/nn/network.hpp"
#include "vmi/nn/train.hpp"
#include "vmi/random.hpp"
#include "vmi/stats/stats.hpp"

namespace fs = std::filesystem;
using namespace vmi;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInternal = 1, kConfig = 2, kData = 3, kNumeric = 4 };

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::size_t threads = 1;
};

struct Inputs {
    std::string input;
    std::string rest;
    std::size_t k = 0;
    bool skip_cv = false;
};

json read_config(const Globals& g)
{
    if (g.config_path.empty()) {
        return json::object();
    }
    std::ifstream is(g.config_path);
    if (!is) {
        throw ConfigError("--config", "cannot open " + g.config_path);
    }
    try {
        json j = json::parse(is);
        if (!j.is_object()) {
            throw ConfigError("--config", "top level must be an object");
        }
        return j;
    } catch (const json::parse_error& e) {
        throw ConfigError("--config", e.what());
    }
}

// Commands that draw random numbers need a seed; the others parse the
// config with a placeholder one.
harness::PipelineConfig parse_config(const Globals& g, const json& raw, bool needs_seed)
{
    if (needs_seed || g.seed || raw.contains("seed")) {
        return harness::PipelineConfig::from_json(raw, g.seed);
    }
    return harness::PipelineConfig::from_json(raw, std::uint64_t{0});
}

class Run {
public:
    Run(const Globals& g, const std::string& command, bool needs_seed)
        : g_(g), raw_(read_config(g)), cfg_(parse_config(g, raw_, needs_seed)), manifest_(command), out_(g.out)
    {
        fs::create_directories(out_);
        manifest_.set_config(cfg_.to_json());
        if (needs_seed || g.seed || raw_.contains("seed")) {
            manifest_.add_seed("root", cfg_.seed);
        }
        if (!g.config_path.empty()) {
            manifest_.add_input(g.config_path);
        }
    }

    const harness::PipelineConfig& cfg() const { return cfg_; }
    harness::Manifest& manifest() { return manifest_; }
    const fs::path& out() const { return out_; }
    std::size_t threads() const { return g_.threads; }
    const json& raw() const { return raw_; }

    core::EpochSet epochs(const std::string& path)
    {
        require_input(path);
        manifest_.add_input(path);
        return core::load_epochs(path);
    }

    core::EegRecording recording(const std::string& path)
    {
        require_input(path);
        manifest_.add_input(path);
        return core::load_recording(path);
    }

    void finish() { manifest_.write(out_); }

private:
    static void require_input(const std::string& path)
    {
        if (path.empty()) {
            throw ConfigError("--input", "required for this command");
        }
    }

    const Globals& g_;
    json raw_;
    harness::PipelineConfig cfg_;
    harness::Manifest manifest_;
    fs::path out_;
};

void write_json(const fs::path& path, const json& j)
{
    std::ofstream os(path, std::ios::binary);
    os << j.dump(2) << '\n';
}

std::vector<std::string> names_of(const core::EpochSet& e, const std::vector<std::size_t>& idx)
{
    std::vector<std::string> out;
    for (std::size_t i : idx) {
        out.push_back(e.channel_names()[i]);
    }
    return out;
}

std::vector<std::size_t> all_trials(const core::EpochSet& e)
{
    std::vector<std::size_t> idx(e.trials());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

// Top-k channels on every trial; k = 0 keeps the montage.
core::EpochSet select_all(const core::EpochSet& e, std::size_t k, std::vector<std::string>& chosen)
{
    const auto idx = harness::select_on_trials(e, all_trials(e), k);
    chosen = names_of(e, idx);
    return e.subset_channels(idx);
}

void cmd_synth(Run& run)
{
    const auto rec = core::synth_dataset(run.cfg().synth);
    run.manifest().add_seed("synth", run.cfg().synth.seed);
    core::save_recording(rec, run.out() / "recording.eegb");
}

void cmd_preprocess(Run& run, const Inputs& in)
{
    const auto& c = run.cfg();
    const auto raw = run.recording(in.input);
    const auto filtered = harness::preprocess_recording(raw, c.band, c.target_fs);
    core::save_recording(filtered, run.out() / "filtered.eegb");
    core::save_epochs(core::epoch_recording(filtered, core::Phase::Imagery, c.imagery_window),
                      run.out() / "imagery.eegb");
    core::save_epochs(core::epoch_recording(filtered, core::Phase::Rest, c.rest_window), run.out() / "rest.eegb");
}

void cmd_connect(Run& run, const Inputs& in)
{
    const auto e = run.epochs(in.input);
    const auto pooled = connectivity::plv_matrix(e);
    connectivity::write_matrix_csv(run.out() / "plv_all.csv", pooled);
    connectivity::write_edges_csv(run.out() / "edges_all.csv", pooled,
                                  connectivity::strong_edges(pooled, run.cfg().edge_threshold));
    const auto per_class = connectivity::class_plv_matrices(e);
    for (std::size_t k = 0; k < per_class.size(); ++k) {
        const std::string tag = "class" + std::to_string(k);
        connectivity::write_matrix_csv(run.out() / ("plv_" + tag + ".csv"), per_class[k]);
        connectivity::write_edges_csv(run.out() / ("edges_" + tag + ".csv"), per_class[k],
                                      connectivity::strong_edges(per_class[k], run.cfg().edge_threshold));
    }
    connectivity::write_ranking_csv(run.out() / "ranking.csv", connectivity::rank_channels(per_class));
}

void cmd_select(Run& run, const Inputs& in)
{
    const auto e = run.epochs(in.input);
    const std::size_t k = in.k ? in.k : run.cfg().select_k;
    const auto ranking = connectivity::rank_channels(connectivity::class_plv_matrices(e));
    connectivity::write_ranking_csv(run.out() / "ranking.csv", ranking);
    const auto idx = connectivity::select_channels(ranking, k);
    write_json(run.out() / "selected.json", {{"k", k}, {"channels", names_of(e, idx)}, {"indices", idx}});
    core::save_epochs(e.subset_channels(idx), run.out() / "selected.eegb");
}

void cmd_stats(Run& run, const Inputs& in)
{
    const auto imagery = run.epochs(in.input);
    if (in.rest.empty()) {
        throw ConfigError("--rest", "required for this command");
    }
    const auto rest = run.epochs(in.rest);
    const auto seed = derive_seed(run.cfg().seed, "stats");
    run.manifest().add_seed("stats", seed);
    stats::write_stat_map_csv(run.out() / "stat_map.csv",
                              stats::stat_map(imagery, rest, run.cfg().stats_band, run.cfg().n_perm, seed));
}

void cmd_ersp(Run& run, const Inputs& in)
{
    const auto& c = run.cfg();
    const auto rec = harness::resample_recording(run.recording(in.input), c.target_fs);
    const auto trials = core::epoch_recording(rec, core::Phase::Trial, c.ersp_window);
    std::vector<std::size_t> chans;
    if (c.ersp_channels.empty()) {
        chans.resize(trials.channels());
        std::iota(chans.begin(), chans.end(), 0);
    } else {
        chans = rec.montage().indices_of(c.ersp_channels);
    }
    for (std::size_t ch : chans) {
        dsp::write_tfmap_csv(run.out() / ("ersp_" + trials.channel_names()[ch] + ".csv"),
                             dsp::ersp_channel(trials, ch, c.ersp));
    }
}

void cmd_psd(Run& run, const Inputs& in)
{
    const auto& c = run.cfg();
    const auto rec = harness::resample_recording(run.recording(in.input), c.target_fs);
    for (auto [phase, window, name] : {std::tuple{core::Phase::Imagery, c.imagery_window, "psd_imagery.csv"},
                                       std::tuple{core::Phase::Rest, c.rest_window, "psd_rest.csv"}}) {
        const auto e = core::epoch_recording(rec, phase, window);
        dsp::write_spectra_csv(run.out() / name, e.channel_names(), harness::mean_spectra(e, c.psd_seg_s, c.psd_overlap));
    }
}

void run_cv(Run& run, const core::EpochSet& e, harness::Method method)
{
    harness::CvOptions o = run.cfg().cv;
    o.method = method;
    o.threads = run.threads();
    for (std::size_t i = 0; i < o.seeds.size(); ++i) {
        run.manifest().add_seed("cv_" + std::to_string(i), o.seeds[i]);
    }
    const auto report = harness::cross_validate(e, o, run.cfg().dataset_id);
    write_json(run.out() / ("cv_" + harness::to_string(method) + ".json"), report.to_json());
    std::cout << harness::to_string(method) << " k=" << report.k_channels << ": "
              << harness::format_cell(100.0 * report.mean, 100.0 * report.stdev) << '\n';
}

void cmd_train_cnn(Run& run, const Inputs& in)
{
    const auto& c = run.cfg();
    const auto e = run.epochs(in.input);
    if (!in.skip_cv) {
        run_cv(run, e, harness::Method::Cnn);
    }
    std::vector<std::string> chosen;
    const auto sel = select_all(e, std::min(c.select_k, e.channels()), chosen);
    const auto windows = nn::slide_windows(sel, c.cv.win_s, c.cv.overlap);
    nn::ArchitectureOptions arch = c.cv.arch;
    arch.window = windows.samples();
    arch.dropout = c.cv.train.dropout;
    const auto init = derive_seed(c.seed, "cnn-final-init");
    nn::TrainConfig tc = c.cv.train;
    tc.seed = derive_seed(c.seed, "cnn-final-train");
    run.manifest().add_seed("cnn_init", init);
    run.manifest().add_seed("cnn_train", tc.seed);
    nn::Network net(nn::build_model(sel.channels(), arch), init);
    const auto result = nn::train(net, windows, tc);
    net.save(run.out() / "model.eegb", {{"channels", chosen}, {"train", tc.to_json()}});
    write_json(run.out() / "training.json", {{"channels", chosen},
                                             {"windows", windows.trials()},
                                             {"loss", result.loss_curve},
                                             {"accuracy", result.accuracy_curve},
                                             {"early_stopped", result.early_stopped}});
}

void cmd_train_csp(Run& run, const Inputs& in)
{
    const auto& c = run.cfg();
    const auto e = run.epochs(in.input);
    if (!in.skip_cv) {
        run_cv(run, e, harness::Method::CspLda);
    }
    std::vector<std::string> chosen;
    const auto sel = select_all(e, std::min(c.select_k, e.channels()), chosen);
    csp::CspLdaClassifier clf(c.cv.csp_m);
    clf.fit(sel);
    clf.save(run.out() / "csp_lda.eegb");
    write_json(run.out() / "training.json", {{"channels", chosen}, {"trials", sel.trials()}, {"m", c.cv.csp_m}});
}

void cmd_sweep(Run& run, const Inputs& in)
{
    const auto e = run.epochs(in.input);
    harness::SweepOptions so = run.cfg().sweep;
    so.base.threads = run.threads();
    for (std::size_t i = 0; i < so.base.seeds.size(); ++i) {
        run.manifest().add_seed("sweep_" + std::to_string(i), so.base.seeds[i]);
    }
    const auto table = harness::sweep(e, so, run.cfg().dataset_id);
    harness::write_sweep_csv(run.out() / "sweep.csv", {table});
    write_json(run.out() / "sweep.json", table.to_json());
    std::ifstream is(run.out() / "sweep.csv");
    std::cout << is.rdbuf();
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Visual-imagery EEG decoding toolkit"};
    app.require_subcommand(1);
    // Global flags may follow the subcommand.
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "JSON config file");
    app.add_option("--seed", g.seed, "Root seed (overrides the config)");
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads for folds and sweep cells")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    Inputs in;
    auto add = [&](const std::string& name, const std::string& help, const char* input_help) {
        auto* sub = app.add_subcommand(name, help);
        if (input_help) {
            sub->add_option("--input,-i", in.input, input_help);
        }
        return sub;
    };
    add("synth", "Synthesize a seeded recording", nullptr);
    add("preprocess", "Band-pass, decimate and cut imagery/rest epochs", "Recording (.eegb)");
    add("connect", "PLV matrices, strong edges and channel ranking", "Imagery epochs (.eegb)");
    add("select", "Top-k channels by class-wise PLV", "Imagery epochs (.eegb)")
        ->add_option("--k", in.k, "Channels to keep (default: connectivity.k)");
    add("stats", "Imagery vs rest permutation tests", "Imagery epochs (.eegb)")
        ->add_option("--rest", in.rest, "Rest epochs (.eegb)");
    add("ersp", "Time-frequency maps", "Recording (.eegb)");
    add("psd", "Imagery and rest spectra", "Recording (.eegb)");
    add("train-cnn", "Cross-validate and fit the CNN", "Imagery epochs (.eegb)")
        ->add_flag("--skip-cv", in.skip_cv, "Only fit the final model");
    add("train-csp", "Cross-validate and fit CSP-LDA", "Imagery epochs (.eegb)")
        ->add_flag("--skip-cv", in.skip_cv, "Only fit the final model");
    add("sweep", "Accuracy over channel counts", "Imagery epochs (.eegb)");
    add("report", "Full pipeline from synthesis or a recording to every artifact", nullptr);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (command == "report") {
            const json raw = read_config(g);
            const auto cfg = harness::PipelineConfig::from_json(raw, g.seed);
            const auto summary = harness::run_pipeline(cfg, g.out, g.threads, raw);
            std::cout << summary.json.dump(2) << '\n';
            return kOk;
        }
        const bool needs_seed = command == "synth" || command == "stats" || command == "train-cnn" ||
                                command == "train-csp" || command == "sweep";
        Run run(g, command, needs_seed);
        if (command == "synth") {
            cmd_synth(run);
        } else if (command == "preprocess") {
            cmd_preprocess(run, in);
        } else if (command == "connect") {
            cmd_connect(run, in);
        } else if (command == "select") {
            cmd_select(run, in);
        } else if (command == "stats") {
            cmd_stats(run, in);
        } else if (command == "ersp") {
            cmd_ersp(run, in);
        } else if (command == "psd") {
            cmd_psd(run, in);
        } else if (command == "train-cnn") {
            cmd_train_cnn(run, in);
        } else if (command == "train-csp") {
            cmd_train_csp(run, in);
        } else if (command == "sweep") {
            cmd_sweep(run, in);
        }
        run.finish();
        return kOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInternal;
    }
}
