#include "vmi/harness/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include "vmi/connectivity/plv.hpp"
#include "vmi/dsp/filter.hpp"
#include "vmi/dsp/psd.hpp"
#include "vmi/error.hpp"
#include "vmi/harness/config.hpp"
#include "vmi/harness/manifest.hpp"
#include "vmi/random.hpp"

namespace vmi::harness {

namespace {

stats::Band read_band(ConfigSection& s, const std::string& key, stats::Band fallback)
{
    const auto v = s.get<std::vector<double>>(key, {fallback.lo_hz, fallback.hi_hz});
    if (v.size() != 2 || !(v[0] >= 0.0 && v[0] < v[1])) {
        throw ConfigError(s.dotted(key), "expected [lo, hi] with 0 <= lo < hi");
    }
    return {v[0], v[1]};
}

core::WindowMs read_window(ConfigSection& s, const std::string& key, core::WindowMs fallback)
{
    const auto v = s.get<std::vector<double>>(key, {fallback.start_ms, fallback.end_ms});
    if (v.size() != 2 || !(v[0] < v[1])) {
        throw ConfigError(s.dotted(key), "expected [start_ms, end_ms] with start < end");
    }
    return {v[0], v[1]};
}

std::vector<Method> read_methods(ConfigSection& s, const std::string& key, std::vector<Method> fallback)
{
    if (!s.has(key)) {
        s.get<nlohmann::json>(key, {});
        return fallback;
    }
    std::vector<Method> out;
    for (const auto& name : s.require<std::vector<std::string>>(key)) {
        try {
            out.push_back(method_from_string(name));
        } catch (const ConfigError&) {
            throw ConfigError(s.dotted(key), "unknown method '" + name + "'");
        }
    }
    if (out.empty()) {
        throw ConfigError(s.dotted(key), "at least one method is required");
    }
    return out;
}

std::vector<std::uint64_t> derived_seeds(std::uint64_t root, const char* stream, std::size_t n)
{
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(derive_seed(root, stream, i));
    }
    return out;
}

nn::Activation read_activation(ConfigSection& s)
{
    const auto name = s.get<std::string>("activation", "elu");
    if (name == "elu") {
        return nn::Activation::Elu;
    }
    if (name == "relu") {
        return nn::Activation::Relu;
    }
    if (name == "identity") {
        return nn::Activation::Identity;
    }
    throw ConfigError(s.dotted("activation"), "expected elu, relu or identity");
}

std::vector<std::string> method_names(const std::vector<Method>& ms)
{
    std::vector<std::string> out;
    for (Method m : ms) {
        out.push_back(to_string(m));
    }
    return out;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j, std::optional<std::uint64_t> seed_override)
{
    PipelineConfig c;
    ConfigSection root(j, "");
    if (seed_override) {
        root.get<nlohmann::json>("seed", {});
        c.seed = *seed_override;
    } else {
        c.seed = root.require<std::uint64_t>("seed");
    }

    {
        auto ds = root.section("dataset");
        c.dataset_id = ds.get<std::string>("id", c.dataset_id);
        if (ds.has("recording")) {
            c.recording_path = ds.require<std::string>("recording");
        }
        auto sy = ds.section("synth");
        c.synth = core::default_synth_spec(derive_seed(c.seed, "synth"));
        c.synth.seed = sy.get<std::uint64_t>("seed", c.synth.seed);
        c.synth.n_trials_per_class = sy.get<std::size_t>("n_trials_per_class", c.synth.n_trials_per_class);
        c.synth.fs = sy.get<int>("fs", c.synth.fs);
        if (sy.has("snr_db") && sy.require<nlohmann::json>("snr_db").is_string()) {
            if (sy.require<std::string>("snr_db") != "inf") {
                throw ConfigError(sy.dotted("snr_db"), "expected a number or \"inf\"");
            }
            c.synth.snr_db = INFINITY;
        } else {
            c.synth.snr_db = sy.get<double>("snr_db", c.synth.snr_db);
        }
        c.synth.coupling = sy.get<double>("coupling", c.synth.coupling);
        c.synth.signal_uv = sy.get<double>("signal_uv", c.synth.signal_uv);
        c.synth.onset_ms = sy.get<double>("onset_ms", c.synth.onset_ms);
        if (sy.has("carrier_hz")) {
            const auto v = sy.require<std::vector<double>>("carrier_hz");
            if (v.size() != core::kNumClasses) {
                throw ConfigError(sy.dotted("carrier_hz"), "expected one frequency per class");
            }
            std::copy(v.begin(), v.end(), c.synth.carrier_hz.begin());
        }
        if (sy.has("planted_channels")) {
            const auto v = sy.require<std::vector<std::vector<std::string>>>("planted_channels");
            if (v.size() != core::kNumClasses) {
                throw ConfigError(sy.dotted("planted_channels"), "expected one channel list per class");
            }
            for (int k = 0; k < core::kNumClasses; ++k) {
                try {
                    c.synth.planted_channels[k] = c.synth.montage.indices_of(v[k]);
                } catch (const DataError& e) {
                    throw ConfigError(sy.dotted("planted_channels"), e.what());
                }
            }
        }
        try {
            c.synth.validate();
        } catch (const DataError& e) {
            throw ConfigError("dataset.synth", e.what());
        }
        sy.finish();
        ds.finish();
    }
    {
        auto pp = root.section("preprocess");
        c.band = read_band(pp, "band_hz", c.band);
        c.target_fs = pp.get<int>("target_fs", c.target_fs);
        if (c.target_fs != 250 && c.target_fs != 1000) {
            throw ConfigError(pp.dotted("target_fs"), "expected 250 or 1000");
        }
        if (c.band.lo_hz <= 0.0 || c.band.hi_hz >= c.target_fs / 2.0) {
            throw ConfigError(pp.dotted("band_hz"), "band must lie inside (0, fs/2)");
        }
        pp.finish();
    }
    {
        auto ep = root.section("epochs");
        c.imagery_window = read_window(ep, "imagery_ms", c.imagery_window);
        c.rest_window = read_window(ep, "rest_ms", c.rest_window);
        c.ersp_window = read_window(ep, "ersp_ms", c.ersp_window);
        ep.finish();
    }
    {
        auto cn = root.section("connectivity");
        c.edge_threshold = cn.get<double>("threshold", c.edge_threshold);
        c.select_k = cn.get<std::size_t>("k", c.select_k);
        if (c.select_k == 0) {
            throw ConfigError(cn.dotted("k"), "must be positive");
        }
        cn.finish();
    }
    {
        auto st = root.section("stats");
        c.stats_band = read_band(st, "band_hz", c.stats_band);
        c.n_perm = st.get<std::size_t>("n_perm", c.n_perm);
        if (c.n_perm == 0) {
            throw ConfigError(st.dotted("n_perm"), "must be positive");
        }
        st.finish();
    }
    {
        auto er = root.section("ersp");
        c.ersp_channels = er.get<std::vector<std::string>>("channels", {});
        const auto f = read_band(er, "f_range_hz", {c.ersp.f_lo_hz, c.ersp.f_hi_hz});
        c.ersp.f_lo_hz = f.lo_hz;
        c.ersp.f_hi_hz = f.hi_hz;
        c.ersp.baseline = read_window(er, "baseline_ms", c.ersp.baseline);
        c.ersp.n_times = er.get<std::size_t>("n_times", c.ersp.n_times);
        c.ersp.window_samples = er.get<std::size_t>("window_samples", c.ersp.window_samples);
        er.finish();
    }
    {
        auto ps = root.section("psd");
        c.psd_seg_s = ps.get<double>("seg_s", c.psd_seg_s);
        c.psd_overlap = ps.get<double>("overlap", c.psd_overlap);
        if (!(c.psd_seg_s > 0.0) || !(c.psd_overlap >= 0.0 && c.psd_overlap < 1.0)) {
            throw ConfigError("psd", "seg_s must be positive and overlap in [0, 1)");
        }
        ps.finish();
    }
    {
        auto cn = root.section("cnn");
        nlohmann::json train_json = nlohmann::json::object();
        for (const char* key : {"learning_rate", "batch_size", "epochs", "dropout", "optimizer", "patience",
                                "min_delta"}) {
            if (cn.has(key)) {
                train_json[key] = cn.require<nlohmann::json>(key);
            }
        }
        try {
            c.cv.train = nn::TrainConfig::from_json(train_json);
        } catch (const ConfigError& e) {
            throw ConfigError(cn.dotted(e.key()), e.what());
        }
        c.cv.arch.activation = read_activation(cn);
        cn.finish();
    }
    {
        auto cv = root.section("cv");
        c.cv.folds = cv.get<std::size_t>("folds", c.cv.folds);
        if (c.cv.folds < 2) {
            throw ConfigError(cv.dotted("folds"), "need at least two folds");
        }
        const auto n_seeds = cv.get<std::size_t>("n_seeds", 5);
        if (n_seeds == 0) {
            throw ConfigError(cv.dotted("n_seeds"), "must be positive");
        }
        c.cv.seeds = derived_seeds(c.seed, "cv-seed", n_seeds);
        c.cv_methods = read_methods(cv, "methods", c.cv_methods);
        c.cv.augment = cv.get<bool>("augment", c.cv.augment);
        c.cv.win_s = cv.get<double>("win_s", c.cv.win_s);
        c.cv.overlap = cv.get<double>("overlap", c.cv.overlap);
        c.cv.csp_m = cv.get<std::size_t>("csp_m", c.cv.csp_m);
        c.shuffled_control = cv.get<bool>("shuffled_control", c.shuffled_control);
        c.control_cnn_epochs = cv.get<std::size_t>("control_cnn_epochs", c.control_cnn_epochs);
        cv.finish();
    }
    c.cv.k_channels = c.select_k;
    {
        auto sw = root.section("sweep");
        c.run_sweep = sw.get<bool>("enabled", c.run_sweep);
        c.sweep.methods = read_methods(sw, "methods", {Method::Cnn, Method::CspLda});
        c.sweep.channel_counts = sw.get<std::vector<std::size_t>>("channel_counts", kChannelCounts);
        c.sweep.base = c.cv;
        c.sweep.base.folds = sw.get<std::size_t>("folds", c.cv.folds);
        if (c.sweep.base.folds < 2) {
            throw ConfigError(sw.dotted("folds"), "need at least two folds");
        }
        const auto n_seeds = sw.get<std::size_t>("n_seeds", c.cv.seeds.size());
        if (n_seeds == 0) {
            throw ConfigError(sw.dotted("n_seeds"), "must be positive");
        }
        c.sweep.base.seeds = derived_seeds(c.seed, "sweep-seed", n_seeds);
        c.sweep.base.train.epochs = sw.get<std::size_t>("cnn_epochs", c.cv.train.epochs);
        sw.finish();
    }
    root.finish();
    return c;
}

nlohmann::json PipelineConfig::to_json() const
{
    nlohmann::json j;
    j["seed"] = seed;
    j["dataset"]["id"] = dataset_id;
    if (recording_path) {
        j["dataset"]["recording"] = recording_path->generic_string();
    } else {
        auto& s = j["dataset"]["synth"];
        s["seed"] = synth.seed;
        s["n_trials_per_class"] = synth.n_trials_per_class;
        s["fs"] = synth.fs;
        s["snr_db"] = std::isinf(synth.snr_db) ? nlohmann::json("inf") : nlohmann::json(synth.snr_db);
        s["coupling"] = synth.coupling;
        s["signal_uv"] = synth.signal_uv;
        s["onset_ms"] = synth.onset_ms;
        s["carrier_hz"] = synth.carrier_hz;
        auto planted = nlohmann::json::array();
        for (const auto& set : synth.planted_channels) {
            auto names = nlohmann::json::array();
            for (std::size_t i : set) {
                names.push_back(synth.montage.name(i));
            }
            planted.push_back(std::move(names));
        }
        s["planted_channels"] = std::move(planted);
    }
    j["preprocess"] = {{"band_hz", {band.lo_hz, band.hi_hz}}, {"target_fs", target_fs}};
    j["epochs"] = {{"imagery_ms", {imagery_window.start_ms, imagery_window.end_ms}},
                   {"rest_ms", {rest_window.start_ms, rest_window.end_ms}},
                   {"ersp_ms", {ersp_window.start_ms, ersp_window.end_ms}}};
    j["connectivity"] = {{"threshold", edge_threshold}, {"k", select_k}};
    j["stats"] = {{"band_hz", {stats_band.lo_hz, stats_band.hi_hz}}, {"n_perm", n_perm}, {"alpha", stats::StatMap::alpha}};
    j["ersp"] = {{"channels", ersp_channels},
                 {"f_range_hz", {ersp.f_lo_hz, ersp.f_hi_hz}},
                 {"baseline_ms", {ersp.baseline.start_ms, ersp.baseline.end_ms}},
                 {"n_times", ersp.n_times},
                 {"window_samples", ersp.window_samples}};
    j["psd"] = {{"seg_s", psd_seg_s}, {"overlap", psd_overlap}};
    j["cv"] = cv.to_json();
    j["cv"]["methods"] = method_names(cv_methods);
    j["cv"]["shuffled_control"] = shuffled_control;
    j["cv"]["control_cnn_epochs"] = control_cnn_epochs;
    j["sweep"] = sweep.base.to_json();
    j["sweep"]["enabled"] = run_sweep;
    j["sweep"]["methods"] = method_names(sweep.methods);
    j["sweep"]["channel_counts"] = sweep.channel_counts;
    return j;
}

core::EegRecording preprocess_recording(const core::EegRecording& rec, stats::Band band, int target_fs)
{
    if (rec.fs() % target_fs != 0) {
        throw RangeError("cannot decimate " + std::to_string(rec.fs()) + " Hz to " + std::to_string(target_fs) + " Hz");
    }
    const int factor = rec.fs() / target_fs;
    const auto n_out = static_cast<Eigen::Index>((rec.n_samples() + factor - 1) / factor);
    core::SignalMatrix out(static_cast<Eigen::Index>(rec.n_channels()), n_out);
    std::vector<double> x(rec.n_samples());
    for (Eigen::Index c = 0; c < out.rows(); ++c) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = rec.data()(c, static_cast<Eigen::Index>(i));
        }
        const auto y = dsp::downsample(dsp::bandpass(x, band.lo_hz, band.hi_hz, rec.fs()), factor);
        for (Eigen::Index i = 0; i < n_out; ++i) {
            out(c, i) = static_cast<float>(y[static_cast<std::size_t>(i)]);
        }
    }
    return rec.with_data(std::move(out), target_fs);
}

core::EegRecording resample_recording(const core::EegRecording& rec, int target_fs)
{
    if (rec.fs() == target_fs) {
        return rec;
    }
    if (rec.fs() % target_fs != 0) {
        throw RangeError("cannot decimate " + std::to_string(rec.fs()) + " Hz to " + std::to_string(target_fs) + " Hz");
    }
    const int factor = rec.fs() / target_fs;
    const auto n_out = static_cast<Eigen::Index>((rec.n_samples() + factor - 1) / factor);
    core::SignalMatrix out(static_cast<Eigen::Index>(rec.n_channels()), n_out);
    std::vector<double> x(rec.n_samples());
    for (Eigen::Index c = 0; c < out.rows(); ++c) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = rec.data()(c, static_cast<Eigen::Index>(i));
        }
        const auto y = dsp::downsample(x, factor, true, rec.fs());
        for (Eigen::Index i = 0; i < n_out; ++i) {
            out(c, i) = static_cast<float>(y[static_cast<std::size_t>(i)]);
        }
    }
    return rec.with_data(std::move(out), target_fs);
}

core::EegRecording acquire_recording(const PipelineConfig& config)
{
    if (config.recording_path) {
        return core::load_recording(*config.recording_path);
    }
    return core::synth_dataset(config.synth);
}

std::vector<dsp::Spectrum> mean_spectra(const core::EpochSet& epochs, double seg_s, double overlap)
{
    if (epochs.trials() == 0) {
        throw EmptyInputError("no epochs for spectra");
    }
    const auto seg = std::min<std::size_t>(epochs.samples(), static_cast<std::size_t>(std::llround(seg_s * epochs.fs())));
    std::vector<dsp::Spectrum> out;
    for (std::size_t c = 0; c < epochs.channels(); ++c) {
        dsp::Spectrum mean;
        for (std::size_t t = 0; t < epochs.trials(); ++t) {
            const auto s = dsp::welch_psd(epochs.series(t, c), epochs.fs(), seg, overlap);
            if (t == 0) {
                mean = s;
            } else {
                for (std::size_t i = 0; i < s.power.size(); ++i) {
                    mean.power[i] += s.power[i];
                }
            }
        }
        for (double& p : mean.power) {
            p /= static_cast<double>(epochs.trials());
        }
        out.push_back(std::move(mean));
    }
    return out;
}

namespace {

class StepLog {
public:
    void operator()(const std::string& what)
    {
        std::clog << "[vmi] " << what << std::endl;
    }
};

void write_json(const std::filesystem::path& path, const nlohmann::json& j)
{
    std::ofstream os(path, std::ios::binary);
    os << j.dump(2) << '\n';
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return s;
}

}  // namespace

PipelineSummary run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& out, std::size_t threads,
                             const nlohmann::json& raw_config)
{
    namespace fs = std::filesystem;
    StepLog log;
    for (const char* sub : {"connectivity", "stats", "ersp", "psd", "cv", "sweep"}) {
        fs::create_directories(out / sub);
    }
    Manifest manifest("report");
    manifest.set_config(cfg.to_json());
    if (!raw_config.is_null()) {
        manifest.add_note("raw_config_sha256", sha256_hex(raw_config.dump()));
    }
    manifest.add_seed("root", cfg.seed);
    if (cfg.recording_path) {
        manifest.add_input(*cfg.recording_path);
    } else {
        manifest.add_seed("synth", cfg.synth.seed);
    }

    log("acquire recording");
    const core::EegRecording raw = acquire_recording(cfg);
    log("preprocess");
    const core::EegRecording filtered = preprocess_recording(raw, cfg.band, cfg.target_fs);
    const core::EegRecording broadband = resample_recording(raw, cfg.target_fs);

    const core::EpochSet imagery = core::epoch_recording(filtered, core::Phase::Imagery, cfg.imagery_window);
    const core::EpochSet rest = core::epoch_recording(filtered, core::Phase::Rest, cfg.rest_window);
    nlohmann::json summary;
    summary["dataset"] = cfg.dataset_id;
    summary["trials"] = imagery.trials();
    summary["channels"] = imagery.channels();
    summary["fs"] = imagery.fs();
    summary["epoch_samples"] = imagery.samples();

    log("connectivity");
    auto per_trial = std::make_shared<const std::vector<Eigen::MatrixXd>>(connectivity::trial_plv(imagery));
    std::vector<std::size_t> all(imagery.trials());
    std::iota(all.begin(), all.end(), 0);
    const auto pooled = connectivity::average_plv(imagery.channel_names(), *per_trial, all);
    connectivity::write_matrix_csv(out / "connectivity" / "plv_all.csv", pooled);
    connectivity::write_edges_csv(out / "connectivity" / "edges_all.csv", pooled,
                                  connectivity::strong_edges(pooled, cfg.edge_threshold));
    std::vector<connectivity::ConnectivityMatrix> class_conns;
    for (int k = 0; k < core::kNumClasses; ++k) {
        const auto idx = imagery.trials_of_class(k);
        if (idx.empty()) {
            continue;
        }
        const auto m = connectivity::average_plv(imagery.channel_names(), *per_trial, idx);
        const std::string task = lower(std::string(core::kTaskNames[static_cast<std::size_t>(k)]));
        connectivity::write_matrix_csv(out / "connectivity" / ("plv_" + task + ".csv"), m);
        const auto edges = connectivity::strong_edges(m, cfg.edge_threshold);
        connectivity::write_edges_csv(out / "connectivity" / ("edges_" + task + ".csv"), m, edges);
        summary["strong_edges"][task] = edges.size();
        class_conns.push_back(m);
    }
    const auto ranking = connectivity::rank_channels(class_conns);
    connectivity::write_ranking_csv(out / "connectivity" / "ranking.csv", ranking);
    std::vector<std::string> selected;
    for (std::size_t i : connectivity::select_channels(ranking, std::min(cfg.select_k, imagery.channels()))) {
        selected.push_back(imagery.channel_names()[i]);
    }
    summary["selected_channels"] = selected;
    if (!cfg.recording_path) {
        std::vector<std::string> planted;
        for (std::size_t i : cfg.synth.planted_union()) {
            planted.push_back(cfg.synth.montage.name(i));
        }
        std::size_t hits = 0;
        for (const auto& p : planted) {
            hits += std::count(selected.begin(), selected.end(), p) > 0 ? 1 : 0;
        }
        summary["planted_channels"] = planted;
        summary["planted_recovered"] = hits;
    }

    log("statistics");
    const std::uint64_t stats_seed = derive_seed(cfg.seed, "stats");
    manifest.add_seed("stats", stats_seed);
    const auto smap = stats::stat_map(imagery, rest, cfg.stats_band, cfg.n_perm, stats_seed);
    stats::write_stat_map_csv(out / "stats" / "stat_map.csv", smap);
    std::vector<std::string> significant;
    for (std::size_t c = 0; c < smap.channel_names.size(); ++c) {
        if (smap.significant[c]) {
            significant.push_back(smap.channel_names[c]);
        }
    }
    summary["significant_channels"] = significant;

    log("ersp and psd");
    {
        const core::EpochSet trial_epochs = core::epoch_recording(broadband, core::Phase::Trial, cfg.ersp_window);
        std::vector<std::string> chans = cfg.ersp_channels;
        if (chans.empty()) {
            if (!cfg.recording_path) {
                for (std::size_t i : cfg.synth.planted_union()) {
                    chans.push_back(cfg.synth.montage.name(i));
                }
            } else {
                chans = {"Fp1", "O1"};
            }
        }
        for (const auto& name : chans) {
            const auto it = std::find(trial_epochs.channel_names().begin(), trial_epochs.channel_names().end(), name);
            if (it == trial_epochs.channel_names().end()) {
                throw ConfigError("ersp.channels", "unknown channel " + name);
            }
            const auto idx = static_cast<std::size_t>(it - trial_epochs.channel_names().begin());
            dsp::write_tfmap_csv(out / "ersp" / ("ersp_" + name + ".csv"),
                                 dsp::ersp_channel(trial_epochs, idx, cfg.ersp));
        }
        const core::EpochSet psd_imagery = core::epoch_recording(broadband, core::Phase::Imagery, cfg.imagery_window);
        const core::EpochSet psd_rest = core::epoch_recording(broadband, core::Phase::Rest, cfg.rest_window);
        dsp::write_spectra_csv(out / "psd" / "psd_imagery.csv", psd_imagery.channel_names(),
                               mean_spectra(psd_imagery, cfg.psd_seg_s, cfg.psd_overlap));
        dsp::write_spectra_csv(out / "psd" / "psd_rest.csv", psd_rest.channel_names(),
                               mean_spectra(psd_rest, cfg.psd_seg_s, cfg.psd_overlap));
    }

    CvOptions cv = cfg.cv;
    cv.threads = threads;
    cv.trial_plv = per_trial;
    cv.k_channels = std::min(cfg.select_k, imagery.channels());
    for (std::size_t i = 0; i < cv.seeds.size(); ++i) {
        manifest.add_seed("cv_" + std::to_string(i), cv.seeds[i]);
    }
    for (Method m : cfg.cv_methods) {
        log("cross-validation " + to_string(m));
        CvOptions o = cv;
        o.method = m;
        const EvalReport r = cross_validate(imagery, o, cfg.dataset_id);
        write_json(out / "cv" / ("cv_" + to_string(m) + ".json"), r.to_json());
        summary["cv"][to_string(m)] = {{"k_channels", r.k_channels},
                                       {"accuracy", r.mean},
                                       {"std", r.stdev},
                                       {"window_accuracy", r.window_mean},
                                       {"cell", format_cell(100.0 * r.mean, 100.0 * r.stdev)}};
        if (cfg.shuffled_control) {
            log("shuffled-label control " + to_string(m));
            auto labels = imagery.labels();
            std::mt19937_64 rng = make_rng(cfg.seed, "shuffled-labels");
            std::shuffle(labels.begin(), labels.end(), rng);
            const core::EpochSet shuffled = imagery.with_labels(labels);
            if (cfg.control_cnn_epochs > 0) {
                o.train.epochs = cfg.control_cnn_epochs;
            }
            const EvalReport c = cross_validate(shuffled, o, cfg.dataset_id + "-shuffled");
            write_json(out / "cv" / ("control_" + to_string(m) + ".json"), c.to_json());
            summary["control"][to_string(m)] = {{"accuracy", c.mean}, {"std", c.stdev}};
        }
    }

    if (cfg.run_sweep) {
        log("channel-count sweep");
        SweepOptions so = cfg.sweep;
        so.base.threads = threads;
        so.base.trial_plv = per_trial;
        for (std::size_t i = 0; i < so.base.seeds.size(); ++i) {
            manifest.add_seed("sweep_" + std::to_string(i), so.base.seeds[i]);
        }
        const SweepTable table = sweep(imagery, so, cfg.dataset_id);
        write_sweep_csv(out / "sweep" / "sweep.csv", {table});
        write_json(out / "sweep" / "sweep.json", table.to_json());
        for (std::size_t m = 0; m < table.methods.size(); ++m) {
            for (std::size_t k = 0; k < table.channel_counts.size(); ++k) {
                summary["sweep"][to_string(table.methods[m])][std::to_string(table.channel_counts[k]) + "ch"] =
                    table.cell(m, k).mean;
            }
        }
    }

    write_json(out / "summary.json", summary);
    manifest.write(out);
    log("done");
    return {summary};
}

}  // namespace vmi::harness
