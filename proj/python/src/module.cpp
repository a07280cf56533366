#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "vmi/connectivity/plv.hpp"
#include "vmi/core/synth.hpp"
#include "vmi/csp/ovr.hpp"
#include "vmi/dsp/fft.hpp"
#include "vmi/dsp/filter.hpp"
#include "vmi/dsp/hilbert.hpp"
#include "vmi/dsp/psd.hpp"
#include "vmi/error.hpp"
#include "vmi/harness/manifest.hpp"
#include "vmi/harness/pipeline.hpp"
#include "vmi/harness/sweep.hpp"
#include "vmi/nn/model_spec.hpp"
#include "vmi/random.hpp"
#include "vmi/stats/stats.hpp"

namespace py = pybind11;
using namespace vmi;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const F64& a)
{
    if (a.ndim() != 1) {
        throw ShapeError("expected a 1-D array");
    }
    return {a.data(), a.data() + a.size()};
}

F64 to_array(const std::vector<double>& v)
{
    F64 out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

// (trials, channels, samples) array plus labels -> EpochSet.
core::EpochSet to_epochs(const F64& x, const std::vector<int>& labels, int fs)
{
    if (x.ndim() != 3) {
        throw ShapeError("epochs must be a (trials, channels, samples) array");
    }
    const auto trials = static_cast<std::size_t>(x.shape(0));
    const auto channels = static_cast<std::size_t>(x.shape(1));
    const auto samples = static_cast<std::size_t>(x.shape(2));
    std::vector<int> y = labels.empty() ? std::vector<int>(trials, 0) : labels;
    if (y.size() != trials) {
        throw ShapeError("one label per trial expected");
    }
    std::vector<std::string> names;
    for (std::size_t c = 0; c < channels; ++c) {
        names.push_back("ch" + std::to_string(c));
    }
    return core::EpochSet(names, fs, 0.0, samples, std::move(y), {x.data(), x.data() + x.size()});
}

F64 epochs_array(const core::EpochSet& e)
{
    F64 out({static_cast<py::ssize_t>(e.trials()), static_cast<py::ssize_t>(e.channels()),
             static_cast<py::ssize_t>(e.samples())});
    std::copy(e.data().begin(), e.data().end(), out.mutable_data());
    return out;
}

F64 matrix_array(const Eigen::MatrixXd& m)
{
    F64 out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
    auto r = out.mutable_unchecked<2>();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            r(i, j) = m(i, j);
        }
    }
    return out;
}

stats::PermutationMode mode_from(const std::string& s)
{
    if (s == "auto") {
        return stats::PermutationMode::Auto;
    }
    if (s == "exhaustive") {
        return stats::PermutationMode::Exhaustive;
    }
    if (s == "monte_carlo") {
        return stats::PermutationMode::MonteCarlo;
    }
    throw ConfigError("mode", "expected auto, exhaustive or monte_carlo");
}

class PyCspLda {
public:
    explicit PyCspLda(std::size_t m) : clf_(m) {}

    PyCspLda& fit(const F64& x, const std::vector<int>& y)
    {
        clf_.fit(to_epochs(x, y, 250));
        return *this;
    }
    std::vector<int> predict(const F64& x) const { return clf_.predict(to_epochs(x, {}, 250)); }
    F64 decision_function(const F64& x) const { return matrix_array(clf_.decision_scores(to_epochs(x, {}, 250))); }
    std::size_t m() const { return clf_.m(); }

private:
    csp::CspLdaClassifier clf_;
};

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Native core of vmidecode";

    auto base = py::register_exception<Error>(m, "VmiError", PyExc_RuntimeError);
    auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", data.ptr());

    m.attr("__version__") = harness::kVersion;

    m.def("derive_seed", &derive_seed, py::arg("root"), py::arg("component"), py::arg("index") = 0);

    m.def("fft", [](const std::vector<std::complex<double>>& x) { return dsp::fft(x); }, py::arg("x"));
    m.def("analytic_signal", [](const F64& x) { return dsp::analytic_signal(to_vector(x)); }, py::arg("x"));
    m.def(
        "bandpass",
        [](const F64& x, double lo, double hi, double fs) { return to_array(dsp::bandpass(to_vector(x), lo, hi, fs)); },
        py::arg("x"), py::arg("lo_hz"), py::arg("hi_hz"), py::arg("fs"));
    m.def(
        "welch_psd",
        [](const F64& x, double fs, std::size_t seg_len, double overlap) {
            const auto s = dsp::welch_psd(to_vector(x), fs, seg_len, overlap);
            return py::make_tuple(to_array(s.freqs_hz), to_array(s.power));
        },
        py::arg("x"), py::arg("fs"), py::arg("seg_len") = 0, py::arg("overlap") = 0.5);

    m.def(
        "plv_matrix",
        [](const F64& epochs) { return matrix_array(connectivity::plv_matrix(to_epochs(epochs, {}, 250)).values); },
        py::arg("epochs"), "Trial-averaged PLV of a (trials, channels, samples) array.");

    m.def(
        "permutation_test",
        [](const F64& a, const F64& b, std::size_t n_perm, std::uint64_t seed, const std::string& mode) {
            return stats::permutation_test(to_vector(a), to_vector(b), n_perm, seed, mode_from(mode));
        },
        py::arg("a"), py::arg("b"), py::arg("n_perm") = 10000, py::arg("seed") = 0, py::arg("mode") = "auto");

    m.def(
        "synth_epochs",
        [](std::uint64_t seed, std::size_t n_trials_per_class, double snr_db, double coupling, int target_fs) {
            auto spec = core::default_synth_spec(seed);
            spec.n_trials_per_class = n_trials_per_class;
            spec.snr_db = snr_db;
            spec.coupling = coupling;
            spec.fs = target_fs;
            const auto rec = harness::preprocess_recording(core::synth_dataset(spec), {0.5, 13.0}, target_fs);
            const auto e = core::epoch_recording(rec, core::Phase::Imagery, {500.0, 4500.0});
            std::vector<std::string> planted;
            for (std::size_t i : spec.planted_union()) {
                planted.push_back(spec.montage.name(i));
            }
            py::dict out;
            out["X"] = epochs_array(e);
            out["y"] = e.labels();
            out["channels"] = e.channel_names();
            out["fs"] = e.fs();
            out["planted"] = planted;
            return out;
        },
        py::arg("seed"), py::arg("n_trials_per_class") = 50, py::arg("snr_db") = 10.0, py::arg("coupling") = 0.9,
        py::arg("fs") = 250,
        "Band-passed imagery epochs of a seeded synthetic recording.");

    m.def(
        "shape_trace",
        [](std::size_t n_channels) {
            std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> out;
            for (const auto& s : nn::build_model(n_channels).table_trace()) {
                out.emplace_back(s.maps, s.height, s.width);
            }
            return out;
        },
        py::arg("n_channels"));

    m.def("format_cell", &harness::format_cell, py::arg("mean_percent"), py::arg("std_percent"));

    m.def(
        "_run_pipeline",
        [](const std::string& config, const std::filesystem::path& out_dir, std::size_t threads) {
            const auto raw = nlohmann::json::parse(config);
            const auto cfg = harness::PipelineConfig::from_json(raw);
            py::gil_scoped_release release;
            return harness::run_pipeline(cfg, out_dir, threads, raw).json.dump();
        },
        py::arg("config_json"), py::arg("out_dir"), py::arg("threads") = 1);

    py::class_<PyCspLda>(m, "CspLda")
        .def(py::init<std::size_t>(), py::arg("m") = 2)
        .def("fit", &PyCspLda::fit, py::arg("X"), py::arg("y"), py::return_value_policy::reference_internal)
        .def("predict", &PyCspLda::predict, py::arg("X"))
        .def("decision_function", &PyCspLda::decision_function, py::arg("X"))
        .def_property_readonly("m", &PyCspLda::m);
}
