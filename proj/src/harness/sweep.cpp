#include "vmi/harness/sweep.hpp"

#include <cstdio>
#include <fstream>

#include "vmi/connectivity/plv.hpp"
#include "vmi/error.hpp"

namespace vmi::harness {

const EvalReport& SweepTable::cell(std::size_t method_index, std::size_t count_index) const
{
    return cells.at(method_index * channel_counts.size() + count_index);
}

nlohmann::json SweepTable::to_json() const
{
    nlohmann::json j;
    j["dataset"] = dataset;
    j["channel_counts"] = channel_counts;
    auto methods_json = nlohmann::json::array();
    for (Method m : methods) {
        methods_json.push_back(to_string(m));
    }
    j["methods"] = std::move(methods_json);
    auto cells_json = nlohmann::json::array();
    for (const EvalReport& r : cells) {
        cells_json.push_back(r.to_json());
    }
    j["cells"] = std::move(cells_json);
    return j;
}

SweepTable sweep(const core::EpochSet& dataset, const SweepOptions& options, const std::string& dataset_id)
{
    if (options.methods.empty() || options.channel_counts.empty()) {
        throw ConfigError("sweep", "needs at least one method and one channel count");
    }
    for (std::size_t k : options.channel_counts) {
        if (k == 0 || k > dataset.channels()) {
            throw RangeError("channel count " + std::to_string(k) + " not available in a " +
                             std::to_string(dataset.channels()) + "-channel dataset");
        }
    }
    SweepTable table;
    table.dataset = dataset_id;
    table.methods = options.methods;
    table.channel_counts = options.channel_counts;

    CvOptions base = options.base;
    if (!base.trial_plv) {
        base.trial_plv = std::make_shared<const std::vector<Eigen::MatrixXd>>(connectivity::trial_plv(dataset));
    }
    for (Method m : options.methods) {
        for (std::size_t k : options.channel_counts) {
            CvOptions o = base;
            o.method = m;
            o.k_channels = k;
            table.cells.push_back(cross_validate(dataset, o, dataset_id));
        }
    }
    return table;
}

std::string format_cell(double mean_percent, double std_percent)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f%% (±%.2f)", mean_percent, std_percent);
    return buf;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepTable>& tables)
{
    if (tables.empty()) {
        throw EmptyInputError("no sweep tables to write");
    }
    const auto& counts = tables.front().channel_counts;
    for (const auto& t : tables) {
        if (t.channel_counts != counts) {
            throw ShapeError("sweep tables use different channel counts");
        }
    }
    std::ofstream os(path);
    os << "dataset,method";
    for (std::size_t k : counts) {
        os << ',' << k << "ch";
    }
    os << '\n';
    for (const auto& t : tables) {
        for (std::size_t m = 0; m < t.methods.size(); ++m) {
            os << t.dataset << ',' << to_string(t.methods[m]);
            for (std::size_t c = 0; c < counts.size(); ++c) {
                const EvalReport& r = t.cell(m, c);
                os << ',' << format_cell(100.0 * r.mean, 100.0 * r.stdev);
            }
            os << '\n';
        }
    }
}

}  // namespace vmi::harness
