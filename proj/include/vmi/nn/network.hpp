#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "vmi/core/epochs.hpp"
#include "vmi/nn/layers.hpp"
#include "vmi/nn/model_spec.hpp"

namespace vmi::nn {

using Probabilities = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Executable layer stack built from a ModelSpec.
class Network {
public:
    Network(ModelSpec spec, std::uint64_t seed);

    const ModelSpec& spec() const noexcept { return spec_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t n_classes() const;

    // Batch (B, 1, n_channels, window) -> B x classes probabilities.
    Probabilities forward(const Tensor4& batch, Mode mode);
    // Mean cross-entropy of the last forward pass; overwrites every
    // parameter gradient. RangeError for labels outside the head.
    double backward(const std::vector<int>& labels);

    std::vector<Parameter*> parameters();
    std::size_t parameter_count();
    void zero_grad();
    // Restarts every dropout stream; equal seeds give equal masks.
    void reseed_dropout(std::uint64_t seed);

    // Float32 checkpoint: parameters in declaration order, then batch-norm
    // running statistics. `extra` is stored in the header (config echo).
    void save(const std::filesystem::path& path, const nlohmann::json& extra = {});
    static Network load(const std::filesystem::path& path);

private:
    ModelSpec spec_;
    std::uint64_t seed_;
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<Dropout*> dropouts_;
    Probabilities last_probs_;
};

// Copies trials of an epoch set into a (B, 1, channels, samples) batch.
Tensor4 to_batch(const core::EpochSet& epochs, std::span<const std::size_t> trials);

}  // namespace vmi::nn
