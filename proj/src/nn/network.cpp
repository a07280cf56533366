#include "vmi/nn/network.hpp"

#include <cmath>

#include "vmi/container.hpp"
#include "vmi/error.hpp"
#include "vmi/random.hpp"

namespace vmi::nn {

Network::Network(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed)
{
    const auto shapes = spec_.shape_trace();
    std::mt19937_64 init = make_rng(seed_, "cnn-init");
    Shape in = spec_.input_shape();
    std::size_t conv_index = 0;
    std::size_t bn_index = 0;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        const LayerSpec& l = spec_.layers[i];
        switch (l.kind) {
        case LayerKind::Conv: {
            auto conv = std::make_unique<Conv2d>(in.maps, l.maps_out, l.kernel, l.stride,
                                                 "conv" + std::to_string(++conv_index));
            conv->init_glorot(init);
            conv->set_input_grad(i != 0);
            layers_.push_back(std::move(conv));
            break;
        }
        case LayerKind::AvgPool:
            layers_.push_back(std::make_unique<AvgPool2d>(l.kernel, l.stride));
            break;
        case LayerKind::BatchNorm:
            layers_.push_back(std::make_unique<BatchNorm2d>(in.maps, "bn" + std::to_string(++bn_index)));
            break;
        case LayerKind::Dropout: {
            auto d = std::make_unique<Dropout>(l.rate);
            dropouts_.push_back(d.get());
            layers_.push_back(std::move(d));
            break;
        }
        case LayerKind::Activation:
            layers_.push_back(std::make_unique<ActivationLayer>(spec_.activation));
            break;
        case LayerKind::Flatten:
            layers_.push_back(std::make_unique<Flatten>());
            break;
        case LayerKind::Softmax: {
            auto dense = std::make_unique<DenseSoftmax>(in.maps * in.height * in.width, l.maps_out, "dense");
            dense->init_glorot(init);
            layers_.push_back(std::move(dense));
            break;
        }
        }
        in = shapes[i];
    }
    if (spec_.layers.empty() || spec_.layers.back().kind != LayerKind::Softmax) {
        throw ShapeError("model must end with a softmax head");
    }
    reseed_dropout(derive_seed(seed_, "cnn-dropout"));
}

std::size_t Network::n_classes() const
{
    return spec_.layers.back().maps_out;
}

Probabilities Network::forward(const Tensor4& batch, Mode mode)
{
    const Shape in = spec_.input_shape();
    if (batch.maps() != in.maps || batch.height() != in.height || batch.width() != in.width) {
        throw ShapeError("network input must be (B, 1, " + std::to_string(in.height) + ", " +
                         std::to_string(in.width) + ")");
    }
    Tensor4 x = batch;
    for (auto& layer : layers_) {
        x = layer->forward(std::move(x), mode);
    }
    last_probs_ = Eigen::Map<const Probabilities>(x.values.data(), static_cast<Eigen::Index>(x.batch()),
                                                  static_cast<Eigen::Index>(n_classes()));
    return last_probs_;
}

double Network::backward(const std::vector<int>& labels)
{
    const auto b = static_cast<std::size_t>(last_probs_.rows());
    if (labels.size() != b || b == 0) {
        throw ShapeError("label count does not match the last forward batch");
    }
    const std::size_t k = n_classes();
    zero_grad();
    Tensor4 g(b, k, 1, 1);
    double loss = 0.0;
    for (std::size_t n = 0; n < b; ++n) {
        if (labels[n] < 0 || static_cast<std::size_t>(labels[n]) >= k) {
            throw RangeError("label " + std::to_string(labels[n]) + " outside the classifier head");
        }
        for (std::size_t c = 0; c < k; ++c) {
            const double p = last_probs_(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
            const double target = static_cast<int>(c) == labels[n] ? 1.0 : 0.0;
            g.at(n, c, 0, 0) = (p - target) / static_cast<double>(b);
            if (target > 0.0) {
                loss -= std::log(std::max(p, 1e-300));
            }
        }
    }
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        g = (*it)->backward(std::move(g));
    }
    return loss / static_cast<double>(b);
}

std::vector<Parameter*> Network::parameters()
{
    std::vector<Parameter*> out;
    for (auto& layer : layers_) {
        for (Parameter* p : layer->parameters()) {
            out.push_back(p);
        }
    }
    return out;
}

std::size_t Network::parameter_count()
{
    std::size_t n = 0;
    for (Parameter* p : parameters()) {
        n += p->value.size();
    }
    return n;
}

void Network::zero_grad()
{
    for (Parameter* p : parameters()) {
        std::fill(p->grad.begin(), p->grad.end(), 0.0);
    }
}

void Network::reseed_dropout(std::uint64_t seed)
{
    for (std::size_t i = 0; i < dropouts_.size(); ++i) {
        dropouts_[i]->reseed(derive_seed(seed, "dropout-layer", i));
    }
}

void Network::save(const std::filesystem::path& path, const nlohmann::json& extra)
{
    nlohmann::json header;
    header["kind"] = "cnn";
    header["model"] = spec_.to_json();
    header["seed"] = seed_;
    header["config"] = extra;
    auto params = nlohmann::json::array();
    std::vector<float> payload;
    for (Parameter* p : parameters()) {
        params.push_back({{"name", p->name}, {"size", p->value.size()}});
        payload.insert(payload.end(), p->value.begin(), p->value.end());
    }
    auto buffers = nlohmann::json::array();
    for (auto& layer : layers_) {
        for (auto* buf : layer->buffers()) {
            buffers.push_back(buf->size());
            payload.insert(payload.end(), buf->begin(), buf->end());
        }
    }
    header["parameters"] = std::move(params);
    header["buffers"] = std::move(buffers);
    write_container(path, header, payload);
}

Network Network::load(const std::filesystem::path& path)
{
    Container c = read_container(path);
    expect_kind(c.header, "cnn");
    Network net(ModelSpec::from_json(c.header.at("model")), c.header.value("seed", std::uint64_t{0}));
    std::size_t offset = 0;
    auto take = [&](auto& dst) {
        if (offset + dst.size() > c.payload.size()) {
            throw CorruptionError("checkpoint payload shorter than the model");
        }
        for (double& v : dst) {
            v = c.payload[offset++];
        }
    };
    for (Parameter* p : net.parameters()) {
        take(p->value);
    }
    for (auto& layer : net.layers_) {
        for (auto* buf : layer->buffers()) {
            take(*buf);
        }
    }
    if (offset != c.payload.size()) {
        throw CorruptionError("checkpoint payload longer than the model");
    }
    return net;
}

Tensor4 to_batch(const core::EpochSet& epochs, std::span<const std::size_t> trials)
{
    Tensor4 batch(trials.size(), 1, epochs.channels(), epochs.samples());
    const std::size_t per = epochs.channels() * epochs.samples();
    for (std::size_t i = 0; i < trials.size(); ++i) {
        if (trials[i] >= epochs.trials()) {
            throw RangeError("trial index out of range");
        }
        const double* src = epochs.data().data() + trials[i] * per;
        std::copy(src, src + per, batch.item(i));
    }
    return batch;
}

}  // namespace vmi::nn
