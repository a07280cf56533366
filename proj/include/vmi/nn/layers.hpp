#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "vmi/nn/model_spec.hpp"
#include "vmi/nn/tensor.hpp"

namespace vmi::nn {

enum class Mode { Train, Eval };

struct Parameter {
    std::string name;
    Buffer value;
    Buffer grad;

    explicit Parameter(std::string n = {}, std::size_t size = 0) : name(std::move(n)), value(size, 0.0), grad(size, 0.0) {}
};

class Layer {
public:
    virtual ~Layer() = default;

    // Caches whatever backward() needs. Arguments are taken by value so
    // elementwise layers can work in place.
    virtual Tensor4 forward(Tensor4 x, Mode mode) = 0;
    // Gradient w.r.t. the layer input given the gradient w.r.t. its output.
    // Parameter gradients accumulate.
    virtual Tensor4 backward(Tensor4 grad_out) = 0;

    virtual std::vector<Parameter*> parameters() { return {}; }
    // Non-trainable state stored with checkpoints (batch-norm running stats).
    virtual std::vector<std::vector<double>*> buffers() { return {}; }
};

class Conv2d : public Layer {
public:
    Conv2d(std::size_t in_maps, std::size_t out_maps, Extent kernel, Extent stride, std::string name);

    Tensor4 forward(Tensor4 x, Mode mode) override;
    Tensor4 backward(Tensor4 grad_out) override;
    std::vector<Parameter*> parameters() override { return {&weight_}; }

    void init_glorot(std::mt19937_64& rng);
    // The first layer never needs an input gradient.
    void set_input_grad(bool on) { input_grad_ = on; }

private:
    // Patch matrix for output row `oh`: (in_maps * kh * kw) x w_out.
    void im2col(const double* item, std::size_t oh, std::size_t w_out, double* cols) const;

    std::size_t in_maps_;
    std::size_t out_maps_;
    Extent kernel_;
    Extent stride_;
    bool input_grad_ = true;
    Parameter weight_;  // out_maps x (in_maps * kh * kw), no bias
    Tensor4 input_;
};

class AvgPool2d : public Layer {
public:
    AvgPool2d(Extent kernel, Extent stride) : kernel_(kernel), stride_(stride) {}

    Tensor4 forward(Tensor4 x, Mode mode) override;
    Tensor4 backward(Tensor4 grad_out) override;

private:
    Extent kernel_;
    Extent stride_;
    std::array<std::size_t, 4> in_dims_{};
};

class BatchNorm2d : public Layer {
public:
    BatchNorm2d(std::size_t maps, std::string name, double eps = 1e-5, double momentum = 0.1);

    Tensor4 forward(Tensor4 x, Mode mode) override;
    Tensor4 backward(Tensor4 grad_out) override;
    std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }
    std::vector<std::vector<double>*> buffers() override { return {&running_mean_, &running_var_}; }

private:
    std::size_t maps_;
    double eps_;
    double momentum_;
    Parameter gamma_;
    Parameter beta_;
    std::vector<double> running_mean_;
    std::vector<double> running_var_;
    Tensor4 xhat_;
    std::vector<double> inv_std_;
    Mode mode_ = Mode::Eval;
};

class Dropout : public Layer {
public:
    explicit Dropout(double rate) : rate_(rate) {}

    Tensor4 forward(Tensor4 x, Mode mode) override;
    Tensor4 backward(Tensor4 grad_out) override;

    void reseed(std::uint64_t seed) { rng_.seed(seed); }

private:
    double rate_;
    std::mt19937_64 rng_;
    Buffer mask_;
    bool active_ = false;
};

class ActivationLayer : public Layer {
public:
    explicit ActivationLayer(Activation kind) : kind_(kind) {}

    Tensor4 forward(Tensor4 x, Mode mode) override;
    Tensor4 backward(Tensor4 grad_out) override;

private:
    Activation kind_;
    Buffer output_;
};

class Flatten : public Layer {
public:
    Tensor4 forward(Tensor4 x, Mode mode) override;
    Tensor4 backward(Tensor4 grad_out) override;

private:
    std::array<std::size_t, 4> in_dims_{};
};

// Fully connected layer followed by softmax. forward() returns probabilities
// (B, classes, 1, 1); backward() takes the gradient w.r.t. the logits, which
// for cross-entropy is (p - onehot) / B.
class DenseSoftmax : public Layer {
public:
    DenseSoftmax(std::size_t in_features, std::size_t classes, std::string name);

    Tensor4 forward(Tensor4 x, Mode mode) override;
    Tensor4 backward(Tensor4 grad_logits) override;
    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }

    void init_glorot(std::mt19937_64& rng);

private:
    std::size_t in_;
    std::size_t classes_;
    Parameter weight_;  // classes x in
    Parameter bias_;
    Tensor4 input_;
};

}  // namespace vmi::nn
