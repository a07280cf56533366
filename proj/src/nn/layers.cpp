#include "vmi/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "vmi/error.hpp"

namespace vmi::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMatrix>;
using ConstMapRow = Eigen::Map<const RowMatrix>;

void glorot(Buffer& w, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng)
{
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& v : w) {
        v = dist(rng);
    }
}

}  // namespace

// ---- Conv2d ----

Conv2d::Conv2d(std::size_t in_maps, std::size_t out_maps, Extent kernel, Extent stride, std::string name)
    : in_maps_(in_maps), out_maps_(out_maps), kernel_(kernel), stride_(stride),
      weight_(std::move(name) + ".weight", out_maps * in_maps * kernel.h * kernel.w)
{
}

void Conv2d::init_glorot(std::mt19937_64& rng)
{
    const std::size_t area = kernel_.h * kernel_.w;
    glorot(weight_.value, in_maps_ * area, out_maps_ * area, rng);
}

void Conv2d::im2col(const double* item, std::size_t oh, std::size_t w_out, double* cols) const
{
    const std::size_t h_in = input_.height();
    const std::size_t w_in = input_.width();
    std::size_t row = 0;
    for (std::size_t c = 0; c < in_maps_; ++c) {
        const double* plane = item + c * h_in * w_in;
        for (std::size_t i = 0; i < kernel_.h; ++i) {
            const double* line = plane + (oh * stride_.h + i) * w_in;
            for (std::size_t j = 0; j < kernel_.w; ++j, ++row) {
                double* dst = cols + row * w_out;
                if (stride_.w == 1) {
                    std::copy(line + j, line + j + w_out, dst);
                } else {
                    for (std::size_t ow = 0; ow < w_out; ++ow) {
                        dst[ow] = line[ow * stride_.w + j];
                    }
                }
            }
        }
    }
}

// The product is formed one output row at a time so the unrolled patch
// matrix (kernel volume x output width) stays cache resident.
Tensor4 Conv2d::forward(Tensor4 x, Mode)
{
    if (x.maps() != in_maps_) {
        throw ShapeError("conv expects " + std::to_string(in_maps_) + " input maps, got " + std::to_string(x.maps()));
    }
    const std::size_t h_out = output_extent(x.height(), kernel_.h, stride_.h);
    const std::size_t w_out = output_extent(x.width(), kernel_.w, stride_.w);
    const auto k = static_cast<Eigen::Index>(in_maps_ * kernel_.h * kernel_.w);
    const auto wo = static_cast<Eigen::Index>(w_out);
    const auto cout = static_cast<Eigen::Index>(out_maps_);
    const Eigen::OuterStride<> plane(static_cast<Eigen::Index>(h_out * w_out));
    input_ = std::move(x);

    Tensor4 out(input_.batch(), out_maps_, h_out, w_out);
    Buffer cols(static_cast<std::size_t>(k * wo));
    const ConstMapRow w(weight_.value.data(), cout, k);
    for (std::size_t n = 0; n < input_.batch(); ++n) {
        for (std::size_t oh = 0; oh < h_out; ++oh) {
            im2col(input_.item(n), oh, w_out, cols.data());
            Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>> o(out.item(n) + oh * w_out, cout, wo, plane);
            o.noalias() = w * ConstMapRow(cols.data(), k, wo);
        }
    }
    return out;
}

Tensor4 Conv2d::backward(Tensor4 grad_out)
{
    const std::size_t h_out = grad_out.height();
    const std::size_t w_out = grad_out.width();
    const auto k = static_cast<Eigen::Index>(in_maps_ * kernel_.h * kernel_.w);
    const auto wo = static_cast<Eigen::Index>(w_out);
    const auto cout = static_cast<Eigen::Index>(out_maps_);
    const Eigen::OuterStride<> plane(static_cast<Eigen::Index>(h_out * w_out));

    Buffer cols(static_cast<std::size_t>(k * wo));
    Buffer dcols(input_grad_ ? cols.size() : 0);
    const ConstMapRow w(weight_.value.data(), cout, k);
    MapRow dw(weight_.grad.data(), cout, k);
    Tensor4 dx;
    if (input_grad_) {
        dx = Tensor4(input_.batch(), input_.maps(), input_.height(), input_.width());
    }
    const std::size_t h_in = input_.height();
    const std::size_t w_in = input_.width();

    for (std::size_t n = 0; n < input_.batch(); ++n) {
        for (std::size_t oh = 0; oh < h_out; ++oh) {
            im2col(input_.item(n), oh, w_out, cols.data());
            const Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>> g(grad_out.item(n) + oh * w_out, cout, wo,
                                                                           plane);
            dw.noalias() += g * ConstMapRow(cols.data(), k, wo).transpose();
            if (!input_grad_) {
                continue;
            }
            MapRow(dcols.data(), k, wo).noalias() = w.transpose() * g;
            double* item = dx.item(n);
            std::size_t row = 0;
            for (std::size_t c = 0; c < in_maps_; ++c) {
                double* base = item + c * h_in * w_in;
                for (std::size_t i = 0; i < kernel_.h; ++i) {
                    double* line = base + (oh * stride_.h + i) * w_in;
                    for (std::size_t j = 0; j < kernel_.w; ++j, ++row) {
                        const double* src = dcols.data() + row * w_out;
                        for (std::size_t ow = 0; ow < w_out; ++ow) {
                            line[ow * stride_.w + j] += src[ow];
                        }
                    }
                }
            }
        }
    }
    return dx;
}

// ---- AvgPool2d ----

Tensor4 AvgPool2d::forward(Tensor4 x, Mode)
{
    in_dims_ = x.dims;
    const std::size_t h_out = output_extent(x.height(), kernel_.h, stride_.h);
    const std::size_t w_out = output_extent(x.width(), kernel_.w, stride_.w);
    const double scale = 1.0 / static_cast<double>(kernel_.h * kernel_.w);
    Tensor4 out(x.batch(), x.maps(), h_out, w_out);
    for (std::size_t n = 0; n < x.batch(); ++n) {
        for (std::size_t c = 0; c < x.maps(); ++c) {
            for (std::size_t oh = 0; oh < h_out; ++oh) {
                for (std::size_t ow = 0; ow < w_out; ++ow) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < kernel_.h; ++i) {
                        for (std::size_t j = 0; j < kernel_.w; ++j) {
                            s += x.at(n, c, oh * stride_.h + i, ow * stride_.w + j);
                        }
                    }
                    out.at(n, c, oh, ow) = s * scale;
                }
            }
        }
    }
    return out;
}

Tensor4 AvgPool2d::backward(Tensor4 grad_out)
{
    Tensor4 dx(in_dims_[0], in_dims_[1], in_dims_[2], in_dims_[3]);
    const double scale = 1.0 / static_cast<double>(kernel_.h * kernel_.w);
    for (std::size_t n = 0; n < grad_out.batch(); ++n) {
        for (std::size_t c = 0; c < grad_out.maps(); ++c) {
            for (std::size_t oh = 0; oh < grad_out.height(); ++oh) {
                for (std::size_t ow = 0; ow < grad_out.width(); ++ow) {
                    const double g = grad_out.at(n, c, oh, ow) * scale;
                    for (std::size_t i = 0; i < kernel_.h; ++i) {
                        for (std::size_t j = 0; j < kernel_.w; ++j) {
                            dx.at(n, c, oh * stride_.h + i, ow * stride_.w + j) += g;
                        }
                    }
                }
            }
        }
    }
    return dx;
}

// ---- BatchNorm2d ----

BatchNorm2d::BatchNorm2d(std::size_t maps, std::string name, double eps, double momentum)
    : maps_(maps), eps_(eps), momentum_(momentum), gamma_(name + ".gamma", maps), beta_(name + ".beta", maps),
      running_mean_(maps, 0.0), running_var_(maps, 1.0), inv_std_(maps, 1.0)
{
    std::fill(gamma_.value.begin(), gamma_.value.end(), 1.0);
}

Tensor4 BatchNorm2d::forward(Tensor4 x, Mode mode)
{
    if (x.maps() != maps_) {
        throw ShapeError("batch norm expects " + std::to_string(maps_) + " maps");
    }
    mode_ = mode;
    const std::size_t plane = x.height() * x.width();
    const std::size_t count = x.batch() * plane;
    const auto len = static_cast<Eigen::Index>(plane);
    xhat_.dims = x.dims;
    xhat_.values.resize(x.size());

    for (std::size_t c = 0; c < maps_; ++c) {
        double mean = running_mean_[c];
        double var = running_var_[c];
        if (mode == Mode::Train) {
            double s = 0.0;
            for (std::size_t n = 0; n < x.batch(); ++n) {
                const double* p = x.item(n) + c * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    s += p[i];
                }
            }
            mean = s / static_cast<double>(count);
            double ss = 0.0;
            for (std::size_t n = 0; n < x.batch(); ++n) {
                const double* p = x.item(n) + c * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    ss += (p[i] - mean) * (p[i] - mean);
                }
            }
            var = ss / static_cast<double>(count);
            const double unbiased = count > 1 ? ss / static_cast<double>(count - 1) : var;
            running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean;
            running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * unbiased;
        }
        const double inv = 1.0 / std::sqrt(var + eps_);
        inv_std_[c] = inv;
        for (std::size_t n = 0; n < x.batch(); ++n) {
            Eigen::Map<Eigen::ArrayXd> v(x.item(n) + c * plane, len);
            Eigen::Map<Eigen::ArrayXd> h(xhat_.item(n) + c * plane, len);
            h = (v - mean) * inv;
            v = gamma_.value[c] * h + beta_.value[c];
        }
    }
    return x;
}

Tensor4 BatchNorm2d::backward(Tensor4 grad_out)
{
    const std::size_t plane = grad_out.height() * grad_out.width();
    const auto count = static_cast<double>(grad_out.batch() * plane);
    const auto len = static_cast<Eigen::Index>(plane);
    for (std::size_t c = 0; c < maps_; ++c) {
        double sum_g = 0.0;
        double sum_gx = 0.0;
        for (std::size_t n = 0; n < grad_out.batch(); ++n) {
            const double* g = grad_out.item(n) + c * plane;
            const double* h = xhat_.item(n) + c * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                sum_g += g[i];
                sum_gx += g[i] * h[i];
            }
        }
        gamma_.grad[c] += sum_gx;
        beta_.grad[c] += sum_g;
        const double scale = gamma_.value[c] * inv_std_[c];
        for (std::size_t n = 0; n < grad_out.batch(); ++n) {
            Eigen::Map<Eigen::ArrayXd> g(grad_out.item(n) + c * plane, len);
            const Eigen::Map<const Eigen::ArrayXd> h(xhat_.item(n) + c * plane, len);
            if (mode_ == Mode::Train) {
                g = scale * (g - sum_g / count - h * (sum_gx / count));
            } else {
                g *= scale;
            }
        }
    }
    return grad_out;
}

// ---- Dropout ----

Tensor4 Dropout::forward(Tensor4 x, Mode mode)
{
    active_ = mode == Mode::Train && rate_ > 0.0;
    if (!active_) {
        return x;
    }
    const double keep = 1.0 - rate_;
    const auto threshold = static_cast<std::uint64_t>(keep * 4294967296.0);
    const double scale = 1.0 / keep;
    mask_.resize(x.size());
    // Two 32-bit uniforms per engine call; branch-free keep test.
    const std::size_t pairs = x.size() / 2;
    for (std::size_t i = 0; i < pairs; ++i) {
        const std::uint64_t bits = rng_();
        mask_[2 * i] = scale * static_cast<double>((bits & 0xffffffffU) < threshold);
        mask_[2 * i + 1] = scale * static_cast<double>((bits >> 32) < threshold);
    }
    if (x.size() % 2 == 1) {
        mask_.back() = scale * static_cast<double>((rng_() & 0xffffffffU) < threshold);
    }
    Eigen::Map<Eigen::ArrayXd>(x.values.data(), static_cast<Eigen::Index>(x.size())) *=
        Eigen::Map<const Eigen::ArrayXd>(mask_.data(), static_cast<Eigen::Index>(mask_.size()));
    return x;
}

Tensor4 Dropout::backward(Tensor4 grad_out)
{
    if (active_) {
        Eigen::Map<Eigen::ArrayXd>(grad_out.values.data(), static_cast<Eigen::Index>(grad_out.size())) *=
            Eigen::Map<const Eigen::ArrayXd>(mask_.data(), static_cast<Eigen::Index>(mask_.size()));
    }
    return grad_out;
}

// ---- Activation ----

Tensor4 ActivationLayer::forward(Tensor4 x, Mode)
{
    Eigen::Map<Eigen::ArrayXd> v(x.values.data(), static_cast<Eigen::Index>(x.size()));
    switch (kind_) {
    case Activation::Elu:
        v = v.max(0.0) + (v.min(0.0).exp() - 1.0);
        break;
    case Activation::Relu:
        v = v.max(0.0);
        break;
    case Activation::Identity:
        break;
    }
    output_ = x.values;
    return x;
}

Tensor4 ActivationLayer::backward(Tensor4 grad_out)
{
    Eigen::Map<Eigen::ArrayXd> g(grad_out.values.data(), static_cast<Eigen::Index>(grad_out.size()));
    const Eigen::Map<const Eigen::ArrayXd> y(output_.data(), static_cast<Eigen::Index>(output_.size()));
    // Both derivatives are recoverable from the output: ELU'(z) = y + 1 for
    // z <= 0, ReLU'(z) = 0 there.
    switch (kind_) {
    case Activation::Elu:
        g *= (y > 0.0).select(Eigen::ArrayXd::Ones(y.size()), y + 1.0);
        break;
    case Activation::Relu:
        g *= (y > 0.0).select(Eigen::ArrayXd::Ones(y.size()), Eigen::ArrayXd::Zero(y.size()));
        break;
    case Activation::Identity:
        break;
    }
    return grad_out;
}

// ---- Flatten ----

Tensor4 Flatten::forward(Tensor4 x, Mode)
{
    in_dims_ = x.dims;
    x.dims = {x.batch(), x.item_size(), 1, 1};
    return x;
}

Tensor4 Flatten::backward(Tensor4 grad_out)
{
    grad_out.dims = in_dims_;
    return grad_out;
}

// ---- DenseSoftmax ----

DenseSoftmax::DenseSoftmax(std::size_t in_features, std::size_t classes, std::string name)
    : in_(in_features), classes_(classes), weight_(name + ".weight", classes * in_features),
      bias_(name + ".bias", classes)
{
}

void DenseSoftmax::init_glorot(std::mt19937_64& rng)
{
    glorot(weight_.value, in_, classes_, rng);
}

Tensor4 DenseSoftmax::forward(Tensor4 x, Mode)
{
    if (x.item_size() != in_) {
        throw ShapeError("dense layer expects " + std::to_string(in_) + " features, got " +
                         std::to_string(x.item_size()));
    }
    input_ = std::move(x);
    const auto b = static_cast<Eigen::Index>(input_.batch());
    const ConstMapRow in(input_.values.data(), b, static_cast<Eigen::Index>(in_));
    const ConstMapRow w(weight_.value.data(), static_cast<Eigen::Index>(classes_), static_cast<Eigen::Index>(in_));
    RowMatrix logits = in * w.transpose();
    Tensor4 out(input_.batch(), classes_, 1, 1);
    for (Eigen::Index n = 0; n < b; ++n) {
        double mx = -INFINITY;
        for (std::size_t k = 0; k < classes_; ++k) {
            logits(n, static_cast<Eigen::Index>(k)) += bias_.value[k];
            mx = std::max(mx, logits(n, static_cast<Eigen::Index>(k)));
        }
        double z = 0.0;
        for (std::size_t k = 0; k < classes_; ++k) {
            z += std::exp(logits(n, static_cast<Eigen::Index>(k)) - mx);
        }
        for (std::size_t k = 0; k < classes_; ++k) {
            out.at(static_cast<std::size_t>(n), k, 0, 0) = std::exp(logits(n, static_cast<Eigen::Index>(k)) - mx) / z;
        }
    }
    return out;
}

Tensor4 DenseSoftmax::backward(Tensor4 grad_logits)
{
    const auto b = static_cast<Eigen::Index>(input_.batch());
    const auto k = static_cast<Eigen::Index>(classes_);
    const auto d = static_cast<Eigen::Index>(in_);
    const ConstMapRow g(grad_logits.values.data(), b, k);
    const ConstMapRow in(input_.values.data(), b, d);
    MapRow(weight_.grad.data(), k, d).noalias() += g.transpose() * in;
    for (Eigen::Index j = 0; j < k; ++j) {
        bias_.grad[static_cast<std::size_t>(j)] += g.col(j).sum();
    }
    Tensor4 dx;
    dx.dims = input_.dims;
    dx.values.resize(input_.size());
    MapRow(dx.values.data(), b, d).noalias() = g * ConstMapRow(weight_.value.data(), k, d);
    return dx;
}

}  // namespace vmi::nn
