#include "hypernn/reference.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace hypernn::reference {

namespace {

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double symmetric_uniform(std::mt19937_64& rng) { return 2.0 * unit_uniform(rng) - 1.0; }

Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data()) v = symmetric_uniform(rng);
    return t;
}

bool next_index(std::span<const std::size_t> shape, std::vector<std::size_t>& idx) {
    for (std::size_t d = shape.size(); d-- > 0;) {
        if (++idx[d] < shape[d]) return true;
        idx[d] = 0;
    }
    return false;
}

}  // namespace

double rel_err(double a, double b, double floor) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double max_rel_err(const Tensor& a, const Tensor& b, double floor) {
    if (a.shape() != b.shape()) throw std::invalid_argument("max_rel_err: shape mismatch");
    double scale = floor, diff = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) scale = std::max(scale, std::abs(b[i]));
    for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
    return diff / scale;
}

Tensor dense_reference(const HyperDenseLayer& layer, const Tensor& x) {
    const Algebra& alg = layer.algebra();
    const std::size_t al = alg.dim();
    const std::size_t in = layer.in_mult();
    const std::size_t units = layer.units();
    if (x.rank() != 2 || x.shape()[1] != al * in)
        throw std::invalid_argument("dense_reference: input width mismatch");
    const std::size_t batch = x.shape()[0];

    Tensor out = Tensor::zeros({batch, al * units});
    std::vector<double> xv(al), kv(al);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t u = 0; u < units; ++u) {
            std::vector<double> acc(al, 0.0);
            for (std::size_t t = 0; t < in; ++t) {
                for (std::size_t i = 0; i < al; ++i) xv[i] = x.at({b, i * in + t});
                for (std::size_t j = 0; j < al; ++j) kv[j] = layer.kernel().at({j, t, u});
                const auto prod = algebra_mul(alg, xv, kv);
                for (std::size_t k = 0; k < al; ++k) acc[k] += prod[k];
            }
            for (std::size_t k = 0; k < al; ++k) out.at({b, k * units + u}) = acc[k];
        }
    }
    if (layer.use_bias())
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t c = 0; c < al * units; ++c) out.at({b, c}) += layer.bias()[c];
    if (layer.activation() != Activation::none)
        for (double& v : out.data()) v = activation_value(layer.activation(), v);
    return out;
}

Tensor conv_reference(const HyperConvLayer& layer, const Tensor& x) {
    const Algebra& alg = layer.algebra();
    const std::size_t al = alg.dim();
    const std::size_t in = layer.in_mult();
    const std::size_t filters = layer.filters();
    const std::size_t k = layer.spatial_rank();
    if (x.rank() != k + 2 || x.shape().back() != al * in)
        throw std::invalid_argument("conv_reference: input shape mismatch");
    const std::size_t batch = x.shape()[0];

    std::vector<std::size_t> n(k), m(k), pad_before(k, 0);
    for (std::size_t d = 0; d < k; ++d) {
        n[d] = x.shape()[1 + d];
        m[d] = conv_output_size(n[d], layer.kernel_size()[d], layer.strides()[d],
                                layer.padding());
        if (layer.padding() == Padding::same) {
            const std::size_t span = (m[d] - 1) * layer.strides()[d] + layer.kernel_size()[d];
            pad_before[d] = span > n[d] ? (span - n[d]) / 2 : 0;
        }
    }

    std::vector<std::size_t> out_shape{batch};
    out_shape.insert(out_shape.end(), m.begin(), m.end());
    out_shape.push_back(al * filters);
    Tensor out = Tensor::zeros(out_shape);

    std::vector<double> xv(al), kv(al);
    std::vector<std::size_t> p(k, 0), o(k, 0), xidx(k + 2), kidx(k + 3), oidx(k + 2);
    for (std::size_t b = 0; b < batch; ++b) {
        std::fill(p.begin(), p.end(), 0);
        do {
            for (std::size_t f = 0; f < filters; ++f) {
                std::vector<double> acc(al, 0.0);
                std::fill(o.begin(), o.end(), 0);
                do {
                    bool inside = true;
                    for (std::size_t d = 0; d < k; ++d) {
                        const std::ptrdiff_t q =
                            static_cast<std::ptrdiff_t>(p[d] * layer.strides()[d] + o[d]) -
                            static_cast<std::ptrdiff_t>(pad_before[d]);
                        if (q < 0 || q >= static_cast<std::ptrdiff_t>(n[d])) {
                            inside = false;
                            break;
                        }
                        xidx[1 + d] = static_cast<std::size_t>(q);
                    }
                    if (!inside) continue;
                    xidx[0] = b;
                    for (std::size_t t = 0; t < in; ++t) {
                        for (std::size_t i = 0; i < al; ++i) {
                            xidx[k + 1] = i * in + t;
                            xv[i] = x.at(xidx);
                        }
                        for (std::size_t j = 0; j < al; ++j) {
                            kidx[0] = j;
                            for (std::size_t d = 0; d < k; ++d) kidx[1 + d] = o[d];
                            kidx[k + 1] = t;
                            kidx[k + 2] = f;
                            kv[j] = layer.kernel().at(kidx);
                        }
                        const auto prod = algebra_mul(alg, xv, kv);
                        for (std::size_t c = 0; c < al; ++c) acc[c] += prod[c];
                    }
                } while (next_index(layer.kernel_size(), o));

                oidx[0] = b;
                for (std::size_t d = 0; d < k; ++d) oidx[1 + d] = p[d];
                for (std::size_t c = 0; c < al; ++c) {
                    oidx[k + 1] = c * filters + f;
                    double v = acc[c];
                    if (layer.use_bias()) v += layer.bias().at({c, f});
                    out.at(oidx) = v;
                }
            }
        } while (next_index(m, p));
    }
    if (layer.activation() != Activation::none)
        for (double& v : out.data()) v = activation_value(layer.activation(), v);
    return out;
}

namespace {

double weighted_sum(const Tensor& a, const Tensor& w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * w[i];
    return acc;
}

constexpr double kGradFloor = 1e-5;

template <typename LayerT>
double gradient_check_impl(const LayerT& layer, const Tensor& x, std::uint64_t seed, double h) {
    LayerT work = layer;
    typename LayerT::Cache cache;
    const Tensor out = work.forward(x, cache);
    std::mt19937_64 rng(seed);
    const Tensor g =
        random_tensor(std::vector<std::size_t>(out.shape().begin(), out.shape().end()), rng);
    const LayerGrads grads = work.backward(cache, g);

    double worst = 0.0;
    {
        Tensor kernel = layer.kernel();
        for (std::size_t i = 0; i < kernel.size(); ++i) {
            const double orig = kernel[i];
            kernel[i] = orig + h;
            work.set_kernel(kernel);
            const double sp = weighted_sum(work.forward(x), g);
            kernel[i] = orig - h;
            work.set_kernel(kernel);
            const double sm = weighted_sum(work.forward(x), g);
            kernel[i] = orig;
            const double fd = (sp - sm) / (2.0 * h);
            worst = std::max(worst, rel_err(grads.kernel[i], fd, kGradFloor));
        }
        work.set_kernel(kernel);
    }
    if (layer.use_bias()) {
        Tensor bias = layer.bias();
        for (std::size_t i = 0; i < bias.size(); ++i) {
            const double orig = bias[i];
            bias[i] = orig + h;
            work.set_bias(bias);
            const double sp = weighted_sum(work.forward(x), g);
            bias[i] = orig - h;
            work.set_bias(bias);
            const double sm = weighted_sum(work.forward(x), g);
            bias[i] = orig;
            const double fd = (sp - sm) / (2.0 * h);
            worst = std::max(worst, rel_err((*grads.bias)[i], fd, kGradFloor));
        }
        work.set_bias(bias);
    }
    return worst;
}

}  // namespace

double dense_gradient_check(const HyperDenseLayer& layer, const Tensor& x, std::uint64_t seed,
                            double h) {
    return gradient_check_impl(layer, x, seed, h);
}

double conv_gradient_check(const HyperConvLayer& layer, const Tensor& x, std::uint64_t seed,
                           double h) {
    return gradient_check_impl(layer, x, seed, h);
}

LayerKind layer_kind_from_string(const std::string& s) {
    if (s == "dense") return LayerKind::dense;
    if (s == "conv1d") return LayerKind::conv1d;
    if (s == "conv2d") return LayerKind::conv2d;
    if (s == "conv3d") return LayerKind::conv3d;
    throw std::invalid_argument("unknown layer kind: " + s);
}

namespace {

// Smooth activations only for gradient trials; relu's kink breaks central
// differences at points near zero pre-activation.
Activation forward_activation(std::size_t trial) {
    switch (trial % 4) {
        case 0: return Activation::none;
        case 1: return Activation::sigmoid;
        case 2: return Activation::tanh;
        default: return Activation::relu;
    }
}

Activation smooth_activation(std::size_t trial) {
    switch (trial % 3) {
        case 0: return Activation::none;
        case 1: return Activation::sigmoid;
        default: return Activation::tanh;
    }
}

}  // namespace

VerifyReport verify_layer(const Algebra& algebra, LayerKind kind, std::size_t forward_trials,
                          std::size_t gradient_trials, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto draw = [&](std::size_t lo, std::size_t hi) {  // inclusive
        return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
    };

    VerifyReport report;
    const std::size_t k = kind == LayerKind::dense ? 0
                          : kind == LayerKind::conv1d ? 1
                          : kind == LayerKind::conv2d ? 2
                                                      : 3;

    const std::size_t total = forward_trials + gradient_trials;
    for (std::size_t trial = 0; trial < total; ++trial) {
        const bool grad_trial = trial >= forward_trials;
        const Activation act =
            grad_trial ? smooth_activation(trial) : forward_activation(trial);
        const bool bias = (rng() % 2) == 0;
        const std::size_t batch = draw(1, 4);
        const std::size_t in = draw(1, 3);

        if (kind == LayerKind::dense) {
            const std::size_t units = draw(1, 3);
            HyperDenseLayer layer(algebra, in, units, bias, act);
            layer.set_kernel(random_tensor({algebra.dim(), in, units}, rng));
            if (bias) layer.set_bias(random_tensor({algebra.dim() * units}, rng));
            const Tensor x = random_tensor({batch, layer.input_width()}, rng);
            if (grad_trial) {
                report.max_gradient_rel_err = std::max(
                    report.max_gradient_rel_err, dense_gradient_check(layer, x, rng()));
                ++report.gradient_trials;
            } else {
                report.max_forward_rel_err =
                    std::max(report.max_forward_rel_err,
                             max_rel_err(layer.forward(x), dense_reference(layer, x), 1e-10));
                ++report.forward_trials;
            }
        } else {
            const std::size_t filters = draw(1, 3);
            const Padding pad = (rng() % 2) == 0 ? Padding::valid : Padding::same;
            std::vector<std::size_t> ksize(k), strides(k), spatial(k);
            for (std::size_t d = 0; d < k; ++d) {
                ksize[d] = draw(1, 3);
                strides[d] = draw(1, k == 3 ? 2 : 3);
                spatial[d] = draw(ksize[d], k == 3 ? 4 : 6);  // valid-admissible
            }
            HyperConvLayer layer(algebra, ksize, in, filters, strides, pad, bias, act);
            layer.set_kernel(random_tensor(
                std::vector<std::size_t>(layer.kernel().shape().begin(),
                                         layer.kernel().shape().end()),
                rng));
            if (bias) layer.set_bias(random_tensor({algebra.dim(), filters}, rng));
            std::vector<std::size_t> xshape{batch};
            xshape.insert(xshape.end(), spatial.begin(), spatial.end());
            xshape.push_back(layer.input_channels());
            const Tensor x = random_tensor(xshape, rng);
            if (grad_trial) {
                report.max_gradient_rel_err =
                    std::max(report.max_gradient_rel_err, conv_gradient_check(layer, x, rng()));
                ++report.gradient_trials;
            } else {
                report.max_forward_rel_err =
                    std::max(report.max_forward_rel_err,
                             max_rel_err(layer.forward(x), conv_reference(layer, x), 1e-10));
                ++report.forward_trials;
            }
        }
    }
    return report;
}

}  // namespace hypernn::reference
