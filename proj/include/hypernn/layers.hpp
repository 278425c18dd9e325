#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hypernn/algebra.hpp"
#include "hypernn/tensor.hpp"

namespace hypernn {

enum class Activation { none, sigmoid, tanh, relu };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

double activation_value(Activation a, double z);
double activation_derivative(Activation a, double z);

/// Componentwise (split) activation: the scalar function applied to every
/// real component of an algebra-valued signal. Requires the trailing axis
/// width to be divisible by al.
Tensor split_activation(const Tensor& x, const std::function<double(double)>& sigma,
                        std::size_t al);

struct InitScheme {
    enum class Kind { zeros, uniform, normal, glorot_uniform };
    Kind kind = Kind::glorot_uniform;
    double param = 0.05;  // half-width for uniform, stddev for normal

    static InitScheme parse(const std::string& name, double param = 0.05);
    std::string name() const;
};

struct LayerGrads {
    Tensor input;
    Tensor kernel;
    std::optional<Tensor> bias;
};

/// Dense layer over an arbitrary algebra. Kernel shape (al, in, units);
/// input width al*in, output width al*units. Immutable during forward and
/// backward; parameters change only through set_kernel/set_bias.
class HyperDenseLayer {
public:
    HyperDenseLayer(Algebra algebra, std::size_t in_mult, std::size_t units, bool use_bias,
                    Activation act);

    const Algebra& algebra() const { return algebra_; }
    std::size_t in_mult() const { return in_; }
    std::size_t units() const { return units_; }
    bool use_bias() const { return use_bias_; }
    Activation activation() const { return act_; }

    std::size_t input_width() const { return algebra_.dim() * in_; }
    std::size_t output_width() const { return algebra_.dim() * units_; }

    const Tensor& kernel() const { return kernel_; }
    const Tensor& bias() const { return bias_; }
    void set_kernel(Tensor k);
    void set_bias(Tensor b);

    void initialize(const InitScheme& scheme, std::uint64_t seed);

    Tensor forward(const Tensor& x) const;

    struct Cache {
        Tensor input;
        Tensor flat_weight;     // (al*in, al*units)
        Tensor pre_activation;  // after bias, before activation
    };
    Tensor forward(const Tensor& x, Cache& cache) const;
    LayerGrads backward(const Cache& cache, const Tensor& upstream) const;

private:
    Algebra algebra_;
    std::size_t in_, units_;
    bool use_bias_;
    Activation act_;
    Tensor kernel_;  // (al, in, units)
    Tensor bias_;    // (al*units), zeros when unused
};

/// k-dimensional convolutional layer over an arbitrary algebra, k in {1,2,3}.
/// Kernel shape (al, L1..Lk, in, F); input channels al*in, output channels
/// al*F with the algebra component as the major index.
class HyperConvLayer {
public:
    HyperConvLayer(Algebra algebra, std::vector<std::size_t> kernel_size, std::size_t in_mult,
                   std::size_t filters, std::vector<std::size_t> strides, Padding pad,
                   bool use_bias, Activation act);

    const Algebra& algebra() const { return algebra_; }
    std::size_t spatial_rank() const { return kernel_size_.size(); }
    const std::vector<std::size_t>& kernel_size() const { return kernel_size_; }
    std::size_t in_mult() const { return in_; }
    std::size_t filters() const { return filters_; }
    const std::vector<std::size_t>& strides() const { return strides_; }
    Padding padding() const { return pad_; }
    bool use_bias() const { return use_bias_; }
    Activation activation() const { return act_; }

    std::size_t input_channels() const { return algebra_.dim() * in_; }
    std::size_t output_channels() const { return algebra_.dim() * filters_; }

    const Tensor& kernel() const { return kernel_; }
    const Tensor& bias() const { return bias_; }
    void set_kernel(Tensor k);
    void set_bias(Tensor b);

    void initialize(const InitScheme& scheme, std::uint64_t seed);

    /// Output spatial dims for a given input spatial extent.
    std::vector<std::size_t> output_spatial(std::span<const std::size_t> input_spatial) const;

    Tensor forward(const Tensor& x) const;

    struct Cache {
        Tensor input;
        Tensor merged_weight;   // (al, L1..Lk, al*in, F)
        Tensor pre_activation;
    };
    Tensor forward(const Tensor& x, Cache& cache) const;
    LayerGrads backward(const Cache& cache, const Tensor& upstream) const;

private:
    Algebra algebra_;
    std::vector<std::size_t> kernel_size_;
    std::size_t in_, filters_;
    std::vector<std::size_t> strides_;
    Padding pad_;
    bool use_bias_;
    Activation act_;
    Tensor kernel_;  // (al, L1..Lk, in, F)
    Tensor bias_;    // (al, F), zeros when unused
};

/// Deterministic kernel fill used by both layer types.
Tensor init_tensor(const std::vector<std::size_t>& shape, const InitScheme& scheme,
                   std::size_t fan_in, std::size_t fan_out, std::uint64_t seed);

}  // namespace hypernn
