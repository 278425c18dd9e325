#pragma once

#include <cstdint>
#include <string>

#include "hypernn/layers.hpp"

namespace hypernn::reference {

// Deliberately naive re-implementations of the layer math that work directly
// on algebra-valued views via algebra_mul, with no tensor contractions. They
// exist to cross-check the tensorial layer path and must stay independent of
// it.

/// x: (b, al*in) with channel Rs(i_al, i_in); returns (b, al*units).
Tensor dense_reference(const HyperDenseLayer& layer, const Tensor& x);

/// x: (b, n1..nk, al*in); returns (b, m1..mk, al*F), algebra component major.
Tensor conv_reference(const HyperConvLayer& layer, const Tensor& x);

/// Central finite differences of sum(forward(x) * weight) over every kernel
/// (and bias) entry against the analytic backward pass. Returns the max
/// relative error.
double dense_gradient_check(const HyperDenseLayer& layer, const Tensor& x, std::uint64_t seed,
                            double h = 1e-5);
double conv_gradient_check(const HyperConvLayer& layer, const Tensor& x, std::uint64_t seed,
                           double h = 1e-5);

enum class LayerKind { dense, conv1d, conv2d, conv3d };
LayerKind layer_kind_from_string(const std::string& s);

struct VerifyReport {
    std::size_t forward_trials = 0;
    std::size_t gradient_trials = 0;
    double max_forward_rel_err = 0.0;
    double max_gradient_rel_err = 0.0;
};

/// Randomized oracle-equivalence and gradient-check trials for one algebra
/// and layer kind. Shapes, parameters, and inputs are drawn from the seed.
VerifyReport verify_layer(const Algebra& algebra, LayerKind kind, std::size_t forward_trials,
                          std::size_t gradient_trials, std::uint64_t seed);

/// |a - b| / max(|a|, |b|, floor).
double rel_err(double a, double b, double floor = 1e-12);

/// max_i |a_i - b_i| normalized by the max-norm of b (at least floor).
double max_rel_err(const Tensor& a, const Tensor& b, double floor = 1e-12);

}  // namespace hypernn::reference
