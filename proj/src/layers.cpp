#include "hypernn/layers.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace hypernn {

Activation activation_from_string(const std::string& s) {
    if (s == "none" || s == "identity" || s.empty()) return Activation::none;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "tanh") return Activation::tanh;
    if (s == "relu") return Activation::relu;
    throw std::invalid_argument("unknown activation: " + s);
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::none: return "none";
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
    }
    return "none";
}

double activation_value(Activation a, double z) {
    switch (a) {
        case Activation::none: return z;
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::tanh: return std::tanh(z);
        case Activation::relu: return z > 0.0 ? z : 0.0;
    }
    return z;
}

double activation_derivative(Activation a, double z) {
    switch (a) {
        case Activation::none: return 1.0;
        case Activation::sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-z));
            return s * (1.0 - s);
        }
        case Activation::tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

Tensor split_activation(const Tensor& x, const std::function<double(double)>& sigma,
                        std::size_t al) {
    if (al == 0) throw std::invalid_argument("split_activation: al must be >= 1");
    if (x.rank() == 0 || x.shape().back() % al != 0)
        throw std::invalid_argument("split_activation: trailing axis not divisible by al");
    return broadcast_apply(sigma, x);
}

InitScheme InitScheme::parse(const std::string& name, double param) {
    InitScheme s;
    s.param = param;
    if (name == "zeros") s.kind = Kind::zeros;
    else if (name == "uniform") s.kind = Kind::uniform;
    else if (name == "normal") s.kind = Kind::normal;
    else if (name == "glorot_uniform") s.kind = Kind::glorot_uniform;
    else throw std::invalid_argument("unknown init scheme: " + name);
    return s;
}

std::string InitScheme::name() const {
    switch (kind) {
        case Kind::zeros: return "zeros";
        case Kind::uniform: return "uniform";
        case Kind::normal: return "normal";
        case Kind::glorot_uniform: return "glorot_uniform";
    }
    return "zeros";
}

namespace {

// Fixed 53-bit mapping so that streams do not depend on the stdlib's
// distribution implementations.
double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
    double u1 = unit_uniform(rng);
    while (u1 == 0.0) u1 = unit_uniform(rng);
    const double u2 = unit_uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace

Tensor init_tensor(const std::vector<std::size_t>& shape, const InitScheme& scheme,
                   std::size_t fan_in, std::size_t fan_out, std::uint64_t seed) {
    Tensor t = Tensor::zeros(shape);
    if (scheme.kind == InitScheme::Kind::zeros) return t;
    std::mt19937_64 rng(seed);
    if (scheme.kind == InitScheme::Kind::uniform) {
        for (double& v : t.data()) v = scheme.param * (2.0 * unit_uniform(rng) - 1.0);
    } else if (scheme.kind == InitScheme::Kind::normal) {
        for (double& v : t.data()) v = scheme.param * standard_normal(rng);
    } else {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& v : t.data()) v = bound * (2.0 * unit_uniform(rng) - 1.0);
    }
    return t;
}

namespace {

// W0 = C_{1,0}(A, K): W0[i, k, rest...] = sum_j A[i][j][k] K[j, rest...].
Tensor structure_contract(const Algebra& alg, const Tensor& kernel) {
    return contract(alg.structure(), kernel, 1, 0);
}

// Adjoint of structure_contract w.r.t. the kernel:
// gK[j, rest...] = sum_{i,k} A[i][j][k] gW0[i, k, rest...].
Tensor structure_contract_adjoint(const Algebra& alg, const Tensor& grad_w0) {
    const std::size_t n = alg.dim();
    if (grad_w0.rank() < 2 || grad_w0.shape()[0] != n || grad_w0.shape()[1] != n)
        throw std::invalid_argument("structure_contract_adjoint: bad gradient shape");
    std::vector<std::size_t> out_shape{n};
    std::size_t rest = 1;
    for (std::size_t d = 2; d < grad_w0.rank(); ++d) {
        out_shape.push_back(grad_w0.shape()[d]);
        rest *= grad_w0.shape()[d];
    }
    Tensor gk = Tensor::zeros(out_shape);
    auto gd = grad_w0.data();
    auto kd = gk.data();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t base = (i * n + k) * rest;
            for (std::size_t j = 0; j < n; ++j) {
                const double a = alg.coeff(i, j, k);
                if (a == 0.0) continue;
                const std::size_t obase = j * rest;
                for (std::size_t r = 0; r < rest; ++r) kd[obase + r] += a * gd[base + r];
            }
        }
    return gk;
}

Tensor apply_activation_tensor(Activation act, const Tensor& z) {
    if (act == Activation::none) return z;
    return broadcast_apply([act](double v) { return activation_value(act, v); }, z);
}

// upstream * act'(pre_activation), elementwise.
Tensor activation_vjp(Activation act, const Tensor& pre, const Tensor& upstream) {
    if (pre.shape() != upstream.shape())
        throw std::invalid_argument("backward: upstream gradient shape mismatch");
    if (act == Activation::none) return upstream;
    Tensor g = upstream;
    auto gd = g.data();
    auto zd = pre.data();
    for (std::size_t i = 0; i < g.size(); ++i) gd[i] *= activation_derivative(act, zd[i]);
    return g;
}

// Sum over all leading axes down to the trailing `keep` axes.
Tensor sum_leading(const Tensor& t, std::size_t keep) {
    std::vector<std::size_t> out_shape(t.shape().end() - static_cast<std::ptrdiff_t>(keep),
                                       t.shape().end());
    Tensor out = Tensor::zeros(out_shape);
    const std::size_t inner = out.size();
    auto od = out.data();
    auto td = t.data();
    for (std::size_t i = 0; i < t.size(); ++i) od[i % inner] += td[i];
    return out;
}

}  // namespace

HyperDenseLayer::HyperDenseLayer(Algebra algebra, std::size_t in_mult, std::size_t units,
                                 bool use_bias, Activation act)
    : algebra_(std::move(algebra)), in_(in_mult), units_(units), use_bias_(use_bias), act_(act) {
    if (in_ == 0 || units_ == 0)
        throw std::invalid_argument("hyperdense: in and units must be positive");
    kernel_ = Tensor::zeros({algebra_.dim(), in_, units_});
    bias_ = Tensor::zeros({algebra_.dim() * units_});
}

void HyperDenseLayer::set_kernel(Tensor k) {
    if (k.shape() != kernel_.shape())
        throw std::invalid_argument("hyperdense: kernel must have shape (al, in, units)");
    kernel_ = std::move(k);
}

void HyperDenseLayer::set_bias(Tensor b) {
    if (b.shape() != bias_.shape())
        throw std::invalid_argument("hyperdense: bias must have shape (al*units)");
    bias_ = std::move(b);
}

void HyperDenseLayer::initialize(const InitScheme& scheme, std::uint64_t seed) {
    kernel_ = init_tensor({algebra_.dim(), in_, units_}, scheme, input_width(), output_width(),
                          seed);
    bias_ = Tensor::zeros({output_width()});
}

Tensor HyperDenseLayer::forward(const Tensor& x) const {
    Cache unused;
    return forward(x, unused);
}

Tensor HyperDenseLayer::forward(const Tensor& x, Cache& cache) const {
    if (x.rank() != 2 || x.shape()[1] != input_width())
        throw std::invalid_argument("hyperdense: input must have shape (b, al*in)");

    Tensor w = structure_contract(algebra_, kernel_);  // (al, al, in, units)
    w = permute(w, {0, 2, 1, 3});                      // (al, in, al, units)
    w = reshape_merge(reshape_merge(w, 0), 1);         // (al*in, al*units)

    Tensor out = contract(x, w, 1, 0);  // (b, al*units)
    if (use_bias_) out = add(out, bias_);

    cache.input = x;
    cache.flat_weight = std::move(w);
    cache.pre_activation = out;
    return apply_activation_tensor(act_, out);
}

LayerGrads HyperDenseLayer::backward(const Cache& cache, const Tensor& upstream) const {
    const std::size_t al = algebra_.dim();
    Tensor g = activation_vjp(act_, cache.pre_activation, upstream);

    LayerGrads grads;
    if (use_bias_) grads.bias = sum_leading(g, 1);

    // Output = C_{1,0}(x, W): both factors get a plain contraction adjoint.
    grads.input = contract(g, cache.flat_weight, 1, 1);   // (b, al*in)
    Tensor gw = contract(cache.input, g, 0, 0);           // (al*in, al*units)

    gw = reshape_split(gw, 0, al, in_);
    gw = reshape_split(gw, 2, al, units_);  // (al, in, al, units)
    gw = permute(gw, {0, 2, 1, 3});         // (al, al, in, units)
    grads.kernel = structure_contract_adjoint(algebra_, gw);
    return grads;
}

HyperConvLayer::HyperConvLayer(Algebra algebra, std::vector<std::size_t> kernel_size,
                               std::size_t in_mult, std::size_t filters,
                               std::vector<std::size_t> strides, Padding pad, bool use_bias,
                               Activation act)
    : algebra_(std::move(algebra)),
      kernel_size_(std::move(kernel_size)),
      in_(in_mult),
      filters_(filters),
      strides_(std::move(strides)),
      pad_(pad),
      use_bias_(use_bias),
      act_(act) {
    const std::size_t k = kernel_size_.size();
    if (k < 1 || k > 3) throw std::invalid_argument("hyperconv: spatial rank must be 1, 2, or 3");
    if (in_ == 0 || filters_ == 0)
        throw std::invalid_argument("hyperconv: in and filters must be positive");
    if (strides_.size() != k) throw std::invalid_argument("hyperconv: strides length mismatch");
    for (std::size_t s : strides_)
        if (s == 0) throw std::invalid_argument("hyperconv: non-positive stride");
    for (std::size_t l : kernel_size_)
        if (l == 0) throw std::invalid_argument("hyperconv: zero kernel extent");

    std::vector<std::size_t> kshape{algebra_.dim()};
    kshape.insert(kshape.end(), kernel_size_.begin(), kernel_size_.end());
    kshape.push_back(in_);
    kshape.push_back(filters_);
    kernel_ = Tensor::zeros(kshape);
    bias_ = Tensor::zeros({algebra_.dim(), filters_});
}

void HyperConvLayer::set_kernel(Tensor k) {
    if (k.shape() != kernel_.shape())
        throw std::invalid_argument("hyperconv: kernel must have shape (al, L1..Lk, in, F)");
    kernel_ = std::move(k);
}

void HyperConvLayer::set_bias(Tensor b) {
    if (b.shape() != bias_.shape())
        throw std::invalid_argument("hyperconv: bias must have shape (al, F)");
    bias_ = std::move(b);
}

void HyperConvLayer::initialize(const InitScheme& scheme, std::uint64_t seed) {
    std::size_t receptive = 1;
    for (std::size_t l : kernel_size_) receptive *= l;
    kernel_ = init_tensor(std::vector<std::size_t>(kernel_.shape().begin(), kernel_.shape().end()),
                          scheme, receptive * input_channels(), receptive * output_channels(),
                          seed);
    bias_ = Tensor::zeros({algebra_.dim(), filters_});
}

std::vector<std::size_t> HyperConvLayer::output_spatial(
    std::span<const std::size_t> input_spatial) const {
    if (input_spatial.size() != spatial_rank())
        throw std::invalid_argument("hyperconv: spatial rank mismatch");
    std::vector<std::size_t> out(spatial_rank());
    for (std::size_t d = 0; d < spatial_rank(); ++d)
        out[d] = conv_output_size(input_spatial[d], kernel_size_[d], strides_[d], pad_);
    return out;
}

Tensor HyperConvLayer::forward(const Tensor& x) const {
    Cache unused;
    return forward(x, unused);
}

Tensor HyperConvLayer::forward(const Tensor& x, Cache& cache) const {
    const std::size_t k = spatial_rank();
    const std::size_t al = algebra_.dim();
    if (x.rank() != k + 2 || x.shape().back() != input_channels())
        throw std::invalid_argument("hyperconv: input must have shape (b, n1..nk, al*in)");

    Tensor w = structure_contract(algebra_, kernel_);  // (al, al, L1..Lk, in, F)

    // Cycle axis 0 (the first algebra index) in behind the kernel axes:
    // (i_a, k_a, l1..lk, in, f) -> (k_a, l1..lk, i_a, in, f).
    std::vector<std::size_t> perm(k + 4);
    perm[0] = k + 1;
    perm[1] = 0;
    for (std::size_t d = 0; d < k; ++d) perm[2 + d] = 1 + d;
    perm[k + 2] = k + 2;
    perm[k + 3] = k + 3;
    w = permute(w, perm);          // (al, L1..Lk, al, in, F)
    w = reshape_merge(w, k + 1);   // (al, L1..Lk, al*in, F)

    std::vector<Tensor> parts;
    parts.reserve(al);
    for (std::size_t i = 0; i < al; ++i) {
        Tensor wi = slice_axis(w, 0, i, 1);
        wi = reshape_merge(wi, 0);  // drop the leading unit axis
        parts.push_back(conv_kd(x, wi, strides_, pad_));
    }
    Tensor out = concat(parts, k + 1);  // channels: algebra component major

    if (use_bias_) out = add(out, reshape_merge(bias_, 0));

    cache.input = x;
    cache.merged_weight = std::move(w);
    cache.pre_activation = out;
    return apply_activation_tensor(act_, out);
}

LayerGrads HyperConvLayer::backward(const Cache& cache, const Tensor& upstream) const {
    const std::size_t k = spatial_rank();
    const std::size_t al = algebra_.dim();
    Tensor g = activation_vjp(act_, cache.pre_activation, upstream);

    LayerGrads grads;
    if (use_bias_) grads.bias = reshape_split(sum_leading(g, 1), 0, al, filters_);

    const std::size_t f = filters_;
    grads.input = Tensor::zeros(
        std::vector<std::size_t>(cache.input.shape().begin(), cache.input.shape().end()));
    Tensor gw = Tensor::zeros(std::vector<std::size_t>(cache.merged_weight.shape().begin(),
                                                       cache.merged_weight.shape().end()));
    for (std::size_t i = 0; i < al; ++i) {
        Tensor gi = slice_axis(g, k + 1, i * f, f);
        Tensor wi = reshape_merge(slice_axis(cache.merged_weight, 0, i, 1), 0);

        Tensor gx = conv_kd_grad_input(gi, wi, cache.input.shape(), strides_, pad_);
        auto acc = grads.input.data();
        auto src = gx.data();
        for (std::size_t t = 0; t < gx.size(); ++t) acc[t] += src[t];

        Tensor gwi = conv_kd_grad_kernel(cache.input, gi, wi.shape(), strides_, pad_);
        std::copy_n(gwi.data().data(), gwi.size(), gw.data().data() + i * gwi.size());
    }

    gw = reshape_split(gw, k + 1, al, in_);  // (al, L1..Lk, al, in, F)

    // Inverse of the forward permutation.
    std::vector<std::size_t> perm(k + 4);
    perm[0] = k + 1;
    perm[1] = 0;
    for (std::size_t d = 0; d < k; ++d) perm[2 + d] = 1 + d;
    perm[k + 2] = k + 2;
    perm[k + 3] = k + 3;
    std::vector<std::size_t> inv(perm.size());
    for (std::size_t s = 0; s < perm.size(); ++s) inv[perm[s]] = s;
    gw = permute(gw, inv);  // (al, al, L1..Lk, in, F)

    grads.kernel = structure_contract_adjoint(algebra_, gw);
    return grads;
}

}  // namespace hypernn
