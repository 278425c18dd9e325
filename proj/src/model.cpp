#include "hypernn/model.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace hypernn {

namespace {

std::string shape_str(std::span<const std::size_t> s) {
    std::string out = "(";
    for (std::size_t d = 0; d < s.size(); ++d) {
        if (d) out += ", ";
        out += std::to_string(s[d]);
    }
    return out + ")";
}

}  // namespace

Model::Model(std::vector<std::size_t> input_shape, std::vector<Layer> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
    if (layers_.empty()) throw std::invalid_argument("model: needs at least one layer");
    if (input_shape_.empty()) throw std::invalid_argument("model: empty input shape");

    std::vector<std::size_t> cur = input_shape_;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const std::size_t width = shape_product(cur);
        if (std::holds_alternative<HyperDenseLayer>(layers_[li])) {
            const auto& l = std::get<HyperDenseLayer>(layers_[li]);
            if (width != l.input_width())
                throw std::invalid_argument(
                    "model: layer " + std::to_string(li) + " (hyperdense) expects width " +
                    std::to_string(l.input_width()) + " but the previous layer produces " +
                    std::to_string(width));
            layer_inputs_.push_back({l.input_width()});
            cur = {l.output_width()};
        } else {
            const auto& l = std::get<HyperConvLayer>(layers_[li]);
            const std::size_t k = l.spatial_rank();
            if (cur.size() != k + 1)
                throw std::invalid_argument(
                    "model: layer " + std::to_string(li) + " (hyperconv" + std::to_string(k) +
                    "d) expects a rank-" + std::to_string(k + 1) +
                    " sample (n1..nk, channels) but the previous layer produces " +
                    shape_str(cur));
            if (cur.back() != l.input_channels())
                throw std::invalid_argument(
                    "model: layer " + std::to_string(li) + " (hyperconv) expects " +
                    std::to_string(l.input_channels()) + " channels but the previous layer produces " +
                    std::to_string(cur.back()));
            layer_inputs_.push_back(cur);
            const auto spatial = l.output_spatial(std::span(cur).first(k));
            cur.assign(spatial.begin(), spatial.end());
            cur.push_back(l.output_channels());
        }
    }
    output_shape_ = cur;
}

std::size_t Model::input_width() const { return shape_product(input_shape_); }
std::size_t Model::output_width() const { return shape_product(output_shape_); }

void Model::initialize(const InitScheme& scheme, std::uint64_t seed) {
    // Per-layer seed offsets keep layers decorrelated under one model seed.
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const std::uint64_t s = seed + 0x9e3779b97f4a7c15ull * (li + 1);
        std::visit([&](auto& l) { l.initialize(scheme, s); }, layers_[li]);
    }
}

Tensor Model::forward(const Tensor& x) const {
    return forward_cached(x).output;
}

Model::ForwardState Model::forward_cached(const Tensor& x) const {
    if (x.rank() != 2 || x.shape()[1] != input_width())
        throw std::invalid_argument("model: input must have shape (rows, " +
                                    std::to_string(input_width()) + ")");
    const std::size_t rows = x.shape()[0];

    ForwardState st;
    Tensor cur = x;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        std::vector<std::size_t> want{rows};
        want.insert(want.end(), layer_inputs_[li].begin(), layer_inputs_[li].end());
        cur = reshape(cur, want);
        if (std::holds_alternative<HyperDenseLayer>(layers_[li])) {
            HyperDenseLayer::Cache c;
            cur = std::get<HyperDenseLayer>(layers_[li]).forward(cur, c);
            st.caches.push_back(std::move(c));
        } else {
            HyperConvLayer::Cache c;
            cur = std::get<HyperConvLayer>(layers_[li]).forward(cur, c);
            st.caches.push_back(std::move(c));
        }
    }
    st.output = reshape(cur, {rows, output_width()});
    return st;
}

Model::Grads Model::backward(const ForwardState& state, const Tensor& upstream) const {
    if (upstream.shape() != state.output.shape())
        throw std::invalid_argument("model backward: upstream gradient shape mismatch");

    Grads grads;
    grads.per_layer.resize(layers_.size());
    Tensor g = upstream;
    for (std::size_t li = layers_.size(); li-- > 0;) {
        if (std::holds_alternative<HyperDenseLayer>(layers_[li])) {
            const auto& cache = std::get<HyperDenseLayer::Cache>(state.caches[li]);
            g = reshape(g, std::vector<std::size_t>(cache.pre_activation.shape().begin(),
                                                    cache.pre_activation.shape().end()));
            grads.per_layer[li] = std::get<HyperDenseLayer>(layers_[li]).backward(cache, g);
        } else {
            const auto& cache = std::get<HyperConvLayer::Cache>(state.caches[li]);
            g = reshape(g, std::vector<std::size_t>(cache.pre_activation.shape().begin(),
                                                    cache.pre_activation.shape().end()));
            grads.per_layer[li] = std::get<HyperConvLayer>(layers_[li]).backward(cache, g);
        }
        g = std::move(grads.per_layer[li].input);
    }
    grads.input = reshape(g, {upstream.shape()[0], input_width()});
    return grads;
}

}  // namespace hypernn
