#pragma once

#include <variant>
#include <vector>

#include "hypernn/layers.hpp"

namespace hypernn {

using Layer = std::variant<HyperDenseLayer, HyperConvLayer>;

/// Feed-forward stack of hypercomplex layers. The input shape (excluding
/// batch) is declared up front and the per-layer shape chain is validated at
/// construction. Data is reshaped between layers as dictated by the chain;
/// a conv output feeding a dense layer is flattened.
class Model {
public:
    Model(std::vector<std::size_t> input_shape, std::vector<Layer> layers);

    const std::vector<std::size_t>& input_shape() const { return input_shape_; }
    std::size_t input_width() const;
    std::size_t output_width() const;

    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }

    /// Per-layer input shapes excluding batch, as validated at construction.
    const std::vector<std::vector<std::size_t>>& layer_input_shapes() const {
        return layer_inputs_;
    }

    void initialize(const InitScheme& scheme, std::uint64_t seed);

    /// x: (rows, input_width); returns (rows, output_width).
    Tensor forward(const Tensor& x) const;

    struct ForwardState {
        std::vector<std::variant<HyperDenseLayer::Cache, HyperConvLayer::Cache>> caches;
        Tensor output;  // (rows, output_width)
    };
    ForwardState forward_cached(const Tensor& x) const;

    struct Grads {
        std::vector<LayerGrads> per_layer;  // input fields are consumed by chaining
        Tensor input;                       // (rows, input_width)
    };
    Grads backward(const ForwardState& state, const Tensor& upstream) const;

private:
    std::vector<std::size_t> input_shape_;
    std::vector<Layer> layers_;
    std::vector<std::vector<std::size_t>> layer_inputs_;  // excluding batch
    std::vector<std::size_t> output_shape_;               // excluding batch
};

}  // namespace hypernn
