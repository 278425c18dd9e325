#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hypernn/model.hpp"
#include "hypernn/train.hpp"

namespace hypernn {

struct LayerSpec {
    std::string type;     // hyperdense | hyperconv1d | hyperconv2d | hyperconv3d
    std::string algebra;  // "builtin:<name>" or a file path
    std::size_t in_mult = 1;
    std::size_t units = 1;    // dense
    std::size_t filters = 1;  // conv
    std::vector<std::size_t> kernel_size;
    std::vector<std::size_t> strides;
    Padding padding = Padding::valid;
    bool bias = true;
    Activation activation = Activation::none;
    InitScheme init;
};

struct ModelSpec {
    std::vector<std::size_t> input_shape;  // excluding batch
    std::vector<LayerSpec> layers;
};

/// Parses and validates the spec, including the layer width chain.
ModelSpec load_model_spec(const std::string& path);
ModelSpec parse_model_spec(const std::string& text, const std::string& base_dir = "");

/// Instantiates layers (uninitialized parameters) and revalidates the chain.
Model build_model(const ModelSpec& spec, const std::string& base_dir = "");

/// Applies each layer's declared init scheme, deterministically from the seed.
void initialize_model(Model& model, const ModelSpec& spec, std::uint64_t seed);

TrainSpec load_train_spec(const std::string& path);
TrainSpec parse_train_spec(const std::string& text);

struct Dataset {
    Tensor features;  // (rows, feature width)
    Tensor targets;   // (rows, target width)
    std::optional<std::vector<std::size_t>> reshape_to;  // conv sample shape directive
};

/// Strict CSV: header row required, cells parsed with the C float grammar
/// (decimal point, optional exponent); errors report row and column.
Dataset load_dataset_csv(const std::string& path, const std::vector<std::string>& feature_cols,
                         const std::vector<std::string>& target_cols);

/// Data binding file: {"csv": path, "feature_cols": [...], "target_cols": [...],
/// "reshape_to": [...] (optional)}. A relative csv path resolves against the
/// binding file's directory.
Dataset load_dataset_binding(const std::string& path);

// Checkpoint container: magic "HXCK", u32 version, u64 JSON length, JSON
// metadata (model spec with inline algebra tables), then kernel and bias
// tensors per layer in the tensor binary format.
void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

}  // namespace hypernn
