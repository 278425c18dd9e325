#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypernn/model.hpp"

namespace hypernn {

/// Raised when a computation produces a non-finite value (diverged training,
/// non-finite loss). Distinct from structural errors for exit-code mapping.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Loss { mse, binary_cross_entropy };

Loss loss_from_string(const std::string& s);
std::string to_string(Loss l);

/// Mean over all entries; grad has the prediction's shape.
double loss_value(Loss l, const Tensor& pred, const Tensor& target);
Tensor loss_gradient(Loss l, const Tensor& pred, const Tensor& target);

struct TrainSpec {
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double learning_rate = 0.01;
    double momentum = 0.0;
    std::uint64_t seed = 0;
    Loss loss = Loss::mse;
    bool shuffle = true;

    void validate(std::size_t dataset_rows) const;
};

struct Metrics {
    std::size_t epoch;
    double train_loss;
    std::optional<double> eval_loss;
    std::int64_t wall_ms;
};

struct EvalData {
    Tensor features;
    Tensor targets;
};

/// Minibatch SGD with optional momentum. Deterministic given the seed: the
/// shuffle order is a seeded Fisher-Yates and gradients are reduced in fixed
/// batch order. Throws on a non-finite loss.
std::vector<Metrics> train(Model& model, const Tensor& features, const Tensor& targets,
                           const TrainSpec& spec,
                           const std::optional<EvalData>& eval_data = std::nullopt);

double evaluate(const Model& model, const Tensor& features, const Tensor& targets, Loss loss);

/// Max over rows of the Euclidean norm of (model(x) - target), the sup-norm
/// of the approximation error over the sampled grid.
double sup_norm_error(const Model& model, const Tensor& features, const Tensor& targets);

struct UatResult {
    double sup_error;
    std::vector<Metrics> history;
};

/// Trains a two-layer model: hypercomplex dense (hidden_units, split sigmoid)
/// then hypercomplex dense to output width al, and reports the sup-norm error
/// over the sampled grid. features: (rows, al*N), targets: (rows, al).
UatResult uat_fit(const Tensor& features, const Tensor& targets, const Algebra& algebra,
                  std::size_t hidden_units, const TrainSpec& spec);

struct UatTarget {
    Tensor features;  // (rows, al*N)
    Tensor targets;   // (rows, al)
};

/// Bundled sampled functions for the approximation demo:
///   "constant"            any algebra, g == fixed element
///   "complex_square"      complex only, g(z) = z^2 on a 21x21 grid of [-1,1]^2
///   "quaternion_rotation" quaternion only, g(q) = u q u^-1 for a fixed unit u
UatTarget make_uat_target(const std::string& name, const Algebra& algebra, std::uint64_t seed);

void write_metrics_jsonl(const std::string& path, std::span<const Metrics> history);

}  // namespace hypernn
