#include "hypernn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace hypernn {

Loss loss_from_string(const std::string& s) {
    if (s == "mse") return Loss::mse;
    if (s == "binary-cross-entropy" || s == "bce") return Loss::binary_cross_entropy;
    throw std::invalid_argument("unknown loss: " + s);
}

std::string to_string(Loss l) {
    return l == Loss::mse ? "mse" : "binary-cross-entropy";
}

double loss_value(Loss l, const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape())
        throw std::invalid_argument("loss: prediction/target shape mismatch");
    const std::size_t n = pred.size();
    double acc = 0.0;
    if (l == Loss::mse) {
        for (std::size_t i = 0; i < n; ++i) {
            const double d = pred[i] - target[i];
            acc += d * d;
        }
    } else {
        constexpr double eps = 1e-12;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = std::clamp(pred[i], eps, 1.0 - eps);
            acc -= target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p);
        }
    }
    return acc / static_cast<double>(n);
}

Tensor loss_gradient(Loss l, const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape())
        throw std::invalid_argument("loss: prediction/target shape mismatch");
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    Tensor g = pred;
    auto gd = g.data();
    auto td = target.data();
    if (l == Loss::mse) {
        for (std::size_t i = 0; i < g.size(); ++i) gd[i] = 2.0 * (gd[i] - td[i]) * inv_n;
    } else {
        constexpr double eps = 1e-12;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double p = std::clamp(gd[i], eps, 1.0 - eps);
            gd[i] = (p - td[i]) / (p * (1.0 - p)) * inv_n;
        }
    }
    return g;
}

void TrainSpec::validate(std::size_t dataset_rows) const {
    if (epochs == 0) throw std::invalid_argument("train spec: epochs must be positive");
    if (batch_size == 0) throw std::invalid_argument("train spec: batch_size must be positive");
    if (batch_size > dataset_rows)
        throw std::invalid_argument("train spec: batch_size exceeds dataset size");
    if (!(learning_rate > 0.0) && learning_rate != 0.0)
        throw std::invalid_argument("train spec: learning_rate must be finite and >= 0");
    if (!std::isfinite(learning_rate) || !std::isfinite(momentum))
        throw std::invalid_argument("train spec: non-finite hyperparameter");
    if (momentum < 0.0 || momentum >= 1.0)
        throw std::invalid_argument("train spec: momentum must be in [0, 1)");
}

namespace {

Tensor gather_rows(const Tensor& t, std::span<const std::size_t> rows) {
    const std::size_t width = t.size() / t.shape()[0];
    Tensor out = Tensor::zeros({rows.size(), width});
    for (std::size_t r = 0; r < rows.size(); ++r)
        std::copy_n(t.data().data() + rows[r] * width, width, out.data().data() + r * width);
    return out;
}

// Seeded Fisher-Yates; independent of the stdlib's std::shuffle details.
void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
}

struct SgdState {
    std::vector<Tensor> kernel_velocity;
    std::vector<Tensor> bias_velocity;
};

void apply_step(Model& model, const Model::Grads& grads, SgdState& st, double lr,
                double momentum) {
    for (std::size_t li = 0; li < model.layers().size(); ++li) {
        const LayerGrads& g = grads.per_layer[li];
        auto update = [&](Tensor& vel, const Tensor& grad, const Tensor& param, auto setter) {
            Tensor next = param;
            auto vd = vel.data();
            auto gd = grad.data();
            auto pd = next.data();
            for (std::size_t i = 0; i < next.size(); ++i) {
                vd[i] = momentum * vd[i] + gd[i];
                pd[i] -= lr * vd[i];
            }
            setter(std::move(next));
        };
        std::visit(
            [&](auto& layer) {
                update(st.kernel_velocity[li], g.kernel, layer.kernel(),
                       [&](Tensor t) { layer.set_kernel(std::move(t)); });
                if (g.bias)
                    update(st.bias_velocity[li], *g.bias, layer.bias(),
                           [&](Tensor t) { layer.set_bias(std::move(t)); });
            },
            model.layers()[li]);
    }
}

}  // namespace

std::vector<Metrics> train(Model& model, const Tensor& features, const Tensor& targets,
                           const TrainSpec& spec, const std::optional<EvalData>& eval_data) {
    if (features.rank() != 2 || targets.rank() != 2)
        throw std::invalid_argument("train: features and targets must be rank 2");
    if (features.shape()[0] != targets.shape()[0])
        throw std::invalid_argument("train: feature/target row count mismatch");
    if (features.shape()[1] != model.input_width())
        throw std::invalid_argument("train: feature width does not match model input");
    if (targets.shape()[1] != model.output_width())
        throw std::invalid_argument("train: target width does not match model output");
    const std::size_t rows = features.shape()[0];
    spec.validate(rows);

    SgdState st;
    for (const Layer& l : model.layers()) {
        std::visit(
            [&](const auto& layer) {
                st.kernel_velocity.push_back(Tensor::zeros(std::vector<std::size_t>(
                    layer.kernel().shape().begin(), layer.kernel().shape().end())));
                st.bias_velocity.push_back(Tensor::zeros(std::vector<std::size_t>(
                    layer.bias().shape().begin(), layer.bias().shape().end())));
            },
            l);
    }

    std::mt19937_64 rng(spec.seed);
    std::vector<std::size_t> order(rows);
    for (std::size_t i = 0; i < rows; ++i) order[i] = i;

    std::vector<Metrics> history;
    history.reserve(spec.epochs);
    for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        if (spec.shuffle) shuffle_indices(order, rng);

        for (std::size_t lo = 0; lo < rows; lo += spec.batch_size) {
            const std::size_t len = std::min(spec.batch_size, rows - lo);
            const std::span<const std::size_t> batch(order.data() + lo, len);
            const Tensor x = gather_rows(features, batch);
            const Tensor y = gather_rows(targets, batch);

            const auto state = model.forward_cached(x);
            const double l = loss_value(spec.loss, state.output, y);
            if (!std::isfinite(l))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
            const auto grads = model.backward(state, loss_gradient(spec.loss, state.output, y));
            apply_step(model, grads, st, spec.learning_rate, spec.momentum);
        }

        Metrics m;
        m.epoch = epoch;
        // Post-update full-dataset loss, so full-batch train-then-eval on the
        // same data reproduces the last recorded train loss.
        m.train_loss = evaluate(model, features, targets, spec.loss);
        if (eval_data)
            m.eval_loss = evaluate(model, eval_data->features, eval_data->targets, spec.loss);
        m.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
        history.push_back(m);
    }
    return history;
}

double evaluate(const Model& model, const Tensor& features, const Tensor& targets, Loss loss) {
    return loss_value(loss, model.forward(features), targets);
}

double sup_norm_error(const Model& model, const Tensor& features, const Tensor& targets) {
    const Tensor pred = model.forward(features);
    if (pred.shape() != targets.shape())
        throw std::invalid_argument("sup_norm_error: shape mismatch");
    const std::size_t rows = pred.shape()[0];
    const std::size_t width = pred.shape()[1];
    double sup = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        double sq = 0.0;
        for (std::size_t c = 0; c < width; ++c) {
            const double d = pred[r * width + c] - targets[r * width + c];
            sq += d * d;
        }
        sup = std::max(sup, std::sqrt(sq));
    }
    return sup;
}

UatResult uat_fit(const Tensor& features, const Tensor& targets, const Algebra& algebra,
                  std::size_t hidden_units, const TrainSpec& spec) {
    const std::size_t al = algebra.dim();
    if (features.rank() != 2 || features.shape()[1] % al != 0)
        throw std::invalid_argument("uat_fit: feature width must be a multiple of al");
    if (targets.rank() != 2 || targets.shape()[1] != al)
        throw std::invalid_argument("uat_fit: target width must equal al");
    const std::size_t n_mult = features.shape()[1] / al;

    std::vector<Layer> layers;
    layers.emplace_back(
        HyperDenseLayer(algebra, n_mult, hidden_units, true, Activation::sigmoid));
    layers.emplace_back(HyperDenseLayer(algebra, hidden_units, 1, true, Activation::none));
    Model model({features.shape()[1]}, std::move(layers));
    model.initialize(InitScheme::parse("glorot_uniform"), spec.seed);

    UatResult res;
    res.history = train(model, features, targets, spec);
    res.sup_error = sup_norm_error(model, features, targets);
    return res;
}

namespace {

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

UatTarget make_uat_target(const std::string& name, const Algebra& algebra, std::uint64_t seed) {
    const std::size_t al = algebra.dim();
    UatTarget t;
    if (name == "constant") {
        // 441 sample points in [-1,1]^al, constant target with distinct components.
        const std::size_t rows = 441;
        std::mt19937_64 rng(seed);
        t.features = Tensor::zeros({rows, al});
        t.targets = Tensor::zeros({rows, al});
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < al; ++c) {
                t.features.at({r, c}) = 2.0 * unit_uniform(rng) - 1.0;
                t.targets.at({r, c}) = 0.5 - 0.2 * static_cast<double>(c);
            }
        return t;
    }
    if (name == "complex_square") {
        if (al != 2) throw std::invalid_argument("complex_square target needs a dim-2 algebra");
        const std::size_t side = 21;
        t.features = Tensor::zeros({side * side, 2});
        t.targets = Tensor::zeros({side * side, 2});
        for (std::size_t i = 0; i < side; ++i)
            for (std::size_t j = 0; j < side; ++j) {
                const double re = -1.0 + 2.0 * static_cast<double>(i) / (side - 1);
                const double im = -1.0 + 2.0 * static_cast<double>(j) / (side - 1);
                const std::size_t r = i * side + j;
                t.features.at({r, 0}) = re;
                t.features.at({r, 1}) = im;
                const auto sq = algebra_mul(algebra, std::vector<double>{re, im},
                                            std::vector<double>{re, im});
                t.targets.at({r, 0}) = sq[0];
                t.targets.at({r, 1}) = sq[1];
            }
        return t;
    }
    if (name == "quaternion_rotation") {
        if (al != 4) throw std::invalid_argument("quaternion_rotation target needs a dim-4 algebra");
        // g(q) = u q u^-1 for a fixed unit quaternion u.
        std::vector<double> u{1.0, 0.5, -0.3, 0.2};
        double norm = 0.0;
        for (double v : u) norm += v * v;
        norm = std::sqrt(norm);
        std::vector<double> u_inv(4);
        for (std::size_t c = 0; c < 4; ++c) {
            u[c] /= norm;
            u_inv[c] = (c == 0 ? u[c] : -u[c]);  // conjugate of a unit quaternion
        }
        const std::size_t rows = 441;
        std::mt19937_64 rng(seed);
        t.features = Tensor::zeros({rows, 4});
        t.targets = Tensor::zeros({rows, 4});
        std::vector<double> q(4);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < 4; ++c) {
                q[c] = 2.0 * unit_uniform(rng) - 1.0;
                t.features.at({r, c}) = q[c];
            }
            const auto rotated = algebra_mul(algebra, algebra_mul(algebra, u, q), u_inv);
            for (std::size_t c = 0; c < 4; ++c) t.targets.at({r, c}) = rotated[c];
        }
        return t;
    }
    throw std::invalid_argument("unknown uat target: " + name);
}

void write_metrics_jsonl(const std::string& path, std::span<const Metrics> history) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open metrics file: " + path);
    for (const Metrics& m : history) {
        nlohmann::json j{{"epoch", m.epoch},
                         {"train_loss", m.train_loss},
                         {"eval_loss", m.eval_loss ? nlohmann::json(*m.eval_loss)
                                                   : nlohmann::json(nullptr)},
                         {"wall_ms", m.wall_ms}};
        os << j.dump() << '\n';
    }
}

}  // namespace hypernn
