#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hypernn/model_io.hpp"
#include "hypernn/reference.hpp"
#include "hypernn/train.hpp"

namespace {

// Exit code taxonomy: 0 success, 1 validation failure, 2 usage/parse error,
// 3 runtime numeric failure.
constexpr int kOk = 0;
constexpr int kValidationFailure = 1;
constexpr int kUsageError = 2;
constexpr int kNumericFailure = 3;

using hypernn::Tensor;

int cmd_algebra_check(const std::string& algebra, double tol, bool json_out) {
    const hypernn::Algebra alg = hypernn::resolve_algebra(algebra);
    const hypernn::AlgebraReport rep = hypernn::algebra_report(alg, tol);
    const bool pass = rep.is_unital && rep.is_left_nondegenerate && rep.is_right_nondegenerate;
    if (json_out) {
        nlohmann::json j{{"name", alg.name()},
                         {"dim", alg.dim()},
                         {"tol", rep.tol},
                         {"unital", rep.is_unital},
                         {"commutative", rep.is_commutative},
                         {"associative", rep.is_associative},
                         {"left_nondegenerate", rep.is_left_nondegenerate},
                         {"right_nondegenerate", rep.is_right_nondegenerate},
                         {"unital_violation", rep.unital_violation},
                         {"commutative_violation", rep.commutative_violation},
                         {"associative_violation", rep.associative_violation},
                         {"pass", pass}};
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << "algebra " << alg.name() << " (dim " << alg.dim() << ", tol " << tol << ")\n"
                  << "  unital:              " << (rep.is_unital ? "yes" : "no")
                  << "  (violation " << rep.unital_violation << ")\n"
                  << "  commutative:         " << (rep.is_commutative ? "yes" : "no")
                  << "  (violation " << rep.commutative_violation << ")\n"
                  << "  associative:         " << (rep.is_associative ? "yes" : "no")
                  << "  (violation " << rep.associative_violation << ")\n"
                  << "  left nondegenerate:  " << (rep.is_left_nondegenerate ? "yes" : "no") << '\n'
                  << "  right nondegenerate: " << (rep.is_right_nondegenerate ? "yes" : "no")
                  << '\n';
    }
    return pass ? kOk : kValidationFailure;
}

int cmd_verify(const std::string& algebra, const std::string& layer, std::size_t trials,
               std::size_t grad_checks, std::uint64_t seed, double tol, double grad_tol,
               bool json_out) {
    const hypernn::Algebra alg = hypernn::resolve_algebra(algebra);
    const auto kind = hypernn::reference::layer_kind_from_string(layer);
    const auto rep = hypernn::reference::verify_layer(alg, kind, trials, grad_checks, seed);
    if (!std::isfinite(rep.max_forward_rel_err) || !std::isfinite(rep.max_gradient_rel_err))
        throw hypernn::NumericError("verify: non-finite error encountered");
    const bool pass = rep.max_forward_rel_err <= tol && rep.max_gradient_rel_err <= grad_tol;
    if (json_out) {
        nlohmann::json j{{"algebra", alg.name()},
                         {"layer", layer},
                         {"forward_trials", rep.forward_trials},
                         {"gradient_trials", rep.gradient_trials},
                         {"max_forward_rel_err", rep.max_forward_rel_err},
                         {"max_gradient_rel_err", rep.max_gradient_rel_err},
                         {"tol", tol},
                         {"grad_tol", grad_tol},
                         {"pass", pass}};
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << "verify " << layer << " over " << alg.name() << ": " << rep.forward_trials
                  << " forward trials (max rel err " << rep.max_forward_rel_err << ", tol " << tol
                  << "), " << rep.gradient_trials << " gradient checks (max rel err "
                  << rep.max_gradient_rel_err << ", tol " << grad_tol << ") -> "
                  << (pass ? "PASS" : "FAIL") << '\n';
    }
    return pass ? kOk : kValidationFailure;
}

Tensor dataset_features_checked(const hypernn::Dataset& ds, const hypernn::Model& model) {
    if (ds.reshape_to) {
        if (*ds.reshape_to != model.input_shape())
            throw std::invalid_argument("data binding reshape_to does not match the model input shape");
    }
    if (ds.features.shape()[1] != model.input_width())
        throw std::invalid_argument("dataset feature width " +
                                    std::to_string(ds.features.shape()[1]) +
                                    " does not match model input width " +
                                    std::to_string(model.input_width()));
    return ds.features;
}

int cmd_train(const std::string& model_path, const std::string& train_path,
              const std::string& data_path, const std::string& out_path,
              const std::string& metrics_path, const std::string& eval_data_path,
              bool fixed_timing) {
    const hypernn::ModelSpec mspec = hypernn::load_model_spec(model_path);
    const hypernn::TrainSpec tspec = hypernn::load_train_spec(train_path);
    hypernn::Model model = hypernn::build_model(
        mspec, std::filesystem::path(model_path).parent_path().string());
    hypernn::initialize_model(model, mspec, tspec.seed);

    const hypernn::Dataset ds = hypernn::load_dataset_binding(data_path);
    const Tensor features = dataset_features_checked(ds, model);

    std::optional<hypernn::EvalData> eval;
    if (!eval_data_path.empty()) {
        const hypernn::Dataset eds = hypernn::load_dataset_binding(eval_data_path);
        eval = hypernn::EvalData{dataset_features_checked(eds, model), eds.targets};
    }

    auto history = hypernn::train(model, features, ds.targets, tspec, eval);
    if (fixed_timing)
        for (auto& m : history) m.wall_ms = 0;

    if (!out_path.empty()) hypernn::save_checkpoint(out_path, model);
    if (!metrics_path.empty()) hypernn::write_metrics_jsonl(metrics_path, history);

    const auto& last = history.back();
    std::cout << "trained " << history.size() << " epochs; final train loss " << last.train_loss;
    if (last.eval_loss) std::cout << ", eval loss " << *last.eval_loss;
    std::cout << '\n';
    return kOk;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_path,
             const std::string& loss_name, bool json_out) {
    const hypernn::Model model = hypernn::load_checkpoint(checkpoint_path);
    const hypernn::Dataset ds = hypernn::load_dataset_binding(data_path);
    const Tensor features = dataset_features_checked(ds, model);
    const hypernn::Loss loss = hypernn::loss_from_string(loss_name);
    const double value = hypernn::evaluate(model, features, ds.targets, loss);
    if (!std::isfinite(value)) throw hypernn::NumericError("eval: non-finite loss");
    if (json_out) {
        nlohmann::json j{{"loss", hypernn::to_string(loss)}, {"value", value},
                         {"rows", ds.features.shape()[0]}};
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << "eval " << hypernn::to_string(loss) << " over " << ds.features.shape()[0]
                  << " rows: " << value << '\n';
    }
    return kOk;
}

int cmd_uat_demo(const std::string& algebra, const std::string& target,
                 std::vector<std::size_t> hidden, const std::string& train_path, double bound,
                 std::size_t seeds, std::uint64_t base_seed, const std::string& report_path) {
    const hypernn::Algebra alg = hypernn::resolve_algebra(algebra);
    const hypernn::UatTarget data = hypernn::make_uat_target(target, alg, base_seed);

    hypernn::TrainSpec tspec;
    if (!train_path.empty()) {
        tspec = hypernn::load_train_spec(train_path);
    } else {
        tspec.epochs = 5000;
        tspec.batch_size = 64;
        tspec.learning_rate = 0.1;
        tspec.momentum = 0.9;
        tspec.loss = hypernn::Loss::mse;
        tspec.shuffle = true;
    }

    if (hidden.empty()) hidden = {8, 16, 32, 64};
    nlohmann::json results = nlohmann::json::array();
    double final_best = 0.0;
    for (std::size_t h : hidden) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < seeds; ++s) {
            hypernn::TrainSpec run = tspec;
            run.seed = base_seed + s;
            const auto res = hypernn::uat_fit(data.features, data.targets, alg, h, run);
            best = std::min(best, res.sup_error);
        }
        std::cout << "hidden " << h << ": best-of-" << seeds << " sup error " << best << '\n';
        results.push_back(nlohmann::json{{"hidden", h}, {"sup_error", best}});
        final_best = best;
    }
    const bool pass = final_best <= bound;
    std::cout << "final sup error " << final_best << " vs bound " << bound << " -> "
              << (pass ? "PASS" : "FAIL") << '\n';
    if (!report_path.empty()) {
        nlohmann::json j{{"algebra", alg.name()}, {"target", target},
                         {"seeds", seeds},        {"bound", bound},
                         {"results", results},    {"pass", pass}};
        std::ofstream os(report_path);
        if (!os) throw std::runtime_error("cannot open report file: " + report_path);
        os << j.dump(2) << '\n';
    }
    return pass ? kOk : kValidationFailure;
}

int cmd_tensor_dump(const std::string& path) {
    std::cout << hypernn::to_text(hypernn::load_tensor_file(path));
    return kOk;
}

int cmd_tensor_compare(const std::string& a_path, const std::string& b_path, double tol) {
    const Tensor a = hypernn::load_tensor_file(a_path);
    const Tensor b = hypernn::load_tensor_file(b_path);
    if (a.shape() != b.shape()) {
        std::cout << "shape mismatch\n";
        return kValidationFailure;
    }
    const double err = hypernn::reference::max_rel_err(a, b);
    std::cout << "max rel err " << err << " (tol " << tol << ")\n";
    return err <= tol ? kOk : kValidationFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hypernn: neural networks over arbitrary finite-dimensional algebras"};
    app.require_subcommand(1);

    std::function<int()> action;

    {
        auto* c = app.add_subcommand("algebra-check",
                                     "Validate an algebra's structural properties");
        auto algebra = std::make_shared<std::string>();
        auto tol = std::make_shared<double>(1e-10);
        auto json_out = std::make_shared<bool>(false);
        c->add_option("algebra", *algebra, "builtin:<name> or a JSON file path")->required();
        c->add_option("--tol", *tol, "numeric tolerance");
        c->add_flag("--json", *json_out, "machine-readable output");
        c->callback([=, &action] {
            action = [=] { return cmd_algebra_check(*algebra, *tol, *json_out); };
        });
    }
    {
        auto* c = app.add_subcommand("verify",
                                     "Randomized oracle-equivalence and gradient checks");
        auto algebra = std::make_shared<std::string>("builtin:quaternion");
        auto layer = std::make_shared<std::string>("dense");
        auto trials = std::make_shared<std::size_t>(100);
        auto grad_checks = std::make_shared<std::size_t>(10);
        auto seed = std::make_shared<std::uint64_t>(0);
        auto tol = std::make_shared<double>(1e-10);
        auto grad_tol = std::make_shared<double>(1e-4);
        auto json_out = std::make_shared<bool>(false);
        c->add_option("--algebra", *algebra, "builtin:<name> or a JSON file path");
        c->add_option("--layer", *layer, "dense | conv1d | conv2d | conv3d");
        c->add_option("--trials", *trials, "number of forward oracle trials");
        c->add_option("--grad-checks", *grad_checks, "number of gradient-check trials");
        c->add_option("--seed", *seed, "rng seed");
        c->add_option("--tol", *tol, "forward relative-error tolerance");
        c->add_option("--grad-tol", *grad_tol, "gradient relative-error tolerance");
        c->add_flag("--json", *json_out, "machine-readable output");
        c->callback([=, &action] {
            action = [=] {
                return cmd_verify(*algebra, *layer, *trials, *grad_checks, *seed, *tol, *grad_tol,
                                  *json_out);
            };
        });
    }
    {
        auto* c = app.add_subcommand("train", "Train a model from config files");
        auto model = std::make_shared<std::string>();
        auto tspec = std::make_shared<std::string>();
        auto data = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto metrics = std::make_shared<std::string>();
        auto eval_data = std::make_shared<std::string>();
        auto fixed_timing = std::make_shared<bool>(false);
        c->add_option("--model", *model, "model spec JSON")->required();
        c->add_option("--train", *tspec, "train spec JSON")->required();
        c->add_option("--data", *data, "data binding JSON")->required();
        c->add_option("--out", *out, "checkpoint output path");
        c->add_option("--metrics", *metrics, "metrics JSONL output path");
        c->add_option("--eval-data", *eval_data, "held-out data binding JSON");
        c->add_flag("--fixed-timing", *fixed_timing,
                    "write wall_ms as 0 for byte-reproducible metrics files");
        c->callback([=, &action] {
            action = [=] {
                return cmd_train(*model, *tspec, *data, *out, *metrics, *eval_data,
                                 *fixed_timing);
            };
        });
    }
    {
        auto* c = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
        auto checkpoint = std::make_shared<std::string>();
        auto data = std::make_shared<std::string>();
        auto loss = std::make_shared<std::string>("mse");
        auto json_out = std::make_shared<bool>(false);
        c->add_option("--checkpoint", *checkpoint, "checkpoint path")->required();
        c->add_option("--data", *data, "data binding JSON")->required();
        c->add_option("--loss", *loss, "mse | binary-cross-entropy");
        c->add_flag("--json", *json_out, "machine-readable output");
        c->callback([=, &action] {
            action = [=] { return cmd_eval(*checkpoint, *data, *loss, *json_out); };
        });
    }
    {
        auto* c = app.add_subcommand("uat-demo",
                                     "Approximation demo: fit a bundled target function");
        auto algebra = std::make_shared<std::string>("builtin:complex");
        auto target = std::make_shared<std::string>("complex_square");
        auto hidden = std::make_shared<std::vector<std::size_t>>();
        auto tspec = std::make_shared<std::string>();
        auto bound = std::make_shared<double>(0.05);
        auto seeds = std::make_shared<std::size_t>(3);
        auto seed = std::make_shared<std::uint64_t>(0);
        auto report = std::make_shared<std::string>();
        c->add_option("--algebra", *algebra, "builtin:<name> or a JSON file path");
        c->add_option("--target", *target, "constant | complex_square | quaternion_rotation");
        c->add_option("--hidden", *hidden, "hidden unit counts (default 8 16 32 64)");
        c->add_option("--train", *tspec, "train spec JSON (defaults tuned per target)");
        c->add_option("--bound", *bound, "sup-norm error bound for PASS");
        c->add_option("--seeds", *seeds, "seeds per width (best-of)");
        c->add_option("--seed", *seed, "base rng seed");
        c->add_option("--report", *report, "report JSON output path");
        c->callback([=, &action] {
            action = [=] {
                return cmd_uat_demo(*algebra, *target, *hidden, *tspec, *bound, *seeds, *seed,
                                    *report);
            };
        });
    }
    {
        auto* c = app.add_subcommand("tensor-dump", "Print a binary tensor file as text");
        auto path = std::make_shared<std::string>();
        c->add_option("file", *path, "tensor file")->required();
        c->callback([=, &action] {
            action = [=] { return cmd_tensor_dump(*path); };
        });
    }
    {
        auto* c = app.add_subcommand("tensor-compare", "Compare two binary tensor files");
        auto a = std::make_shared<std::string>();
        auto b = std::make_shared<std::string>();
        auto tol = std::make_shared<double>(1e-12);
        c->add_option("a", *a, "first tensor file")->required();
        c->add_option("b", *b, "second tensor file")->required();
        c->add_option("--tol", *tol, "relative-error tolerance");
        c->callback([=, &action] {
            action = [=] { return cmd_tensor_compare(*a, *b, *tol); };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        return action();
    } catch (const hypernn::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumericFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    }
}
