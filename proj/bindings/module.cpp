#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hypernn/model_io.hpp"
#include "hypernn/reference.hpp"
#include "hypernn/train.hpp"

namespace py = pybind11;
using namespace hypernn;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    std::vector<std::size_t> shape(a.ndim());
    for (py::ssize_t d = 0; d < a.ndim(); ++d) shape[d] = static_cast<std::size_t>(a.shape(d));
    std::vector<double> data(a.data(), a.data() + a.size());
    return Tensor::from_data(std::move(shape), std::move(data));
}

py::array_t<double> array_from_tensor(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<double> out(shape);
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

using NpArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

}  // namespace

PYBIND11_MODULE(_hypernn, m) {
    m.doc() = "Neural-network layers over finite-dimensional algebras";

    py::class_<Algebra>(m, "Algebra")
        .def(py::init([](const std::string& name, std::size_t dim, const NpArray& table) {
                 return Algebra(name, dim, tensor_from_array(table));
             }),
             py::arg("name"), py::arg("dim"), py::arg("table"))
        .def_property_readonly("name", &Algebra::name)
        .def_property_readonly("dim", &Algebra::dim)
        .def_property_readonly("table", [](const Algebra& a) { return array_from_tensor(a.structure()); })
        .def("__repr__", [](const Algebra& a) {
            return "Algebra(name='" + a.name() + "', dim=" + std::to_string(a.dim()) + ")";
        });

    m.def("builtin_algebra", &builtin_algebra, py::arg("name"));
    m.def("builtin_algebra_names", [] { return builtin_algebra_names(); });
    m.def(
        "multiply",
        [](const Algebra& alg, const NpArray& x, const NpArray& y) {
            std::vector<double> xv(x.data(), x.data() + x.size());
            std::vector<double> yv(y.data(), y.data() + y.size());
            return algebra_mul(alg, xv, yv);
        },
        py::arg("algebra"), py::arg("x"), py::arg("y"),
        "Multiply two algebra elements given as coefficient vectors.");

    py::class_<AlgebraReport>(m, "AlgebraReport")
        .def_readonly("is_unital", &AlgebraReport::is_unital)
        .def_readonly("is_commutative", &AlgebraReport::is_commutative)
        .def_readonly("is_associative", &AlgebraReport::is_associative)
        .def_readonly("is_left_nondegenerate", &AlgebraReport::is_left_nondegenerate)
        .def_readonly("is_right_nondegenerate", &AlgebraReport::is_right_nondegenerate)
        .def_readonly("unital_violation", &AlgebraReport::unital_violation)
        .def_readonly("commutative_violation", &AlgebraReport::commutative_violation)
        .def_readonly("associative_violation", &AlgebraReport::associative_violation);
    m.def(
        "report", [](const Algebra& a, double tol) { return algebra_report(a, tol); },
        py::arg("algebra"), py::arg("tol") = 1e-10);

    m.def(
        "contract",
        [](const NpArray& a, const NpArray& b, std::size_t p, std::size_t q) {
            return array_from_tensor(contract(tensor_from_array(a), tensor_from_array(b), p, q));
        },
        py::arg("a"), py::arg("b"), py::arg("p"), py::arg("q"));
    m.def(
        "permute",
        [](const NpArray& a, const std::vector<std::size_t>& perm) {
            return array_from_tensor(permute(tensor_from_array(a), perm));
        },
        py::arg("a"), py::arg("perm"));
    m.def(
        "reshape_merge",
        [](const NpArray& a, std::size_t p) {
            return array_from_tensor(reshape_merge(tensor_from_array(a), p));
        },
        py::arg("a"), py::arg("p"));
    m.def(
        "conv_kd",
        [](const NpArray& x, const NpArray& w, const std::vector<std::size_t>& strides,
           const std::string& padding) {
            return array_from_tensor(conv_kd(tensor_from_array(x), tensor_from_array(w), strides,
                                             padding_from_string(padding)));
        },
        py::arg("x"), py::arg("w"), py::arg("strides"), py::arg("padding") = "valid");

    py::class_<HyperDenseLayer>(m, "DenseLayer")
        .def(py::init([](const Algebra& alg, std::size_t in, std::size_t units, bool bias,
                         const std::string& activation) {
                 return HyperDenseLayer(alg, in, units, bias,
                                        activation_from_string(activation));
             }),
             py::arg("algebra"), py::arg("in_mult"), py::arg("units"), py::arg("bias") = true,
             py::arg("activation") = "none")
        .def_property_readonly("input_width", &HyperDenseLayer::input_width)
        .def_property_readonly("output_width", &HyperDenseLayer::output_width)
        .def_property_readonly("kernel",
                               [](const HyperDenseLayer& l) { return array_from_tensor(l.kernel()); })
        .def("set_kernel",
             [](HyperDenseLayer& l, const NpArray& k) { l.set_kernel(tensor_from_array(k)); })
        .def("set_bias",
             [](HyperDenseLayer& l, const NpArray& b) { l.set_bias(tensor_from_array(b)); })
        .def(
            "initialize",
            [](HyperDenseLayer& l, const std::string& scheme, std::uint64_t seed) {
                l.initialize(InitScheme::parse(scheme), seed);
            },
            py::arg("scheme") = "glorot_uniform", py::arg("seed") = 0)
        .def("forward", [](const HyperDenseLayer& l, const NpArray& x) {
            return array_from_tensor(l.forward(tensor_from_array(x)));
        });

    py::class_<HyperConvLayer>(m, "ConvLayer")
        .def(py::init([](const Algebra& alg, const std::vector<std::size_t>& kernel_size,
                         std::size_t in, std::size_t filters,
                         const std::vector<std::size_t>& strides, const std::string& padding,
                         bool bias, const std::string& activation) {
                 return HyperConvLayer(alg, kernel_size, in, filters, strides,
                                       padding_from_string(padding), bias,
                                       activation_from_string(activation));
             }),
             py::arg("algebra"), py::arg("kernel_size"), py::arg("in_mult"), py::arg("filters"),
             py::arg("strides"), py::arg("padding") = "valid", py::arg("bias") = true,
             py::arg("activation") = "none")
        .def_property_readonly("kernel",
                               [](const HyperConvLayer& l) { return array_from_tensor(l.kernel()); })
        .def("set_kernel",
             [](HyperConvLayer& l, const NpArray& k) { l.set_kernel(tensor_from_array(k)); })
        .def("set_bias",
             [](HyperConvLayer& l, const NpArray& b) { l.set_bias(tensor_from_array(b)); })
        .def(
            "initialize",
            [](HyperConvLayer& l, const std::string& scheme, std::uint64_t seed) {
                l.initialize(InitScheme::parse(scheme), seed);
            },
            py::arg("scheme") = "glorot_uniform", py::arg("seed") = 0)
        .def("forward", [](const HyperConvLayer& l, const NpArray& x) {
            return array_from_tensor(l.forward(tensor_from_array(x)));
        });

    m.def(
        "verify_layer",
        [](const Algebra& alg, const std::string& kind, std::size_t forward_trials,
           std::size_t gradient_trials, std::uint64_t seed) {
            const auto rep = reference::verify_layer(alg, reference::layer_kind_from_string(kind),
                                                     forward_trials, gradient_trials, seed);
            py::dict d;
            d["forward_trials"] = rep.forward_trials;
            d["gradient_trials"] = rep.gradient_trials;
            d["max_forward_rel_err"] = rep.max_forward_rel_err;
            d["max_gradient_rel_err"] = rep.max_gradient_rel_err;
            return d;
        },
        py::arg("algebra"), py::arg("kind"), py::arg("forward_trials") = 10,
        py::arg("gradient_trials") = 2, py::arg("seed") = 0);
}
