"""Smoke tests for the python bindings.

When run from ctest, HYPERNN_MODULE_DIR points at the freshly built extension;
otherwise the installed ``hypernn`` package is used.
"""

import os
import sys

import numpy as np
import pytest

_module_dir = os.environ.get("HYPERNN_MODULE_DIR")
if _module_dir:
    sys.path.insert(0, _module_dir)
    import _hypernn as hn
else:
    hn = pytest.importorskip("hypernn")


def test_builtin_algebras_present():
    names = set(hn.builtin_algebra_names())
    assert {"real", "complex", "quaternion", "split_complex", "dual"} <= names


def test_complex_multiplication():
    c = hn.builtin_algebra("complex")
    assert hn.multiply(c, [1.0, 2.0], [3.0, 4.0]) == pytest.approx([-5.0, 10.0])


def test_quaternion_report():
    r = hn.report(hn.builtin_algebra("quaternion"))
    assert r.is_unital and r.is_associative
    assert not r.is_commutative
    assert r.commutative_violation == pytest.approx(2.0)
    assert r.is_left_nondegenerate and r.is_right_nondegenerate


def test_contract_is_matmul():
    a = np.arange(6, dtype=float).reshape(2, 3)
    b = np.arange(12, dtype=float).reshape(3, 4)
    np.testing.assert_allclose(hn.contract(a, b, 1, 0), a @ b)


def test_permute_and_reshape_merge():
    a = np.arange(24, dtype=float).reshape(2, 3, 4)
    np.testing.assert_array_equal(hn.permute(a, [1, 2, 0]), np.transpose(a, (2, 0, 1)))
    np.testing.assert_array_equal(hn.reshape_merge(a, 0), a.reshape(6, 4))


def test_dense_layer_matches_complex_arithmetic():
    c = hn.builtin_algebra("complex")
    layer = hn.DenseLayer(c, in_mult=1, units=1, bias=False)
    layer.set_kernel(np.array([3.0, 4.0]).reshape(2, 1, 1))
    y = layer.forward(np.array([[1.0, 2.0]]))
    np.testing.assert_allclose(y, [[-5.0, 10.0]])


def test_conv_layer_shapes():
    q = hn.builtin_algebra("quaternion")
    layer = hn.ConvLayer(q, kernel_size=[3], in_mult=1, filters=2, strides=[1],
                         padding="same", activation="tanh")
    layer.initialize("glorot_uniform", seed=1)
    x = np.random.default_rng(0).standard_normal((2, 7, 4))
    y = layer.forward(x)
    assert y.shape == (2, 7, 8)


def test_verify_layer_reports_tight_errors():
    rep = hn.verify_layer(hn.builtin_algebra("dual"), "dense",
                          forward_trials=5, gradient_trials=1, seed=3)
    assert rep["max_forward_rel_err"] <= 1e-10
    assert rep["max_gradient_rel_err"] <= 1e-4
