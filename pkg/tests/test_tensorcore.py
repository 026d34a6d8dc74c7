import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from videoshield import tensorcore as tc
from videoshield.errors import (
    ContractError,
    DimensionError,
    EmptyTargetError,
    GraphError,
    NumericError,
    TokenIndexError,
)
from videoshield.tensorcore import Tape, Tensor, backward, grad, grad_check, no_grad

# Frozen at 50 significant digits with decimal.Decimal exp/ln.
SOFTMAX_123 = [0.090030573170380458, 0.24472847105479765, 0.66524095577482189]
LOG_SOFTMAX_51M2 = [-0.019045007879257449, -4.0190450078792574, -7.0190450078792574]
CE_LOGITS = [
    [0.002, 0.597, -0.548, -1.781, -0.909, -1.983],
    [0.12, 2.68, -0.984, -1.241, 0.98, 0.714],
    [0.211, -1.861, -0.059, 1.391, -2.688, -0.915],
    [-3.802, -2.579, -3.683, -0.47, -2.535, 0.543],
]
CE_TARGETS = [2, 0, 5, 3]
CE_VALUE = 2.2823426960149595


def naive_matmul(a, b):
    n, k = len(a), len(a[0])
    m = len(b[0])
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for t in range(k):
                acc += float(a[i][t]) * float(b[t][j])
            out[i][j] = acc
    return out


# -- forward values -------------------------------------------------------------

def test_matmul_identity():
    a = np.arange(9, dtype=np.float32).reshape(3, 3) / 7
    out = tc.matmul(Tensor(np.eye(3)), Tensor(a))
    np.testing.assert_array_equal(out.data, a)


def test_matmul_matches_triple_loop_oracle():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(4, 5)).astype(np.float32)
    b = rng.normal(size=(5, 3)).astype(np.float32)
    got = tc.matmul(Tensor(a), Tensor(b)).data
    np.testing.assert_allclose(got, naive_matmul(a, b), atol=1e-6, rtol=0)


def test_matmul_shape_error_names_primitive():
    with pytest.raises(DimensionError, match="matmul"):
        tc.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_mean_of_constant():
    assert tc.mean(Tensor(np.full((3, 4), 0.25))).item() == 0.25


def test_add_rejects_non_trailing_broadcast():
    with pytest.raises(DimensionError, match="add"):
        tc.add(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 1))))


def test_trailing_vector_broadcast_allowed():
    out = tc.add(Tensor(np.zeros((2, 3))), Tensor(np.array([1.0, 2.0, 3.0])))
    np.testing.assert_array_equal(out.data, [[1, 2, 3], [1, 2, 3]])


@pytest.mark.parametrize("v,expected", [([0.0, 0.0], [0.5, 0.5]), ([1.7] * 4, [0.25] * 4)])
def test_softmax_symmetric(v, expected):
    np.testing.assert_allclose(tc.softmax(Tensor(v)).data, expected, atol=1e-7)


def test_softmax_oracle():
    got = tc.softmax(Tensor(np.array([1.0, 2.0, 3.0]))).data
    np.testing.assert_allclose(got, SOFTMAX_123, atol=1e-6)


def test_log_softmax_oracle():
    got = tc.log_softmax(Tensor(np.array([5.0, 1.0, -2.0]))).data
    np.testing.assert_allclose(got, LOG_SOFTMAX_51M2, atol=1e-6)
    np.testing.assert_allclose(tc.log_softmax(Tensor([0.0, 0.0])).data, [-math.log(2)] * 2, atol=1e-7)


def test_softmax_non_finite_input():
    with pytest.raises(NumericError):
        tc.softmax(Tensor(np.array([0.0, np.inf])))


def test_softmax_extreme_logits_stable():
    out = tc.softmax(Tensor(np.array([1e4, 0.0, -1e4], dtype=np.float32))).data
    assert np.all(np.isfinite(out))
    assert out[0] == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(2, 9)),
              elements=st.floats(-50, 50)))
def test_softmax_rows_normalised(x):
    p = tc.softmax(Tensor(x), axis=-1).data.astype(np.float64)
    assert np.all(p >= 0) and np.all(p <= 1)
    np.testing.assert_allclose(p.sum(axis=-1), 1.0, atol=1e-6)
    lp = tc.log_softmax(Tensor(x), axis=-1).data
    np.testing.assert_allclose(np.exp(lp), p, atol=1e-5)


def test_softmax_strictly_inside_unit_interval_for_moderate_logits():
    rng = np.random.default_rng(0)
    p = tc.softmax(Tensor(rng.uniform(-5, 5, (6, 10)))).data
    assert np.all(p > 0) and np.all(p < 1)


def test_softmax_non_last_axis():
    x = np.random.default_rng(1).normal(size=(3, 4))
    p = tc.softmax(Tensor(x), axis=0).data
    np.testing.assert_allclose(p.sum(axis=0), 1.0, atol=1e-6)


@pytest.mark.parametrize("v", [2, 8, 32, 64])
def test_cross_entropy_uniform_is_log_v(v):
    loss = tc.cross_entropy(Tensor(np.zeros((3, v))), np.array([0, v - 1, v // 2]))
    assert loss.item() == pytest.approx(math.log(v), abs=1e-5)


def test_cross_entropy_saturated():
    logits = np.zeros((2, 5))
    logits[0, 3] = 20.0
    logits[1, 1] = 20.0
    assert tc.cross_entropy(Tensor(logits), np.array([3, 1])).item() == pytest.approx(0.0, abs=1e-7)


def test_cross_entropy_oracle():
    got = tc.cross_entropy(Tensor(np.array(CE_LOGITS)), np.array(CE_TARGETS)).item()
    assert got == pytest.approx(CE_VALUE, abs=1e-6)


def test_cross_entropy_ignore_index():
    logits = np.array(CE_LOGITS)
    targets = np.array(CE_TARGETS[:2] + [tc.IGNORE_INDEX, tc.IGNORE_INDEX])
    full = tc.cross_entropy(Tensor(logits[:2]), np.array(CE_TARGETS[:2])).item()
    assert tc.cross_entropy(Tensor(logits), targets).item() == pytest.approx(full, abs=1e-7)
    with pytest.raises(EmptyTargetError):
        tc.cross_entropy(Tensor(logits), np.full(4, tc.IGNORE_INDEX))


def test_embedding_out_of_range():
    with pytest.raises(TokenIndexError):
        tc.embedding(Tensor(np.zeros((4, 2))), np.array([0, 4]))


def test_layer_norm_normalises_last_axis():
    x = np.random.default_rng(2).normal(3.0, 2.0, size=(5, 16))
    y = tc.layer_norm(Tensor(x), Tensor(np.ones(16)), Tensor(np.zeros(16))).data
    np.testing.assert_allclose(y.mean(axis=-1), 0.0, atol=1e-5)
    np.testing.assert_allclose(y.std(axis=-1), 1.0, atol=1e-3)


def test_tensor_is_immutable_view():
    src = np.zeros(3)
    t = Tensor(src)
    with pytest.raises(ValueError):
        t.data[0] = 1.0
    src[0] = 5.0  # caller keeps its own array writable


# -- backward -------------------------------------------------------------------

def test_grad_of_sum_is_ones():
    x = np.random.default_rng(0).normal(size=(2, 3, 4))
    _, (g,) = grad(lambda t: tc.sum(t), x)
    np.testing.assert_array_equal(g.data, np.ones_like(x))


def test_grad_of_square_norm():
    x = np.random.default_rng(0).normal(size=(7,))
    _, (g,) = grad(tc.square_norm, x)
    np.testing.assert_allclose(g.data, 2 * x, rtol=1e-12)


def test_fan_out_gradients_sum():
    x = np.array([1.0, -2.0, 3.0])
    _, (g,) = grad(lambda t: tc.sum(tc.mul(t, t) + t), x)
    np.testing.assert_allclose(g.data, 2 * x + 1)


def test_unused_leaf_gets_zero_gradient():
    with Tape() as tape:
        a = tape.watch(np.ones(3))
        b = tape.watch(np.ones((2, 2)))
        root = tc.sum(a)
    ga, gb = backward(tape, root, [a, b])
    np.testing.assert_array_equal(gb.data, np.zeros((2, 2)))
    assert gb.shape == (2, 2)


def test_backward_contract_errors():
    with Tape() as tape:
        a = tape.watch(np.ones(3))
        v = tc.scale(a, 2.0)
        s = tc.sum(v)
    with pytest.raises(ContractError):
        backward(tape, v, [a])
    with pytest.raises(GraphError):
        backward(tape, s, [v])
    with pytest.raises(GraphError):
        backward(Tape(), s, [a])


def test_no_grad_records_nothing():
    with Tape() as tape:
        a = tape.watch(np.ones(3))
        with no_grad():
            tc.sum(a)
    assert len(tape) == 0


def test_tape_is_topologically_ordered_and_replays():
    rng = np.random.default_rng(5)
    with Tape() as tape:
        w = tape.watch(rng.normal(size=(4, 3)).astype(np.float32))
        x = Tensor(rng.normal(size=(2, 4)).astype(np.float32))
        h = tc.gelu(tc.matmul(x, w))
        loss = tc.mean(tc.softmax(h))
    seen = {id(w)}
    for node in tape.nodes:
        for inp in node.inputs:
            assert id(inp) in seen or not inp.requires_grad
        seen.add(id(node.output))
    assert tape.replay()
    assert loss.item() > 0


def test_two_layer_network_matches_finite_differences():
    rng = np.random.default_rng(11)
    x = Tensor(rng.normal(size=(3, 5)))
    w2 = Tensor(rng.normal(size=(6, 4)))
    targets = np.array([0, 3, 1])

    def f(w1):
        h = tc.gelu(tc.matmul(x, w1))
        return tc.cross_entropy(tc.matmul(h, w2), targets)

    report = grad_check(f, rng.normal(size=(5, 6)), fd_step=1e-3, tolerance=1e-3)
    assert report.passed, report.max_rel_error


def test_grad_check_sum_of_squares():
    x = np.random.default_rng(1).normal(size=(4, 3))
    report = grad_check(lambda t: tc.sum(tc.mul(t, t)), x, tolerance=1e-4)
    assert report.passed
    assert report.analytic.shape == x.shape and report.numeric.shape == x.shape


def test_grad_check_reports_non_finite_with_index():
    def f(t):
        if np.any(t.data > 0.5 + 1e-4):
            return Tensor(np.array(np.nan))
        return tc.sum(t)

    x = np.zeros(3)
    x[1] = 0.5
    with pytest.raises(NumericError, match=r"\(1,\)|index 1|\[1\]"):
        grad_check(f, x)


def test_relative_error_definition():
    assert tc.relative_error(1.0, 1.0) == 0.0
    assert tc.relative_error(0.0, 0.0) == 0.0
    assert tc.relative_error(2.0, 1.0) == pytest.approx(0.5)
    assert tc.relative_error(1e-9, 0.0) == pytest.approx(1e-9 / 1e-8)


def _unary_cases():
    rng = np.random.default_rng(21)
    ln_g = rng.normal(1.0, 0.1, size=5)
    ln_b = rng.normal(size=5)
    w = rng.normal(size=(5, 3))
    ids = np.array([[1, 4], [0, 3]])
    other = rng.normal(size=(2, 5))
    weights = rng.normal(size=(2, 5))
    return {
        "add": lambda t: tc.add(t, Tensor(other)),
        "add_vector": lambda t: tc.add(Tensor(other), tc.reshape(tc.slice(t, (0,)), (5,))),
        "sub": lambda t: tc.sub(Tensor(other), t),
        "mul": lambda t: tc.mul(t, t),
        "scale": lambda t: tc.scale(t, -1.7),
        "matmul": lambda t: tc.matmul(t, Tensor(w)),
        "matmul_right": lambda t: tc.matmul(Tensor(w.T), tc.transpose(t)),
        "reshape": lambda t: tc.reshape(t, (5, 2)),
        "permute": lambda t: tc.permute(tc.reshape(t, (1, 2, 5)), (2, 0, 1)),
        "slice": lambda t: tc.slice(t, (slice(None), slice(1, 4))),
        "concat": lambda t: tc.concat([t, tc.scale(t, 2.0)], axis=1),
        "sum_axis": lambda t: tc.sum(t, axis=1),
        "mean_axis": lambda t: tc.mean(t, axis=0, keepdims=True),
        "gelu": tc.gelu,
        "layer_norm": lambda t: tc.layer_norm(t, Tensor(ln_g), Tensor(ln_b)),
        "softmax": lambda t: tc.softmax(t, axis=-1),
        "softmax_axis0": lambda t: tc.softmax(t, axis=0),
        "log_softmax": lambda t: tc.log_softmax(t, axis=-1),
        "embedding": lambda t: tc.embedding(tc.concat([t, t, tc.slice(t, (slice(0, 1),))], axis=0), ids),
        "pick": lambda t: tc.pick(t, np.array([4, 0])),
    }, weights


@pytest.mark.parametrize("name", sorted(_unary_cases()[0]))
def test_primitive_gradients_finite_difference(name):
    cases, weights = _unary_cases()
    fn = cases[name]
    rng = np.random.default_rng(abs(hash(name)) % 2**32)
    passed = 0
    for _ in range(20):
        x = rng.normal(size=(2, 5))

        def f(t):
            out = fn(t)
            proj = rng_weights(out.shape)
            return tc.sum(tc.mul(out, Tensor(proj)))

        report = grad_check(f, x, fd_step=1e-3, tolerance=1e-3)
        passed += report.passed
    assert passed == 20


def rng_weights(shape):
    # fixed projection so the scalar depends on every output element
    n = int(np.prod(shape))
    return (np.sin(np.arange(1, n + 1) * 0.7) + 0.1).reshape(shape)


def test_every_registered_primitive_has_a_backward():
    for name, prim in tc.REGISTRY.items():
        assert callable(prim.forward) and callable(prim.backward), name


def test_float32_storage_default():
    t = Tensor([1.0, 2.0])
    assert t.dtype == np.float32
    assert tc.mean(t).dtype == np.float32


def test_replay_gradients_bit_identical():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(3, 8)).astype(np.float32)
    w = rng.normal(size=(8, 8)).astype(np.float32)

    def run():
        return grad(lambda a, b: tc.mean(tc.layer_norm(tc.gelu(tc.matmul(a, b)),
                                                       Tensor(np.ones(8)), Tensor(np.zeros(8)))), x, w)

    (v1, g1), (v2, g2) = run(), run()
    assert v1.item() == v2.item()
    for a, b in zip(g1, g2):
        assert np.array_equal(a.data, b.data)
