import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ovvis.errors import ShapeError
from ovvis.numerics import MlpParams, cosine_rows, matmul, mlp_forward, rectify, sigmoid, softmax_rows


def triple_loop(a, b):
    m, k = a.shape
    n = b.shape[1]
    out = [[0.0] * n for _ in range(m)]
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for p in range(k):
                acc += float(a[i, p]) * float(b[p, j])
            out[i][j] = acc
    return np.array(out)


def test_matmul_identity():
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(matmul(np.eye(2), x), x)


def test_matmul_unit_vector_selection():
    assert np.array_equal(matmul(np.array([[1.0, 0.0]]), np.array([[5.0], [7.0]])), [[5.0]])


def test_matmul_matches_triple_loop(rng):
    a = rng.standard_normal((4, 3))
    b = rng.standard_normal((3, 2))
    assert np.array_equal(matmul(a, b), triple_loop(a, b))


def test_matmul_shape_error():
    with pytest.raises(ShapeError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_matmul_chunking_does_not_change_result(rng, monkeypatch):
    import ovvis.numerics as num

    a = rng.standard_normal((3, 20))
    b = rng.standard_normal((20, 50))
    whole = matmul(a, b)
    monkeypatch.setattr(num, "_CHUNK_ELEMS", 60)
    assert np.array_equal(matmul(a, b), whole)


@pytest.mark.parametrize("dtype,tol", [(np.float32, 1e-4), (np.float64, 1e-10)])
def test_matmul_associativity(rng, dtype, tol):
    for _ in range(20):
        a, b, c = (rng.standard_normal(s).astype(dtype) for s in ((3, 4), (4, 5), (5, 2)))
        np.testing.assert_allclose(matmul(matmul(a, b), c), matmul(a, matmul(b, c)), atol=tol, rtol=0)


def test_cosine_examples():
    assert cosine_rows(np.array([[0.3, -2.0]]), np.array([[0.3, -2.0]]))[0, 0] == pytest.approx(1.0)
    assert cosine_rows(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]))[0, 0] == 0.0
    assert cosine_rows(np.array([[1.0, 1.0]]), np.array([[2.0, 2.0]]))[0, 0] == pytest.approx(1.0)


def test_cosine_zero_rows_are_zero_not_nan():
    out = cosine_rows(np.zeros((2, 3)), np.ones((1, 3)))
    assert np.array_equal(out, np.zeros((2, 1)))


def test_cosine_dim_mismatch():
    with pytest.raises(ShapeError):
        cosine_rows(np.ones((2, 3)), np.ones((2, 4)))


finite = st.floats(-1e3, 1e3, allow_nan=False, width=64)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (4, 5), elements=finite), arrays(np.float64, (3, 5), elements=finite),
       st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_cosine_bounded_and_scale_invariant(a, b, alpha, beta):
    c = cosine_rows(a, b)
    assert np.all((c >= -1) & (c <= 1))
    np.testing.assert_allclose(cosine_rows(alpha * a, beta * b), c, atol=1e-6)


def test_sigmoid_examples():
    assert sigmoid(np.array([0.0]))[0] == 0.5
    assert sigmoid(np.array([1000.0]))[0] == 1.0
    assert sigmoid(np.array([-1000.0]))[0] == 0.0


def test_sigmoid_against_high_precision(rng):
    xs = rng.uniform(-30, 30, size=50)
    expected = [1.0 / (1.0 + math.exp(-x)) for x in xs]
    np.testing.assert_allclose(sigmoid(xs), expected, rtol=1e-14)


def test_softmax_uniform_on_equal_logits():
    np.testing.assert_allclose(softmax_rows(np.full((2, 4), 3.7)), 0.25)


def test_softmax_against_direct_formula(rng):
    x = rng.standard_normal((5, 3))
    direct = np.array([[math.exp(v) / sum(math.exp(w) for w in row) for v in row] for row in x])
    np.testing.assert_allclose(softmax_rows(x), direct, rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (3, 4), elements=st.floats(-50, 50)), st.floats(-100, 100))
def test_softmax_rows_sum_to_one_and_shift_invariant(x, c):
    p = softmax_rows(x)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-6)
    np.testing.assert_allclose(softmax_rows(x + c), p, atol=1e-6)


def test_rectify():
    assert np.array_equal(rectify(np.array([-1.0, 0.0, 2.5])), [0.0, 0.0, 2.5])


def _zero_mlp(sizes, final_bias):
    ws = tuple(np.zeros((sizes[i], sizes[i + 1])) for i in range(3))
    bs = (np.zeros(sizes[1]), np.zeros(sizes[2]), np.asarray(final_bias, dtype=float))
    return MlpParams(ws, bs)


def test_mlp_zero_weights_gives_final_bias():
    p = _zero_mlp([4, 3, 3, 2], [0.7, -1.2])
    out = mlp_forward(np.random.default_rng(0).standard_normal((5, 4)), p)
    assert np.array_equal(out, np.tile([0.7, -1.2], (5, 1)))


def test_mlp_single_path_reproduces_coordinate():
    w1 = np.zeros((3, 2)); w1[1, 0] = 1.0
    w2 = np.zeros((2, 2)); w2[0, 1] = 1.0
    w3 = np.zeros((2, 1)); w3[1, 0] = 1.0
    p = MlpParams((w1, w2, w3), (np.zeros(2), np.zeros(2), np.zeros(1)))
    x = np.array([[5.0, 2.5, -1.0], [0.0, 4.0, 9.0]])
    assert np.array_equal(mlp_forward(x, p)[:, 0], [2.5, 4.0])


def test_mlp_matches_per_neuron_oracle(rng):
    p = MlpParams.random([4, 5, 3, 2], rng, scale=0.8, dtype=np.float64)
    x = rng.standard_normal((3, 4))

    def oracle_row(v):
        h = list(v)
        for layer, (w, b) in enumerate(zip(p.weights, p.biases)):
            nxt = []
            for j in range(w.shape[1]):
                s = b[j]
                for i in range(w.shape[0]):
                    s += h[i] * w[i, j]
                nxt.append(max(s, 0.0) if layer < 2 else s)
            h = nxt
        return h

    expected = np.array([oracle_row(r) for r in x])
    np.testing.assert_allclose(mlp_forward(x, p), expected, atol=1e-6)


def test_mlp_chain_violation():
    with pytest.raises(ShapeError):
        MlpParams((np.zeros((4, 3)), np.zeros((2, 3)), np.zeros((3, 1))),
                  (np.zeros(3), np.zeros(3), np.zeros(1)))
    p = _zero_mlp([4, 3, 3, 2], [0, 0])
    with pytest.raises(ShapeError):
        mlp_forward(np.zeros((2, 5)), p)
