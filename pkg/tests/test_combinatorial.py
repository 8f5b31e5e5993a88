import numpy as np
import pytest
from hypothesis import given, strategies as st

from gtkit.combinatorial import decode_coco, decode_coma, decode_nocoma
from gtkit.errors import ParameterError, UsageError
from gtkit.model import ProblemInstance, TestMatrix, gen_bernoulli_matrix, noiseless_outcomes


def _random_case(seed, T=25, n=15):
    rng = np.random.default_rng(seed)
    M = gen_bernoulli_matrix(T, n, 0.25, seed)
    inst = ProblemInstance.random(n, int(rng.integers(0, 4)), seed)
    return M, inst


def oracle_coma(dense, y):
    # column j matches iff no test containing j is negative
    return np.array([all(y[i] for i in range(dense.shape[0]) if dense[i, j]) for j in range(dense.shape[1])],
                    dtype=np.uint8)


def test_coco_examples():
    M = TestMatrix.from_dense([[1, 0, 0], [0, 1, 0]])
    assert decode_coco(M, [1, 1]).estimate.tolist() == [1, 1, 1]
    assert decode_coco(M, [0, 1]).estimate.tolist() == [0, 1, 1]


def test_coma_examples():
    I3 = TestMatrix.from_dense(np.eye(3, dtype=np.uint8))
    assert decode_coma(I3, [1, 0, 0]).estimate.tolist() == [1, 0, 0]
    # column 0 is hidden by the ones of column 1
    M = TestMatrix.from_dense([[1, 1], [0, 1]])
    assert decode_coma(M, [1, 1]).estimate.tolist() == [1, 1]
    Z = TestMatrix.from_dense([[1, 0, 0], [0, 0, 1]])
    assert decode_coma(Z, [0, 0]).estimate.tolist() == [0, 1, 0]


def test_nocoma_threshold_arithmetic():
    # |T_j| = 4, |S_j| = 3, q = 0.1, tau = 1: threshold 3.2 > 3
    M = TestMatrix.from_dense(np.array([[1, 0]] * 4, dtype=np.uint8))
    out = decode_nocoma(M, [1, 1, 1, 0], 0.1, 1.0)
    assert out.estimate[0] == 0
    assert (out.tested[0], out.matched[0]) == (4, 3)
    # item 1 is in no test: threshold 0 <= 0
    assert out.estimate[1] == 1


def test_nocoma_tie_counts_as_defective():
    # |T_j| = 5, q (1 + tau) = 0.2: threshold exactly 4
    M = TestMatrix.from_dense(np.ones((5, 1), dtype=np.uint8))
    assert decode_nocoma(M, [1, 1, 1, 1, 0], 0.1, 1.0).estimate[0] == 1


def test_nocoma_parameter_errors():
    M = TestMatrix.from_dense([[1]])
    with pytest.raises(UsageError):
        decode_nocoma(M, [1], 0.0, 1.0)
    with pytest.raises(ParameterError):
        decode_nocoma(M, [1], 0.3, 3.0)
    with pytest.raises(ParameterError):
        decode_nocoma(M, [1], 0.1, 0.0)


@given(st.integers(0, 2**32))
def test_coma_matches_oracle_and_superset(seed):
    M, inst = _random_case(seed)
    y = noiseless_outcomes(M, inst)
    est = decode_coma(M, y).estimate
    assert np.array_equal(est, oracle_coma(M.dense, y))
    assert (est >= inst.x).all()


@given(st.integers(0, 2**32))
def test_coco_superset(seed):
    M, inst = _random_case(seed)
    assert (decode_coco(M, noiseless_outcomes(M, inst)).estimate >= inst.x).all()


@given(st.integers(0, 2**32))
def test_nocoma_small_slack_equals_coma(seed):
    M, inst = _random_case(seed)
    y = np.random.default_rng(seed).integers(0, 2, M.T).astype(np.uint8)
    max_t = max(int(M.column_weights().max()), 1)
    q, tau = 0.25 / (max_t + 1), 1.0
    assert q * (1 + tau) < 1 / max_t
    assert np.array_equal(decode_nocoma(M, y, q, tau).estimate, decode_coma(M, y).estimate)


@given(st.integers(0, 2**32))
def test_permutation_equivariance(seed):
    M, inst = _random_case(seed)
    y = np.random.default_rng(seed + 1).integers(0, 2, M.T).astype(np.uint8)
    perm = np.random.default_rng(seed).permutation(M.n)
    Mp = TestMatrix.from_dense(M.dense[:, perm])
    for fn in (decode_coco, decode_coma, lambda A, v: decode_nocoma(A, v, 0.1, 1.0)):
        assert np.array_equal(fn(Mp, y).estimate, fn(M, y).estimate[perm])


def test_diagnostics_rows():
    M = TestMatrix.from_dense([[1, 0], [1, 1]])
    rows = list(decode_coma(M, [1, 0]).diagnostics_rows())
    assert rows == [(0, 2, 1, 0), (1, 1, 0, 0)]
    with pytest.raises(UsageError):
        list(decode_coco(M, [1, 0]).diagnostics_rows())
