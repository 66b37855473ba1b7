import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaussian_eot import (
    DefinitenessError,
    DimensionError,
    Gaussian,
    SpdMatrix,
    SymmetryError,
    spd_factor,
    validate_gaussian,
)
from conftest import random_spd


def test_identity():
    f = spd_factor(np.eye(2))
    np.testing.assert_array_equal(f.sqrt.values, np.eye(2))
    assert f.logdet == 0.0


def test_diagonal():
    f = spd_factor(np.diag([4.0, 9.0]))
    np.testing.assert_allclose(f.sqrt.values, np.diag([2.0, 3.0]), atol=1e-15)
    np.testing.assert_allclose(f.inv.values, np.diag([0.25, 1 / 9]), atol=1e-15)
    np.testing.assert_allclose(f.inv_sqrt.values, np.diag([0.5, 1 / 3]), atol=1e-15)
    assert f.logdet == pytest.approx(np.log(36.0), abs=1e-14)


def test_random_reconstruction(rng):
    a = random_spd(rng, 8)
    s = spd_factor(a).sqrt.values
    assert np.linalg.norm(s @ s - a) / np.linalg.norm(a) <= 1e-10
    # independent route: eigendecomposition done here, not in the library
    w, v = np.linalg.eigh(a)
    np.testing.assert_allclose(s, (v * np.sqrt(w)) @ v.T, rtol=1e-10, atol=1e-12)


def test_factorization_invariants(rng):
    a = random_spd(rng, 6)
    f = spd_factor(a)
    np.testing.assert_allclose(f.inv.values @ a, np.eye(6), atol=1e-9)
    assert f.logdet == pytest.approx(np.sum(np.log(np.linalg.eigvalsh(a))), rel=1e-12)
    assert f.logdet == pytest.approx(np.linalg.slogdet(a)[1], rel=1e-12)


def test_asymmetry_rejected_with_magnitude():
    with pytest.raises(SymmetryError) as exc:
        SpdMatrix([[1.0, 0.5], [0.4, 1.0]])
    assert exc.value.max_asymmetry == pytest.approx(0.1)
    assert "0.1" in str(exc.value) or "1.000e-01" in str(exc.value)


def test_near_symmetric_symmetrized():
    g = validate_gaussian([0.0, 0.0], [[1.0, 0.5], [0.5000000008, 1.0]])
    c = g.cov.values
    assert c[0, 1] == c[1, 0]
    assert c[0, 1] == pytest.approx(0.5000000004, abs=1e-15)


def test_negative_rejected():
    with pytest.raises(DefinitenessError) as exc:
        validate_gaussian([0.0], [[-1.0]])
    assert exc.value.eigenvalue == -1.0


def test_near_singular_rejected():
    with pytest.raises(DefinitenessError):
        SpdMatrix(np.diag([1.0, 1e-13]))
    SpdMatrix(np.diag([1.0, 1e-11]))


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        validate_gaussian([0.0, 1.0, 2.0], np.eye(2))
    with pytest.raises(DimensionError):
        validate_gaussian([0.0], [[1.0, 2.0]])


def test_gaussian_identity():
    g = validate_gaussian([0, 0], np.eye(2))
    assert isinstance(g, Gaussian) and g.dim == 2


def test_immutable(rng):
    a = SpdMatrix(random_spd(rng, 3))
    with pytest.raises(ValueError):
        a.values[0, 0] = 5.0
    g = Gaussian(np.zeros(3), a)
    with pytest.raises(ValueError):
        g.mean[0] = 1.0


def test_diagonal_outputs_stay_diagonal():
    d = np.array([0.3, 2.0, 7.5])
    f = spd_factor(np.diag(d))
    for m, expect in ((f.sqrt, np.sqrt(d)), (f.inv, 1 / d), (f.inv_sqrt, 1 / np.sqrt(d))):
        np.testing.assert_allclose(m.values, np.diag(expect), rtol=1e-14, atol=1e-15)


spd_cases = st.tuples(st.integers(0, 2**32 - 1), st.integers(1, 12))


@settings(max_examples=60, deadline=None)
@given(spd_cases)
def test_sqrt_stays_spd(case):
    seed, d = case
    a = random_spd(np.random.default_rng(seed), d, shift=0.1)
    s = spd_factor(a).sqrt
    assert np.all(s.eigvals > 0)
    assert np.array_equal(s.values, s.values.T)
    # re-validating through the public constructor must succeed
    SpdMatrix(s.values)


@settings(max_examples=60, deadline=None)
@given(spd_cases)
def test_double_inverse(case):
    seed, d = case
    a = random_spd(np.random.default_rng(seed), d)
    back = spd_factor(spd_factor(a).inv).inv.values
    assert np.linalg.norm(back - a) / np.linalg.norm(a) <= 1e-8
