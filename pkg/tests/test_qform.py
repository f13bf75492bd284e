import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qptomo import qform
from qptomo.channels import identity_channel, random_gaussian_channel
from qptomo.errors import DimensionMismatch, NonRealExponent, NotIntegrable, Singular
from qptomo.qform import GaussianQForm

complexes = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


def thermal_form(nbar, c0=None):
    c0 = -np.log(nbar + 1) if c0 is None else c0
    return GaussianQForm(1, c0, [0], [[0]], [[-1 / (nbar + 1)]])


def test_identity_choi_at_origin():
    assert qform.evaluate_q(identity_channel(1).choi, [0, 0]) == pytest.approx(1.0, abs=1e-15)


def test_coherent_form_peak_and_origin():
    f = GaussianQForm(1, -1.0, [1], [[0]], [[-1]])
    assert qform.evaluate_q(f, [1]) == pytest.approx(1.0, abs=1e-15)
    assert qform.evaluate_q(f, [0]) == pytest.approx(np.exp(-1), abs=1e-15)
    assert qform.forms_close(f, qform.coherent_form(1.0), 1e-15)


def test_evaluate_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        qform.evaluate_q(qform.coherent_form(0.3), [0, 1])


def test_corrupted_form_is_non_real():
    f = qform.coherent_form(0.0)
    bad = object.__new__(GaussianQForm)
    object.__setattr__(bad, "n_modes", 1)
    object.__setattr__(bad, "c0", 0.0)
    object.__setattr__(bad, "gamma", np.array([0j]))
    object.__setattr__(bad, "X", np.array([[0j]]))
    object.__setattr__(bad, "Y", np.array([[-1 + 0.5j]]))
    object.__setattr__(bad, "partition", f.partition)
    with pytest.raises(NonRealExponent):
        qform.evaluate_q(bad, [1 + 1j])


def test_construction_symmetrizes_and_rejects():
    f = GaussianQForm(2, 0.0, [0, 0], [[0, 1], [1, 0]], [[-1, 0.2j], [-0.2j, -1]])
    assert not f.X.flags.writeable
    with pytest.raises(ValueError):
        GaussianQForm(2, 0.0, [0, 0], [[0, 1], [0.5, 0]], -np.eye(2))
    with pytest.raises(ValueError):
        GaussianQForm(2, 0.0, [0, 0], np.zeros((2, 2)), [[-1, 1j], [1j, -1]])
    with pytest.raises(DimensionMismatch):
        GaussianQForm(2, 0.0, [0], np.zeros((2, 2)), -np.eye(2))


@pytest.mark.parametrize("alpha", [0, 1, 1 + 2j, -0.4j])
def test_coherent_form_integrates_to_one(alpha):
    assert qform.gaussian_integral(qform.coherent_form(alpha)) == pytest.approx(1.0, abs=1e-12)


def test_thermal_integral_and_normalize():
    assert qform.gaussian_integral(thermal_form(1.0)) == pytest.approx(1.0, abs=1e-12)
    raised = thermal_form(1.0, c0=-np.log(2) + np.log(2))
    assert qform.gaussian_integral(raised) == pytest.approx(2.0, abs=1e-12)
    assert qform.normalize(thermal_form(1.0, c0=0.0)).c0 == pytest.approx(-np.log(2), abs=1e-12)
    f = qform.coherent_form(0.7 - 0.1j)
    assert qform.normalize(f).c0 == pytest.approx(f.c0, abs=1e-12)


def test_positive_definite_form_not_integrable():
    f = GaussianQForm(1, 0.0, [0], [[0]], [[1.0]])
    assert not f.is_valid
    with pytest.raises(NotIntegrable):
        qform.gaussian_integral(f)
    with pytest.raises(NotIntegrable):
        qform.normalize(f)


def test_solve_linear_identity():
    rhs = np.array([1, 1j, -1])
    sol = qform.solve_linear(np.eye(3), rhs)
    assert np.allclose(sol.solution, rhs) and sol.residual == 0.0


def test_solve_linear_bs_k_system():
    K = np.array([[1, 0, 0], [1, 1, 1], [1, -1j, 1j]])
    d = 0.5 * np.conj([0, 1, 1j])
    sol = qform.solve_linear(K, d)
    assert np.allclose(sol.solution, [0, 0.5, 0], atol=1e-15)


def test_solve_linear_repeated_row_singular():
    M = np.array([[1, 2, 3], [1, 2, 3], [0, 1, 1j]])
    with pytest.raises(Singular):
        qform.solve_linear(M, np.ones(3))


def test_solve_linear_tall_least_squares(rng):
    M = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
    x = rng.normal(size=3) + 1j * rng.normal(size=3)
    sol = qform.solve_linear(M, M @ x)
    assert np.allclose(sol.solution, x, atol=1e-12) and sol.residual < 1e-12


@given(st.integers(0, 2**31 - 1), st.integers(1, 6))
def test_solve_linear_planted(seed, n):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    M = Q @ np.diag(rng.uniform(0.5, 2, n))
    x = rng.normal(size=n) + 1j * rng.normal(size=n)
    sol = qform.solve_linear(M, M @ x)
    assert np.linalg.norm(sol.solution - x) <= 1e-10 * np.linalg.norm(x)


@given(st.integers(0, 10_000), st.lists(complexes, min_size=2, max_size=2))
def test_random_forms_real_positive_and_normalizable(seed, Z):
    f = random_gaussian_channel(1, seed).choi
    e = qform.exponent(f, Z)
    assert abs(e.imag) < 1e-12 * max(1.0, abs(e.real))
    assert qform.evaluate_q(f, Z) > 0
    assert qform.gaussian_integral(qform.normalize(f)) == pytest.approx(1.0, abs=1e-12)


def test_integral_matches_quadrature():
    f = GaussianQForm(1, 0.1, [0.3 - 0.2j], [[0.2 + 0.1j]], [[-0.9]])
    xs = np.linspace(-9, 9, 721)
    h = xs[1] - xs[0]
    vals = qform.evaluate_q_grid(f, [complex(x, y) for y in xs for x in xs])
    assert vals.sum() * h * h / np.pi == pytest.approx(qform.gaussian_integral(f), rel=1e-9)


def test_form_json_round_trip():
    f = random_gaussian_channel(2, 3).choi
    data = json.loads(json.dumps(qform.form_to_dict(f)))
    assert all(isinstance(x, list) and len(x) == 2 for x in data["gamma"])
    g = qform.form_from_dict(data)
    assert qform.forms_close(f, g, 0.0) and g.partition == f.partition
