import copy
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

import helpers
import oracles
from gridmodal.exceptions import DefectiveMode, NotAtEquilibrium, ZeroEigenvalue
from gridmodal.small_signal import (ModeCategory, StateMatrix, classify_mode, damping_ratio,
                                    eigen_analysis, linearize, participation_factors)


@pytest.fixture(scope="module")
def smib_modes():
    return eigen_analysis(linearize(helpers.system("smib", pss=False)))


# -- classification -------------------------------------------------------------------

@pytest.mark.parametrize("freq, cat", [
    (0.3, ModeCategory.INTER_AREA), (0.999, ModeCategory.INTER_AREA),
    (1.0, ModeCategory.LOCAL_PLANT), (2.0, ModeCategory.INTER_PLANT),
    (3.0, ModeCategory.UNCLASSIFIED), (4.0, ModeCategory.CONTROL_MODE),
    (10.0, ModeCategory.TORSIONAL), (46.0, ModeCategory.TORSIONAL),
    (46.5, ModeCategory.UNCLASSIFIED), (0.1, ModeCategory.UNCLASSIFIED),
    (0.0, ModeCategory.NON_OSCILLATORY),
])
def test_band_edges(freq, cat):
    assert classify_mode(freq) is cat


@given(st.floats(0, 100))
def test_classification_total(freq):
    assert isinstance(classify_mode(freq), ModeCategory)


def test_negative_frequency_rejected():
    with pytest.raises(ValueError):
        classify_mode(-1.0)


@given(re=st.floats(-50, 50), im=st.floats(-50, 50))
def test_damping_ratio_bounded(re, im):
    if re == 0 and im == 0:
        return
    z = damping_ratio(complex(re, im))
    assert -1 <= z <= 1
    assert z == pytest.approx(-re / math.hypot(re, im))


def test_damping_ratio_of_zero():
    with pytest.raises(ZeroEigenvalue):
        damping_ratio(0j)


# -- eigen-solver against the characteristic polynomial ---------------------------------------

@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 6), st.just(6)),
              elements=st.floats(-5, 5, allow_nan=False, allow_infinity=False)))
def test_eigenvalues_against_characteristic_polynomial(block):
    n = block.shape[0]
    a = block[:, :n] + np.diag(np.linspace(-3, -1, n)) * 2.0
    try:
        res = eigen_analysis(StateMatrix(a, tuple(f"s{k}" for k in range(n))))
    except (DefectiveMode, ZeroEigenvalue):
        return
    ref = oracles.eigenvalues_oracle(a)
    scale = max(1.0, np.linalg.norm(a, 2))
    # eigenvalues of non-normal matrices are only as accurate as their condition allows
    cond = np.max(1.0 / np.maximum(np.abs(np.sum(res.right * np.conj(res.left), axis=0)), 1e-300)
                  * np.linalg.norm(res.left, axis=0))
    assert oracles.match_sets(res.eigenvalues, ref) < 1e-12 * scale * max(1.0, cond)


@pytest.mark.parametrize("name", ["smib"])
def test_bundled_spectrum_against_characteristic_polynomial(name):
    a = linearize(helpers.system(name, pss=False)).a
    lam = np.linalg.eigvals(a)
    ref = oracles.eigenvalues_oracle(a, dps=80)
    assert oracles.match_sets(lam, ref) < 1e-8 * np.linalg.norm(a, 2)


# -- structure of the modal result -------------------------------------------------------

@pytest.mark.parametrize("name", helpers.BUNDLED)
def test_participation_columns_sum_to_one(name):
    res = eigen_analysis(linearize(helpers.system(name)))
    assert np.all(res.participation >= 0)
    assert np.allclose(res.participation.sum(axis=0), 1.0, atol=1e-12)


@pytest.mark.parametrize("name", helpers.BUNDLED)
def test_eigenpair_quality(name):
    a = linearize(helpers.system(name)).a
    res = eigen_analysis(StateMatrix(a, tuple(helpers.system(name).state_names)))
    assert np.max(res.residuals) < 1e-8
    lam = np.sort_complex(res.eigenvalues)
    assert np.max(np.abs(np.sort_complex(np.conj(lam)) - lam)) < 1e-10


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, 12, elements=st.floats(-3, 3)))
def test_spectrum_invariant_under_diagonal_scaling(logs):
    a = linearize(helpers.system("smib", pss=False)).a
    d = 10.0 ** logs
    lam = np.sort_complex(np.linalg.eigvals(a))
    scaled = np.sort_complex(np.linalg.eigvals((a * d[:, None]) / d[None, :]))
    assert oracles.match_sets(scaled, lam) < 1e-9 * max(1.0, np.max(np.abs(lam)))


def test_smib_electromechanical_participation(smib_modes):
    em = smib_modes.least_damped_in_band(0.3, 3.0)
    assert {name for name, _ in em.dominant_states} == {"G1.delta", "G1.omega"}


def test_smib_single_electromechanical_pair(smib_modes):
    assert len(smib_modes.modes_in_band(0.3, 3.0)) == 1


def test_structural_zero_without_infinite_bus():
    res = eigen_analysis(linearize(helpers.system("three_machine")))
    zeros = [md for md in res.modes if md.structural_zero]
    assert len(zeros) == 1
    assert zeros[0].damping_ratio == 0 and zeros[0].category is ModeCategory.NON_OSCILLATORY
    assert res.stable


def test_defective_matrix_rejected():
    with pytest.raises(DefectiveMode):
        eigen_analysis(StateMatrix(np.array([[-1.0, 1.0], [0.0, -1.0]]), ("a", "b")))


def test_participation_of_diagonal_matrix():
    a = np.diag([-1.0, -2.0, -3.0])
    vl, vr = np.eye(3), np.eye(3)
    assert np.array_equal(participation_factors(a, vr, vl), np.eye(3))


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.zeros((0, 0)), np.array([[np.nan]])])
def test_state_matrix_validation(bad):
    with pytest.raises(ValueError):
        StateMatrix(bad, ())


def test_linearise_requires_equilibrium():
    s = copy.copy(helpers.system("smib"))
    s.x0 = s.x0.copy()
    s.x0[0] += 0.1
    with pytest.raises(NotAtEquilibrium):
        linearize(s)


def test_input_matrix_for_mechanical_power():
    s = helpers.system("smib", pss=False)
    sm = linearize(s, with_inputs=True)
    k = sm.input_labels.index("G1.pm_ref")
    col = sm.b[:, k]
    # the reference only enters the governor, never the rotor directly
    assert col[s.state_names.index("G1.omega")] == pytest.approx(0.0, abs=1e-6)
    assert abs(col[s.state_names.index("G1.gov_int")]) > 0


def test_pss_improves_three_machine_damping():
    off = eigen_analysis(linearize(helpers.system("three_machine", pss=False)))
    on = eigen_analysis(linearize(helpers.system("three_machine")))
    assert on.least_damped_in_band().damping_ratio > off.least_damped_in_band().damping_ratio
