import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

import helpers
from gridmodal.exceptions import SimulationError, UnknownTarget
from gridmodal.time_domain import (Event, IterationMatrix, SimOptions, StepAbsolute, StepRelative,
                                   apply_event, parse_event, simulate, speed_envelope,
                                   trbdf2_step)

NO_Y = np.zeros(0)


def scalar_steps(lam, h, n, x0=1.0):
    def rhs(t, x, y):
        return lam * x, NO_Y

    m = IterationMatrix(lambda t, x, y: np.array([[lam]]), 1)
    m.refresh_jacobian(0.0, np.ones(1), NO_Y)
    x = np.array([x0])
    for k in range(n):
        x = trbdf2_step(rhs, k * h, h, x, NO_Y, m, rtol=1e-13, atol=1e-15).x
    return x[0]


# -- integrator -----------------------------------------------------------------------

def test_global_order_two():
    errs = [abs(scalar_steps(-1.0, 1.0 / 2 ** k, 2 ** k) - math.exp(-1)) for k in range(3, 8)]
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 1.9)


def test_quadratic_solutions_are_exact():
    def rhs(t, x, y):
        return np.array([2.0 * t]), NO_Y

    m = IterationMatrix(lambda t, x, y: np.zeros((1, 1)), 1)
    m.refresh_jacobian(0.0, np.zeros(1), NO_Y)
    x, t = np.zeros(1), 0.0
    for h in (0.1, 0.37, 0.05):
        x = trbdf2_step(rhs, t, h, x, NO_Y, m).x
        t += h
    assert x[0] == pytest.approx(t * t, abs=1e-14)


@given(st.floats(-1e9, -10.0))
def test_stiff_decay(z):
    # L-stable: the amplification factor decays like (2 + 2 sqrt 2) / |z|
    r = abs(scalar_steps(z, 1.0, 1))
    assert r < 1.0
    assert r < 5.0 / abs(z)


@given(st.floats(-10.0, -1e-3))
def test_amplification_below_one_for_decaying_modes(z):
    assert abs(scalar_steps(z, 1.0, 1)) < 1.0


def test_error_estimate_tracks_true_local_error():
    def rhs(t, x, y):
        return -x, NO_Y

    m = IterationMatrix(lambda t, x, y: -np.eye(1), 1)
    m.refresh_jacobian(0.0, np.ones(1), NO_Y)
    for h in (0.2, 0.1):
        res = trbdf2_step(rhs, 0.0, h, np.ones(1), NO_Y, m, rtol=1e-13, atol=1e-15)
        true = abs(res.x[0] - math.exp(-h))
        assert 0.2 * true < abs(res.error[0]) < 5 * true


class LinearDae:
    """x' = A x + B y + e u,  0 = C x - y; just enough of the system interface."""

    def __init__(self):
        self.a = np.array([[-0.5, 2.0, 0.0], [-2.0, -0.3, 0.5], [0.0, 0.0, -4.0]])
        self.b = np.array([[0.0], [1.0], [0.5]])
        self.c = np.array([[0.2, 0.0, -1.0]])
        self.e = np.array([0.0, 1.0, 0.0])
        self.n_x = 3
        self.x0 = np.zeros(3)
        self.y0 = np.zeros(1)
        self.u0 = np.zeros(1)
        self.input_index = {("U", "pm_ref"): 0}

    def evaluate(self, x, y, u, outputs=False):
        return self.a @ x + self.b @ y + self.e * u[0], self.c @ x - y

    def exact(self, t, t_event, amount):
        full = self.a + self.b @ self.c
        if t <= t_event:
            return np.zeros(3)
        # step response of x' = F x + e:  x = F^-1 (expm(F tau) - I) e
        tau = t - t_event
        return np.linalg.solve(full, (scipy.linalg.expm(full * tau) - np.eye(3)) @ self.e) * amount


def test_linear_dae_step_against_matrix_exponential():
    sys_ = LinearDae()
    ev = Event(0.5, ("U", "pm"), StepAbsolute(0.1))
    ts = simulate(sys_, [ev], SimOptions(t_end=5.0, rel_tol=1e-8, abs_tol=1e-10, output_dt=0.05))
    ref = np.array([sys_.exact(t, 0.5, 0.1) for t in ts.t])
    assert np.max(np.abs(ts.x - ref)) < 1e-6
    assert np.max(np.abs(ts.y[:, 0] - ref @ sys_.c[0])) < 1e-6


def test_events_land_on_sample_grid():
    sys_ = LinearDae()
    ts = simulate(sys_, [Event(0.123, ("U", "pm"), StepAbsolute(1.0))],
                  SimOptions(t_end=0.3, output_dt=0.1))
    assert 0.123 in ts.t.tolist()
    k = ts.t.tolist().index(0.123)
    # inputs are right-continuous: the event sample already carries the new value
    assert ts.u[k, 0] == 1.0 and ts.u[k - 1, 0] == 0.0
    assert np.max(np.abs(ts.x[k])) < 1e-12
    assert ts.t[-1] == 0.3


def test_failing_model_reports_simulation_error():
    class Broken(LinearDae):
        def evaluate(self, x, y, u, outputs=False):
            f, g = super().evaluate(x, y, u)
            if u[0] > 0:
                f = f * np.nan
            return f, g

    with pytest.raises(SimulationError):
        simulate(Broken(), [Event(0.1, ("U", "pm"), StepAbsolute(1.0))], SimOptions(t_end=1.0))


# -- events ---------------------------------------------------------------------------

@pytest.mark.parametrize("text, target, change, time", [
    ("G1:pm:+5%@40", ("G1", "pm"), StepRelative(0.05), 40.0),
    ("Chamchamal:vref:-0.02@1.5", ("Chamchamal", "vref"), StepAbsolute(-0.02), 1.5),
    ("G2:pm:0.1%@0", ("G2", "pm"), StepRelative(0.001), 0.0),
])
def test_parse_event(text, target, change, time):
    ev = parse_event(text)
    assert ev.target == target and ev.time == time
    assert type(ev.change) is type(change)
    assert vars(ev.change) == pytest.approx(vars(change))


@pytest.mark.parametrize("text", ["G1:pm:+5%", "G1:speed:+5%@1", "G1:pm:x@1", ":pm:1@1",
                                  "G1:pm:+5%@-1", "G1 pm +5 @ 1", ""])
def test_bad_events(text):
    with pytest.raises(ValueError):
        parse_event(text)


@given(name=st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,8}", fullmatch=True),
       qty=st.sampled_from(["pm", "vref"]), value=st.floats(-50, 50, allow_nan=False),
       pct=st.booleans(), time=st.floats(0, 1000))
def test_event_round_trip(name, qty, value, pct, time):
    ev = parse_event(f"{name}:{qty}:{value!r}{'%' if pct else ''}@{time!r}")
    assert ev.target == (name, qty) and ev.time == time
    if pct:
        assert ev.change.fraction == pytest.approx(value / 100)
    else:
        assert ev.change.amount == value


def test_step_kinds():
    assert StepRelative(0.05).apply(2.0) == pytest.approx(2.1)
    assert StepAbsolute(-0.5).apply(2.0) == 1.5
    with pytest.raises(ValueError):
        StepRelative(-1.0)


def test_unknown_target():
    s = helpers.system("smib")
    with pytest.raises(UnknownTarget):
        apply_event(s, s.u0, parse_event("G9:pm:+1%@1"))
    with pytest.raises(UnknownTarget):
        simulate(s, [parse_event("G9:pm:+1%@1")], SimOptions(t_end=1.0))


@pytest.mark.parametrize("kw", [dict(t_end=0), dict(t_end=1, max_step=0), dict(t_end=1, rel_tol=0),
                                dict(t_end=1, output_dt=-1)])
def test_option_validation(kw):
    with pytest.raises(ValueError):
        SimOptions(**kw)


# -- on the power system ------------------------------------------------------------------

@pytest.fixture(scope="module")
def smib_step():
    s = helpers.system("smib")
    return simulate(s, [parse_event("G1:pm:+1%@1")], SimOptions(t_end=6.0))


def test_equilibrium_is_steady():
    s = helpers.system("three_machine")
    ts = simulate(s, [], SimOptions(t_end=5.0))
    assert np.max(np.abs(ts.x - s.x0)) < 1e-8
    assert speed_envelope(ts, 0, 5) < 1e-10


def test_timeseries_columns(smib_step):
    cols = smib_step.columns
    assert {"G1.delta", "G1.omega", "G1.p_elec", "G1.p_accel", "bus1.v_mag"} <= set(cols)
    assert cols["G1.omega"][0] == pytest.approx(1.0)
    # the infinite bus does not move
    assert np.max(np.abs(cols["bus1.v_mag"] - cols["bus1.v_mag"][0])) < 1e-12


def test_power_step_opens_the_gate(smib_step):
    gate = smib_step.state("G1.gate")
    assert gate[-1] > gate[0]
    assert np.all(smib_step.u[smib_step.t < 1.0, 0] == smib_step.u[0, 0])
    assert speed_envelope(smib_step, 1.0, 6.0) > 0


def test_state_accessor(smib_step):
    assert np.array_equal(smib_step.state("G1.delta"), smib_step.x[:, 0])


def test_event_at_time_zero_shows_in_first_sample():
    ts = simulate(LinearDae(), [Event(0.0, ("U", "pm"), StepAbsolute(2.0))],
                  SimOptions(t_end=0.1, output_dt=0.05))
    assert ts.u[0, 0] == 2.0 and np.all(ts.x[0] == 0)
