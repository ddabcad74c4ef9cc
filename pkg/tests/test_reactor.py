import math

import numpy as np
import pytest

from opident.errors import IntegrationFailure, InvalidInputError
from opident.reactor import (
    PointKineticsParams,
    StepBackScenario,
    generate_stepback_corpus,
    integrate_point_kinetics,
    reactivity,
    rod_position,
    write_transient_csv,
)

PARAMS = PointKineticsParams()


def test_default_constants():
    assert PARAMS.groups == 6
    assert PARAMS.beta_total == pytest.approx(0.0065, rel=1e-12)
    assert PARAMS.generation_time == 1e-3


def test_rod_position():
    sc = StepBackScenario(100.0, 30.0, drop_duration_s=2.0)
    assert rod_position(0.0, sc) == 0.0
    assert rod_position(2.0, sc) == 0.3
    assert rod_position(9.0, sc) == 0.3
    assert rod_position(1.0, sc) == pytest.approx(0.15, abs=1e-16)
    with pytest.raises(InvalidInputError):
        rod_position(-0.1, sc)


def test_reactivity():
    assert reactivity(0.0) == 0.0
    assert reactivity(1.0, -10.0) == pytest.approx(-0.01, abs=1e-18)
    assert reactivity(0.5, -30.0) == pytest.approx(-0.015, abs=1e-18)
    with pytest.raises(InvalidInputError):
        reactivity(1.5)
    with pytest.raises(InvalidInputError):
        reactivity(-0.1)


def test_scenario_validation():
    with pytest.raises(InvalidInputError):
        StepBackScenario(100.0, 30.0, total_rod_worth_mk=5.0)
    with pytest.raises(InvalidInputError):
        StepBackScenario(100.0, 130.0)
    assert StepBackScenario(100.0, 30.0).sample_count == 141


def test_equilibrium():
    tr = integrate_point_kinetics(PARAMS, StepBackScenario(80.0, 0.0))
    assert np.max(np.abs(tr.power_pct / 80.0 - 1.0)) < 1e-9


def test_prompt_jump():
    beta = PARAMS.beta_total
    sc = StepBackScenario(100.0, 0.0, horizon_s=1.0, dt_s=0.01)
    rho = -beta
    ref = integrate_point_kinetics(PARAMS, sc, dt_int=1e-4, reactivity_fn=lambda t: rho if t > 0 else 0.0)
    # the prompt transient decays as exp(-(beta - rho) t / Lambda); read P once it is below 2%
    t_star = PARAMS.generation_time / (beta - rho) * math.log(50)
    k = int(round(t_star / 0.01))
    jump = 100.0 * beta / (beta - rho)
    assert jump == pytest.approx(50.0)
    assert abs(ref.power_pct[k] - jump) / jump < 0.02


def _final_power(dt):
    sc = StepBackScenario(100.0, 50.0)
    return integrate_point_kinetics(PARAMS, sc, dt_int=dt).power_pct


def test_rk4_order():
    base = 1e-2
    ref = _final_power(base / 8)
    e1 = np.max(np.abs(_final_power(base) - ref))
    e2 = np.max(np.abs(_final_power(base / 2) - ref))
    assert 8 <= e1 / e2 <= 32


def test_dt_must_divide_sampling():
    with pytest.raises(InvalidInputError):
        integrate_point_kinetics(PARAMS, StepBackScenario(100.0, 30.0), dt_int=0.03)


def test_integration_failure():
    sc = StepBackScenario(100.0, 0.0, horizon_s=1.0)
    with pytest.raises(IntegrationFailure):
        integrate_point_kinetics(PARAMS, sc, dt_int=0.1, reactivity_fn=lambda t: 1e6)


class TestCorpus:
    def test_shape(self, reactor_corpus):
        assert len(reactor_corpus) == 8
        assert sum(len(tr) for tr in reactor_corpus) == 1128
        for tr in reactor_corpus:
            assert tr.power_pct[0] == tr.scenario.initial_power_pct
            np.testing.assert_allclose(tr.t, np.arange(141) * 0.1, rtol=0, atol=1e-12)

    def test_positivity_and_decrease(self, reactor_corpus):
        for tr in reactor_corpus:
            assert np.all(tr.power_pct > 0)
            assert np.all(tr.precursors > 0)
            assert tr.power_pct[-1] < tr.power_pct[0]
            after = tr.power_pct[tr.t >= tr.scenario.drop_duration_s]
            assert np.all(np.diff(after) <= 0)

    def test_deeper_drop_ends_lower(self, reactor_corpus):
        final = {(tr.scenario.initial_power_pct, tr.scenario.drop_pct): tr.power_pct[-1] for tr in reactor_corpus}
        for p in (100.0, 90.0, 80.0, 70.0):
            assert final[(p, 50.0)] < final[(p, 30.0)]

    def test_linear_in_initial_power(self, reactor_corpus):
        by = {(tr.scenario.initial_power_pct, tr.scenario.drop_pct): tr.power_pct for tr in reactor_corpus}
        for drop in (30.0, 50.0):
            np.testing.assert_allclose(by[(70.0, drop)], 0.7 * by[(100.0, drop)], rtol=1e-12)

    def test_csv(self, tmp_path, reactor_corpus):
        path = tmp_path / "t.csv"
        write_transient_csv(reactor_corpus, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t_s,rod_fraction,initial_power_pct,drop_pct,power_pct"
        assert len(lines) == 1129

    def test_deterministic(self, reactor_corpus):
        again = generate_stepback_corpus(powers=(100.0,), drops=(30.0,))
        np.testing.assert_array_equal(again[0].power_pct, reactor_corpus[0].power_pct)
