import math

import numpy as np
import pytest

from stablesde import drift, dyadic
from stablesde.errors import ConfigurationError, ParameterError, ResolutionError, UsageError

TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def analyzer():
    return dyadic.build_partition(1, TWO_PI, 4096)


@pytest.fixture(scope="module")
def wide_analyzer():
    # wide box so mollification does not squash the packet envelopes
    return dyadic.build_partition(1, 8 * TWO_PI / 2, 16384)


# -- kernel ------------------------------------------------------------------

def test_kernel_has_unit_mass():
    ker = drift.default_kernel()
    assert ker.fourier(0.0) == pytest.approx(1.0, abs=1e-10)


def test_kernel_transform_bounded_by_one():
    ker = drift.default_kernel()
    u = np.linspace(0, 60, 500)
    assert np.max(np.abs(ker.fourier(u))) <= 1.0 + 1e-12


# -- lacunary fields -----------------------------------------------------------

def test_lacunary_has_unit_besov_norm(analyzer):
    fld, gf = drift.synth_besov_field(0.2, 10, 1.0, seed=7, analyzer=analyzer)
    res = dyadic.besov_norm(gf, -0.2)
    assert 0.5 <= res.value <= 2.0


def test_single_level_field_is_one_cosine(analyzer):
    fld = drift.LacunaryField(beta=0.3, J=0, a0=2.0, seed=1)
    vals = fld.grid_values(analyzer)
    x = analyzer.x_axis()
    expect = 2.0 * np.cos(x + fld.phases[0])
    np.testing.assert_allclose(vals, expect, atol=1e-12)


def test_sup_norm_grows_with_levels_but_besov_norm_does_not(analyzer):
    sups, norms = [], []
    for J in (4, 7, 10):
        fld, gf = drift.synth_besov_field(0.1, J, 1.0, seed=3, analyzer=analyzer)
        sups.append(gf.sup_norm())
        norms.append(dyadic.besov_norm(gf, -0.1).value)
    assert sups[2] > sups[1] > sups[0]
    assert max(norms) < 2.0 * min(norms)


def test_phases_deterministic_per_seed():
    a = drift.LacunaryField(beta=0.2, J=6, a0=1.0, seed=9)
    b = drift.LacunaryField(beta=0.2, J=6, a0=1.0, seed=9)
    c = drift.LacunaryField(beta=0.2, J=6, a0=1.0, seed=10)
    assert a.phases == b.phases
    assert a.phases != c.phases


def test_field_too_fine_for_grid_rejected():
    small = dyadic.build_partition(1, TWO_PI, 128)
    fld = drift.LacunaryField(beta=0.2, J=10, a0=1.0, seed=1)
    with pytest.raises(ConfigurationError):
        fld.grid_values(small)


def test_bad_beta_rejected():
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(ParameterError):
            drift.LacunaryField(beta=bad, J=4, a0=1.0, seed=1)


# -- mollification -------------------------------------------------------------

def test_approximate_identity_on_band_limited_base(analyzer):
    base = dyadic.GridFunction.from_callable(
        analyzer, lambda x: np.cos(3 * x) + 0.5 * np.sin(7 * x)
    )
    errs = [
        float(np.max(np.abs(drift.mollify(base, m, analyzer).values - base.values)))
        for m in (8, 16, 32, 64)
    ]
    assert errs == sorted(errs, reverse=True)
    assert errs[-1] < 1e-3


def test_mollify_preserves_mean(analyzer):
    base = dyadic.GridFunction.from_callable(
        analyzer, lambda x: 0.7 + np.cos(5 * x)
    )
    out = drift.mollify(base, 16, analyzer)
    assert np.mean(out.values) == pytest.approx(np.mean(base.values), abs=1e-10)


def test_under_resolved_kernel_rejected(analyzer):
    fld = drift.LacunaryField(beta=0.2, J=4, a0=1.0, seed=1)
    with pytest.raises(ResolutionError):
        drift.mollify(fld, 1e6, analyzer)


def test_mollified_besov_norm_never_inflates(analyzer):
    fld, gf = drift.synth_besov_field(0.2, 10, 1.0, seed=7, analyzer=analyzer)
    base_norm = dyadic.besov_norm(gf, -0.2).value
    for m in (2, 8, 32):
        moll = drift.mollify(fld, m, analyzer)
        assert dyadic.besov_norm(moll, -0.2).value <= 2.0 * base_norm


def test_packet_growth_slope_matches_regularity(wide_analyzer):
    for beta in (0.1, 0.2, 0.3):
        fld = drift.PacketField(beta=beta, J=8, a0=1.0)
        gf = dyadic.GridFunction(wide_analyzer, fld.grid_values(wide_analyzer))
        ms = 2.0 ** np.arange(1.0, 6.25, 0.5)
        sups = [
            float(np.max(np.abs(drift.mollify(gf, m, wide_analyzer).values)))
            for m in ms
        ]
        slope = float(np.polyfit(np.log(ms), np.log(sups), 1)[0])
        assert slope == pytest.approx(beta, abs=0.05)


def test_packet_besov_norm_near_amplitude(wide_analyzer):
    fld = drift.PacketField(beta=0.2, J=8, a0=1.5)
    gf = dyadic.GridFunction(wide_analyzer, fld.grid_values(wide_analyzer))
    res = dyadic.besov_norm(gf, -0.2)
    assert 0.75 <= res.value <= 3.0


def test_monotone_localization(analyzer):
    # || b_m - b_2m || in a weaker negative norm vanishes as m grows
    fld, _ = drift.synth_besov_field(0.2, 10, 1.0, seed=7, analyzer=analyzer)
    for theta in (0.4, 0.6):
        gaps = []
        for m in (8, 16, 32, 64):
            a = drift.mollify(fld, m, analyzer).values
            b = drift.mollify(fld, 2 * m, analyzer).values
            gaps.append(
                dyadic.besov_norm(dyadic.GridFunction(analyzer, a - b), -theta).value
            )
        assert gaps == sorted(gaps, reverse=True)


# -- evaluation ----------------------------------------------------------------

def test_smooth_drift_evaluation():
    d = drift.SmoothDrift(np.sin, name="sin")
    assert drift.evaluate(d, 0.0, np.array([math.pi / 2]))[0] == pytest.approx(1.0)


def test_mollified_constant_field_stays_constant(analyzer):
    base = dyadic.GridFunction(analyzer, np.full(analyzer.grid_size, 0.4))
    for m in (4, 32):
        out = drift.mollify(base, m, analyzer)
        np.testing.assert_allclose(out.values, 0.4, atol=1e-12)


def test_raw_field_not_pointwise_evaluable():
    fld = drift.LacunaryField(beta=0.2, J=5, a0=1.0, seed=1)
    with pytest.raises(UsageError):
        drift.evaluate(fld, 0.0, np.array([0.1]))


def test_cubic_interpolation_error_small(analyzer):
    fld = drift.LacunaryField(beta=0.2, J=5, a0=1.0, seed=7)
    md = drift.MollifiedDrift(base=fld, m=16.0, analyzer=analyzer)
    xs = np.linspace(0, TWO_PI, 777, endpoint=False)
    exact = np.zeros_like(xs)
    for j, (amp, ph) in enumerate(zip(md.damped_amplitudes(), fld.phases)):
        exact += amp * np.cos(2**j * xs + ph)
    got = drift.evaluate(md, 0.0, xs)
    assert np.max(np.abs(got - exact)) < 1e-4


def test_drift_config_round_trip(analyzer):
    fld = drift.LacunaryField(beta=0.2, J=5, a0=1.0, seed=7)
    md = drift.MollifiedDrift(base=fld, m=16.0, analyzer=analyzer)
    rebuilt = drift.drift_from_config(md.to_config())
    np.testing.assert_array_equal(rebuilt.grid_values(), md.grid_values())
    for d in (drift.zero_drift(), drift.constant_drift(0.3),
              drift.sign_drift(2.0), drift.sine_drift(1.5, 3.0)):
        r = drift.drift_from_config(drift.drift_to_config(d))
        x = np.linspace(-3, 3, 11)
        np.testing.assert_array_equal(r(0.0, x), d(0.0, x))


def test_kernel_unit_mass_by_grid_quadrature():
    ker = drift.default_kernel()
    x = np.linspace(-1.0, 1.0, 20001)
    vals = ker.density(x)
    mass = float(np.trapezoid(vals, x))
    assert mass == pytest.approx(1.0, abs=1e-10)
    # compact support
    assert ker.density(np.array([-1.5, 1.01, 2.0])).tolist() == [0.0, 0.0, 0.0]
