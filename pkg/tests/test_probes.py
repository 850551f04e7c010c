import numpy as np
import pytest

from stablesde import drift, euler, levy, probes

SPEC15 = levy.ProcessSpec(1.5, levy.Sphere.cylindrical(1))
SPEC18 = levy.ProcessSpec(1.8, levy.Sphere.cylindrical(1))


@pytest.mark.parametrize("spec", [SPEC15, SPEC18])
def test_stochastic_integral_window_scaling(spec):
    deltas = [2.0**-k for k in range(2, 8)]
    vals = [probes.stochastic_integral_moment(spec, d, 1.0, 60000, seed=3)
            for d in deltas]
    slope = float(np.polyfit(np.log(deltas), np.log(vals), 1)[0])
    assert slope == pytest.approx(1.0 / spec.alpha, abs=0.1)


def test_moment_requires_p_below_alpha():
    with pytest.raises(Exception):
        probes.stochastic_integral_moment(SPEC15, 0.5, 1.6, 100, seed=1)


def test_increment_gap_scaling():
    vals = []
    ns = [16, 32, 64, 128, 256]
    for n in ns:
        cfg = euler.EulerConfig(n=n, T=1.0, x0=(0.0,), drift=drift.sign_drift(),
                                noise=SPEC15, N=20000, seed=5)
        vals.append(probes.increment_gap_moment(cfg, 1.0))
    slope = float(np.polyfit(np.log(ns), np.log(vals), 1)[0])
    assert slope == pytest.approx(-1.0 / 1.5, abs=0.1)


def test_krylov_time_integral_one_sided():
    res = probes.krylov_time_integral(1.8, 0.2, m=8.0,
                                      deltas=[1 / 32, 1 / 16, 1 / 8, 1 / 4],
                                      n_fine=512, N=20000, seed=7)
    assert res.slope >= (1.8 - 0.2) / 1.8 - 0.15
    assert all(m > 0 for m in res.moments)
