"""Monte Carlo probes of the moment estimates behind the rate proofs.

Three quantities are probed, each with a known scaling exponent:

  * the gap between the scheme and its own left grid point, whose p-th
    moment scales like n^(-p/alpha) once the drift term n^(-p) is dominated;
  * integrals of a bounded piecewise-constant integrand against the noise,
    whose p-th moment scales like delta^(p/alpha) in the window length;
  * time integrals of a mollified rough function along the scheme, which
    decay at least like delta^((alpha-beta)/alpha) (an upper-bound check,
    so steeper observed decay passes).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import drift as drift_mod
from . import levy
from .errors import ParameterError
from .euler import EulerConfig, _drift_evaluator, config_with_mollified_drift, phi_n
from .streams import block_plan, make_stream, stream_root

__all__ = [
    "increment_gap_moment",
    "stochastic_integral_moment",
    "krylov_time_integral",
]


def increment_gap_moment(config: EulerConfig, p: float, r_count: int = 16,
                         threads: int = 1) -> float:
    """Monte Carlo estimate of E |X_r - X_{phi_n(r)}|^p averaged over
    uniformly drawn off-grid times r in (0, T].

    The scheme is advanced once per trajectory block; at each sampled r the
    within-step state is completed exactly by one extra increment over the
    gap r - phi_n(r).
    """
    if not 0 < p < config.noise.alpha:
        raise ParameterError("need 0 < p < alpha for a finite moment")
    spec = config.noise
    rgen = make_stream(stream_root(config.seed, "gap-times", config.n))
    rs = np.sort(rgen.random(r_count) * config.T)
    rs = rs[rs > 0]
    gaps = rs - phi_n(rs, config.n)
    idx = np.round((rs - gaps) * config.n).astype(int)

    config = config_with_mollified_drift(config)
    total = 0.0
    count = 0
    evaluator = _drift_evaluator(config)
    dt = 1.0 / config.n
    scale = levy.increment_scale(spec, dt)
    for b, (off, width) in enumerate(block_plan(config.N)):
        gen = make_stream(config.stream_key(), b)
        x = np.tile(np.asarray(config.x0, float), (width, 1))
        captures = {}
        for k in range(config.steps):
            if k in idx:
                captures[k] = x.copy()
            inc = levy.draw_unit_block(spec, width, gen) * scale
            x = x + evaluator(k * dt, x) * dt + inc
        for r, g, k in zip(rs, gaps, idx):
            xk = captures[k]
            if g > 0:
                extra = levy.draw_unit_block(spec, width, gen) \
                    * levy.increment_scale(spec, g)
            else:
                extra = np.zeros_like(xk)
            diff = evaluator(k * dt, xk) * g + extra
            total += float(np.sum(np.linalg.norm(diff, axis=1) ** p))
            count += width
    return total / count


def stochastic_integral_moment(spec: levy.ProcessSpec, delta: float, p: float,
                               N: int, seed: int, pieces: int = 8,
                               g_values=None) -> float:
    """E | int_tau^{tau+delta} g dL |^p for a bounded piecewise-constant g.

    The integrand is constant on ``pieces`` equal sub-windows, so the
    integral is an exact finite sum of independent stable increments.
    """
    if not 0 < p < spec.alpha:
        raise ParameterError("need 0 < p < alpha for a finite moment")
    if g_values is None:
        g_values = 1.0 + 0.5 * np.array([(-1.0) ** i for i in range(pieces)])
    g_values = np.asarray(g_values, float)
    sub = delta / len(g_values)
    gen = make_stream(stream_root(seed, "bh-moment", delta, p, len(g_values)))
    scale = levy.increment_scale(spec, sub)
    done = 0
    out = 0.0
    for off, width in block_plan(N):
        acc = np.zeros((width, spec.d))
        for g in g_values:
            acc += g * levy.draw_unit_block(spec, width, gen) * scale
        out += float(np.sum(np.linalg.norm(acc, axis=1) ** p))
        done += width
    return out / done


@dataclass(frozen=True)
class KrylovProbeResult:
    deltas: tuple[float, ...]
    moments: tuple[float, ...]
    slope: float


def krylov_time_integral(alpha: float, beta: float, m: float,
                         deltas, n_fine: int, N: int, seed: int,
                         levels: int = 10, p: float = 1.0,
                         tau: float = 0.25) -> KrylovProbeResult:
    """Decay of E | int_tau^{tau+delta} f_m(X_r) dr |^p in the window length.

    X is the scheme driven by the mollified rough field f_m (which also
    serves as the integrand), integrated by left-point quadrature on the
    fine grid.  The fitted slope is a one-sided check: theory bounds the
    moment by delta^(p (alpha - beta)/alpha) times a constant.
    """
    spec = levy.ProcessSpec(alpha, levy.Sphere.cylindrical(1))
    fld = drift_mod.LacunaryField(beta=beta, J=levels, a0=1.0, seed=seed)
    deltas = sorted(float(d) for d in deltas)
    T = math.ceil((tau + max(deltas)) * n_fine) / n_fine
    config = EulerConfig(
        n=n_fine, T=T, x0=(0.0,), drift=fld, noise=spec, N=N,
        seed=seed, m=float(m),
    )
    config = config_with_mollified_drift(config)
    evaluator = _drift_evaluator(config)
    dt = 1.0 / n_fine
    scale = levy.increment_scale(spec, dt)
    k0 = int(round(tau * n_fine))
    spans = [int(round(d * n_fine)) for d in deltas]
    sums = {s: 0.0 for s in spans}
    count = 0
    for b, (off, width) in enumerate(block_plan(config.N)):
        gen = make_stream(config.stream_key(), b)
        x = np.tile(np.asarray(config.x0, float), (width, 1))
        acc = np.zeros(width)
        recorded = {}
        for k in range(config.steps):
            fval = evaluator(k * dt, x)
            if k >= k0:
                acc = acc + fval[:, 0] * dt
            for s in spans:
                if k + 1 == k0 + s:
                    recorded[s] = acc.copy()
            x = x + fval * dt + levy.draw_unit_block(spec, width, gen) * scale
        for s in spans:
            sums[s] += float(np.sum(np.abs(recorded[s]) ** p))
        count += width
    moments = tuple(sums[s] / count for s in spans)
    slope = float(np.polyfit(np.log(deltas), np.log(moments), 1)[0])
    return KrylovProbeResult(deltas=tuple(deltas), moments=moments, slope=slope)
