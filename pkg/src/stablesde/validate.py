"""Built-in invariant checks behind the `validate` subcommand.

The quick tier replays the exactness contracts (partition identity, block
idempotence, Euler bitwise identities, synthetic rate fits, grid map
conventions) in well under a minute; the full tier adds Monte Carlo checks
at reduced sample counts.  Each check returns (name, passed, detail).
"""
from __future__ import annotations

import math

import numpy as np

from . import drift, dyadic, euler, heatkernel, levy, weak_error
from .streams import make_stream, stream_root


def _check(name, fn):
    try:
        detail = fn()
        return (name, True, detail or "")
    except AssertionError as exc:
        return (name, False, str(exc))
    except Exception as exc:  # surfaced as a failure, not a crash
        return (name, False, f"{type(exc).__name__}: {exc}")


def quick_checks() -> list[tuple[str, bool, str]]:
    checks = []

    def partition_identity():
        an = dyadic.build_partition(1, 2 * math.pi, 1024)
        rho = an.xi_radius()
        worst = 0.0
        for k in range(an.J_max + 1):
            lhs = dyadic.chi(2 * rho)
            for j in range(k + 1):
                lhs = lhs + (dyadic.chi(rho / 2**j) - dyadic.chi(rho / 2 ** (j - 1)))
            worst = max(worst, float(np.max(np.abs(lhs - dyadic.chi(rho / 2**k)))))
        assert worst < 1e-12, f"partition identity error {worst:.2e}"
        return f"max error {worst:.2e}"

    checks.append(_check("partition identity", partition_identity))

    def block_idempotence():
        an = dyadic.build_partition(1, 2 * math.pi, 1024)
        gen = make_stream(stream_root(2, "validate"))
        spec = np.zeros(1024, complex)
        spec[1:200] = gen.standard_normal(199) + 1j * gen.standard_normal(199)
        spec[-199:] = np.conj(spec[1:200][::-1])
        f = dyadic.GridFunction(an, np.fft.ifft(spec).real)
        worst = 0.0
        for j in range(0, an.J_max):
            rj = dyadic.block(f, j)
            around = dyadic.block(f, j - 1).values + rj.values
            if j + 1 <= an.J_max:
                around = around + dyadic.block(f, j + 1).values
            redo = dyadic.block(dyadic.GridFunction(an, around), j)
            worst = max(worst, float(np.max(np.abs(redo.values - rj.values))))
        assert worst < 1e-10, f"block idempotence error {worst:.2e}"
        return f"max error {worst:.2e}"

    checks.append(_check("block idempotence", block_idempotence))

    def euler_exactness():
        spec = levy.ProcessSpec(1.5, levy.Sphere.cylindrical(1))
        cfg = euler.EulerConfig(n=16, T=1.0, x0=(0.5,), drift=drift.zero_drift(),
                                noise=spec, N=1, seed=42)
        term = euler.simulate_one(cfg, 0)
        gen = make_stream(cfg.stream_key(), 0)
        traj = levy.sample_path(spec, np.arange(17) / 16, gen)
        assert term[0] == 0.5 + traj.states[-1, 0], "zero-drift identity broken"
        cfg2 = euler.EulerConfig(n=16, T=1.0, x0=(0.5,),
                                 drift=drift.constant_drift(0.7),
                                 noise=spec, N=1, seed=42)
        term2 = euler.simulate_one(cfg2, 0)
        gen = make_stream(cfg2.stream_key(), 0)
        disp = np.zeros(1)
        scale = levy.increment_scale(spec, 1 / 16)
        for _ in range(16):
            disp = disp + np.array([0.7]) / 16 + levy.draw_unit_block(spec, 1, gen)[0] * scale
        assert term2[0] == 0.5 + disp[0], "constant-drift identity broken"
        return "bitwise"

    checks.append(_check("euler exactness", euler_exactness))

    def synthetic_rate():
        rep = weak_error.rate_fit([(n, 3.0 * n**-0.7, 1e-9) for n in (8, 16, 32, 64)])
        assert abs(rep.slope + 0.7) < 1e-12, f"slope {rep.slope}"
        return f"slope {rep.slope:.15f}"

    checks.append(_check("synthetic rate fit", synthetic_rate))

    def grid_map():
        assert euler.phi_n(0.349, 10) == 0.3
        assert euler.phi_n(0.3, 10) == 0.3
        gen = make_stream(stream_root(3, "validate"))
        ts = gen.random(100000) * 7
        ph = euler.phi_n(ts, 13)
        assert np.all(ph <= ts) and np.all(ts - ph < 1 / 13)
        return "left-closed"

    checks.append(_check("grid map convention", grid_map))

    def replay_small():
        spec = levy.ProcessSpec(1.5, levy.Sphere.cylindrical(1))
        cfg = euler.EulerConfig(n=8, T=1.0, x0=(0.0,), drift=drift.sine_drift(),
                                noise=spec, N=5000, seed=11)
        law1 = euler.simulate_ensemble(cfg, threads=1)
        law2 = euler.simulate_ensemble(cfg, threads=2)
        assert law1.samples_hash() == law2.samples_hash(), "thread count changed samples"
        euler.replay_law(law1.manifest)
        return "bit-identical"

    checks.append(_check("replay determinism", replay_small))
    return checks


def full_checks() -> list[tuple[str, bool, str]]:
    checks = quick_checks()

    def sampler_cf():
        gen = make_stream(stream_root(5, "validate"))
        x = levy.sample_1d_standard(1.5, 200000, gen)
        c = np.cos(x)
        z = abs(c.mean() - math.exp(-1.0)) / (c.std() / math.sqrt(len(x)))
        assert z < 4.0, f"characteristic function z-score {z:.2f}"
        return f"z = {z:.2f}"

    checks.append(_check("sampler characteristic function", sampler_cf))

    def heat_kernel_mass():
        an = dyadic.build_partition(1, 1024.0, 65536)
        spec = levy.ProcessSpec(1.5, levy.Sphere.cylindrical(1))
        kg = heatkernel.density_fft(spec, 1.0, an)
        assert abs(kg.mass() - 1.0) < 1e-6
        return f"mass error {abs(kg.mass() - 1.0):.2e}"

    checks.append(_check("heat kernel mass", heat_kernel_mass))

    def mollifier_slope():
        an = dyadic.build_partition(1, 8 * math.pi, 16384)
        fld = drift.PacketField(beta=0.2, J=8, a0=1.0)
        gf = dyadic.GridFunction(an, fld.grid_values(an))
        ms = 2.0 ** np.arange(1.0, 6.5, 0.5)
        sups = [float(np.max(np.abs(drift.mollify(gf, m, an).values))) for m in ms]
        sl = float(np.polyfit(np.log(ms), np.log(sups), 1)[0])
        assert abs(sl - 0.2) < 0.05, f"growth slope {sl:.3f}"
        return f"slope {sl:.3f}"

    checks.append(_check("mollifier growth", mollifier_slope))
    return checks
