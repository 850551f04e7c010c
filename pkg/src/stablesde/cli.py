"""Batch experiment runner.

One JSON config file drives every subcommand; command-line flags override
config values, and all randomness flows from the single global seed.  Runs
land in ``<output_root>/<timestamp>-<hash>/`` with a manifest recording the
config, seed, and a content hash per output file, so ``replay`` can verify
byte-identical reproduction.  Exit codes: 0 success, 1 validation/replay
failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, drift, dyadic, euler, heatkernel, levy, validate, weak_error
from .errors import ConfigurationError
from .streams import make_stream, stream_root

ENV_OUTPUT_ROOT = "STABLESDE_RUNS_ROOT"

_SCHEMA = {
    "seed": None,
    "threads": None,
    "output_root": None,
    "process": {"alpha", "sphere", "convention"},
    "analyzer": {"dim", "L", "grid_size"},
    "drift": {"kind", "beta", "J", "a0", "seed", "m", "kernel", "c", "scale",
              "amplitude", "wavenumber", "base", "analyzer"},
    "sample": {"t", "count"},
    "besov": {"s", "p", "q"},
    "heatkernel": {"times", "levels", "moment_pairs"},
    "euler": {"n", "T", "x0", "N", "m", "gamma"},
    "rate": {"experiment", "alpha", "beta", "gamma", "ladder", "N", "thetas",
             "m_ladder", "n_fine", "drift", "ref_factor", "levels",
             "field_seed", "pair_factor", "T"},
}

_SPHERE_KEYS = {"kind", "d", "atoms"}


def _check_keys(cfg: dict) -> None:
    for key, value in cfg.items():
        if key not in _SCHEMA:
            raise ConfigurationError(f"unknown config key {key!r}")
        allowed = _SCHEMA[key]
        if allowed is None or not isinstance(value, dict):
            continue
        for sub in value:
            if sub not in allowed:
                raise ConfigurationError(f"unknown config key {key}.{sub!r}")
        if key == "process" and isinstance(value.get("sphere"), dict):
            for sub in value["sphere"]:
                if sub not in _SPHERE_KEYS:
                    raise ConfigurationError(
                        f"unknown config key process.sphere.{sub!r}"
                    )


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ConfigurationError("config file must hold a JSON object")
    _check_keys(cfg)
    return cfg


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class RunDirectory:
    """Output directory plus the manifest assembled while writing."""

    def __init__(self, root: Path, command: str, config: dict, seed: int):
        cfg_text = json.dumps(config, sort_keys=True, default=repr)
        self.config_hash = hashlib.sha256(cfg_text.encode()).hexdigest()
        stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S")
        base = root / f"{stamp}-{self.config_hash[:12]}"
        self.path = base
        suffix = 0
        while True:
            try:
                self.path.mkdir(parents=True, exist_ok=False)
                break
            except FileExistsError:
                suffix += 1
                self.path = base.with_name(f"{base.name}-{suffix}")
        (self.path / "laws").mkdir(exist_ok=True)
        self.command = command
        self.config = config
        self.seed = seed
        self.outputs: dict[str, str] = {}
        self.counts: dict[str, int] = {}
        self.started = time.time()

    def write_text(self, rel: str, text: str) -> None:
        p = self.path / rel
        p.write_text(text)
        self.outputs[rel] = _sha256_file(p)

    def write_bytes(self, rel: str, payload: bytes) -> None:
        p = self.path / rel
        p.write_bytes(payload)
        self.outputs[rel] = _sha256_file(p)

    def finish(self) -> Path:
        manifest = {
            "tool_version": __version__,
            "command": self.command,
            "config": self.config,
            "config_sha256": self.config_hash,
            "global_seed": self.seed,
            "outputs": self.outputs,
            "sample_counts": self.counts,
            "wall_clock_s": round(time.time() - self.started, 3),
        }
        text = json.dumps(manifest, indent=2, sort_keys=True)
        (self.path / "manifest.json").write_text(text + "\n")
        return self.path / "manifest.json"


def _output_root(args, cfg) -> Path:
    env = os.environ.get(ENV_OUTPUT_ROOT)
    if env:
        return Path(env)
    if getattr(args, "output_root", None):
        return Path(args.output_root)
    return Path(cfg.get("output_root", "runs"))


def _spec_from_config(cfg: dict) -> levy.ProcessSpec:
    section = cfg.get("process", {"alpha": 1.5,
                                  "sphere": {"kind": "cylindrical", "d": 1}})
    return levy.ProcessSpec.from_config(section)


def _analyzer_from_config(cfg: dict) -> dyadic.DyadicAnalyzer:
    section = cfg.get("analyzer", {"dim": 1, "L": 2 * math.pi,
                                   "grid_size": 4096})
    return dyadic.DyadicAnalyzer(dim=int(section["dim"]), L=float(section["L"]),
                                 grid_size=int(section["grid_size"]))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_validate(args, cfg) -> int:
    checks = validate.quick_checks() if args.quick else validate.full_checks()
    failed = 0
    for name, ok, detail in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failed += 0 if ok else 1
    return 0 if failed == 0 else 1


def cmd_sample(args, cfg) -> int:
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    spec = _spec_from_config(cfg)
    section = cfg.get("sample", {})
    t = float(section.get("t", 1.0))
    count = int(section.get("count", 100000))
    run = RunDirectory(_output_root(args, cfg), "sample", cfg, seed)
    gen = make_stream(stream_root(seed, "sample", t, count))
    blocks = []
    remaining = count
    while remaining > 0:
        width = min(remaining, 65536)
        blocks.append(levy.draw_unit_block(spec, width, gen)
                      * levy.increment_scale(spec, t))
        remaining -= width
    samples = np.concatenate(blocks, axis=0)
    run.write_bytes("laws/samples.bin", samples.tobytes())
    run.counts["samples"] = count
    manifest = run.finish()
    print(manifest)
    return 0


def cmd_besov(args, cfg) -> int:
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    analyzer = _analyzer_from_config(cfg)
    d = drift.drift_from_config(cfg.get("drift", {"kind": "lacunary", "beta": 0.1,
                                                  "J": 8, "a0": 1.0, "seed": seed}))
    section = cfg.get("besov", {})
    s = float(section.get("s", -getattr(d, "declared_beta", 0.0) or 0.0))
    if isinstance(d, drift.LacunaryField):
        g = dyadic.GridFunction(analyzer, d.grid_values(analyzer))
    elif isinstance(d, drift.MollifiedDrift):
        g = dyadic.GridFunction(d.analyzer, d.grid_values())
    else:
        g = dyadic.GridFunction(analyzer, drift.evaluate(d, 0.0, analyzer.x_axis()))
    norm = dyadic.besov_norm(g, s)
    run = RunDirectory(_output_root(args, cfg), "besov", cfg, seed)
    lines = ["level,weighted_block_sup"]
    for j, w in enumerate(norm.block_norms, start=-1):
        lines.append(f"{j},{w!r}")
    lines.append(f"norm,{norm.value!r}")
    lines.append(f"leakage,{norm.leakage!r}")
    run.write_text("besov.csv", "\n".join(lines) + "\n")
    run.finish()
    print(f"norm {norm.value:.6g} leakage {norm.leakage:.2e} "
          f"warning={norm.leakage_warning}")
    return 0


def cmd_heatkernel(args, cfg) -> int:
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    spec = _spec_from_config(cfg)
    analyzer = _analyzer_from_config(cfg)
    section = cfg.get("heatkernel", {})
    times = [float(t) for t in section.get("times", [0.05 * 2**i for i in range(5)])]
    levels = [int(j) for j in section.get("levels", [-1, 2, 4, 6])]
    pairs = [tuple(p) for p in section.get("moment_pairs", [[0, 0.0], [1, 0.0]])]
    run = RunDirectory(_output_root(args, cfg), "heatkernel", cfg, seed)
    rows = ["quantity,parameter,t,value"]
    for t in times:
        kg = heatkernel.density_fft(spec, t, analyzer)
        rows.append(f"mass,,{t!r},{kg.mass()!r}")
        for (k, beta) in pairs:
            v = heatkernel.moment_integral(kg, float(beta), int(k))
            rows.append(f"moment_k{k}_beta{beta},,{t!r},{v!r}")
        for j in levels:
            rows.append(f"block_l1,{j},{t!r},{heatkernel.block_l1(kg, j)!r}")
    run.write_text("heatkernel.csv", "\n".join(rows) + "\n")
    for (k, beta) in pairs:
        vals = []
        for t in times:
            kg = heatkernel.density_fft(spec, t, analyzer)
            vals.append(heatkernel.moment_integral(kg, float(beta), int(k)))
        slope = float(np.polyfit(np.log(times), np.log(vals), 1)[0])
        print(f"moment integral k={k} beta={beta}: slope {slope:.4f} "
              f"(target {-(k - beta) / spec.alpha:.4f})")
    run.finish()
    return 0


def cmd_euler(args, cfg) -> int:
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    threads = args.threads or int(cfg.get("threads", 1))
    spec = _spec_from_config(cfg)
    section = dict(cfg.get("euler", {}))
    drift_cfg = cfg.get("drift", {"kind": "zero"})
    d = drift.drift_from_config(drift_cfg)
    config = euler.EulerConfig(
        n=int(section.get("n", 64)),
        T=float(section.get("T", 1.0)),
        x0=tuple(section.get("x0", [0.0] * spec.d)),
        drift=d,
        noise=spec,
        N=int(section.get("N", 100000)),
        seed=seed,
        m=section.get("m"),
        gamma=section.get("gamma"),
    )
    law = euler.simulate_ensemble(config, threads=threads)
    run = RunDirectory(_output_root(args, cfg), "euler", cfg, seed)
    run.write_bytes("laws/terminal.bin",
                    np.ascontiguousarray(law.samples).tobytes())
    run.write_text("laws/terminal.manifest.json",
                   json.dumps(law.manifest, indent=2, sort_keys=True) + "\n")
    run.counts["trajectories"] = config.N
    run.counts["excluded"] = law.excluded
    manifest = run.finish()
    print(manifest)
    return 0


def cmd_rate(args, cfg) -> int:
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    threads = args.threads or int(cfg.get("threads", 1))
    section = dict(cfg.get("rate", {}))
    experiment = args.experiment or section.get("experiment")
    if experiment not in ("bounded", "distributional", "stability"):
        raise ConfigurationError(
            f"rate experiment must be bounded, distributional or stability; "
            f"got {experiment!r}"
        )
    alpha = float(args.alpha if args.alpha is not None
                  else section.get("alpha", 1.5))
    ladder = args.ladder or section.get("ladder") or [32, 64, 128, 256]
    ladder = tuple(int(n) for n in ladder)
    N = int(args.N if args.N is not None else section.get("N", 100000))
    reports: list[tuple[str, weak_error.RateReport]] = []
    if experiment == "bounded":
        d = drift.drift_from_config(section.get("drift", {"kind": "sign",
                                                          "scale": 1.0}))
        rcfg = weak_error.BoundedRateConfig(
            alpha=alpha, drift=d, ladder=ladder, N=N, seed=seed,
            ref_factor=int(section.get("ref_factor", 64)), threads=threads,
            T=float(section.get("T", 1.0)),
        )
        reports.append(("bounded", weak_error.run_bounded_rate(rcfg)))
    elif experiment == "distributional":
        beta = float(args.beta if args.beta is not None
                     else section.get("beta", 0.1))
        gamma_raw = args.gamma if args.gamma is not None else section.get("gamma", "auto")
        gamma = 1.0 / alpha if gamma_raw == "auto" else float(gamma_raw)
        rcfg = weak_error.DistributionalRateConfig(
            alpha=alpha, beta=beta, gamma=gamma, ladder=ladder, N=N, seed=seed,
            levels=int(section.get("levels", 10)),
            field_seed=int(section.get("field_seed", 1)),
            ref_n_factor=int(section.get("ref_factor", 64)), threads=threads,
            T=float(section.get("T", 1.0)),
        )
        coupled, control = weak_error.run_distributional_rate(rcfg)
        reports.append(("distributional", coupled))
        reports.append(("distributional_control", control))
    else:
        beta = float(args.beta if args.beta is not None
                     else section.get("beta", 0.1))
        thetas = tuple(float(t) for t in section.get("thetas", [0.5]))
        m_ladder = tuple(float(m) for m in section.get("m_ladder", [4, 8, 16, 32]))
        rcfg = weak_error.StabilityProbeConfig(
            alpha=alpha, beta=beta, thetas=thetas, m_ladder=m_ladder, N=N,
            seed=seed, n_fine=int(section.get("n_fine", 1024)),
            levels=int(section.get("levels", 10)),
            field_seed=int(section.get("field_seed", 1)),
            pair_factor=float(section.get("pair_factor", 4.0)),
            threads=threads, T=float(section.get("T", 1.0)),
        )
        reports.append(("stability", weak_error.run_stability_probe(rcfg)))
    run = RunDirectory(_output_root(args, cfg), f"rate {experiment}", cfg, seed)
    for name, rep in reports:
        run.write_text(f"{name}.json", rep.to_json() + "\n")
        run.write_text(f"{name}.csv", rep.to_csv())
        lo, hi = rep.slope_ci
        print(f"{name}: slope {rep.slope:.4f} (95% CI [{lo:.4f}, {hi:.4f}])")
    run.finish()
    return 0


def cmd_replay(args, cfg) -> int:
    manifest_path = Path(args.manifest)
    stored = json.loads(manifest_path.read_text())
    command = stored["command"].split()
    config = stored["config"]
    seed = stored["global_seed"]
    tmp_cfg = manifest_path.parent / "replay-config.json"
    tmp_cfg.write_text(json.dumps(config, indent=2, sort_keys=True))
    argv = command + ["--config", str(tmp_cfg), "--seed", str(seed)]
    if args.threads:
        argv += ["--threads", str(args.threads)]
    root = manifest_path.parent / "replay-out"
    os.environ[ENV_OUTPUT_ROOT] = str(root)
    try:
        code = dispatch(argv)
    finally:
        os.environ.pop(ENV_OUTPUT_ROOT, None)
        tmp_cfg.unlink(missing_ok=True)
    if code != 0:
        return code
    new_manifests = sorted(root.glob("*/manifest.json"))
    if not new_manifests:
        print("replay produced no manifest", file=sys.stderr)
        return 1
    redone = json.loads(new_manifests[-1].read_text())
    if redone["outputs"] != stored["outputs"]:
        print("replay mismatch:", file=sys.stderr)
        for rel, digest in stored["outputs"].items():
            other = redone["outputs"].get(rel)
            if other != digest:
                print(f"  {rel}: {digest[:12]} != {str(other)[:12]}",
                      file=sys.stderr)
        return 1
    print(f"replay verified: {len(stored['outputs'])} outputs byte-identical")
    return 0


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stablesde",
        description="Stable-noise SDE experiments: sampling, dyadic analysis, "
                    "Euler ensembles, weak-rate fits.",
        epilog="Rate CSV columns: n,error,stderr,excluded. Heat-kernel CSV "
               "columns: quantity,parameter,t,value.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="global seed (overrides config)")
        p.add_argument("--threads", type=int, default=0,
                       help="worker thread cap (overrides config)")
        p.add_argument("--output-root", help="directory for run outputs")

    p = sub.add_parser("validate", help="run the invariant suites")
    p.add_argument("--quick", action="store_true",
                   help="exactness tier only (fast)")
    common(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("sample", help="draw terminal noise samples")
    common(p)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("besov", help="dyadic norm report for a drift field")
    common(p)
    p.set_defaults(fn=cmd_besov)

    p = sub.add_parser("heatkernel", help="density sweeps to CSV")
    common(p)
    p.set_defaults(fn=cmd_heatkernel)

    p = sub.add_parser("euler", help="simulate one ensemble to a law file")
    common(p)
    p.set_defaults(fn=cmd_euler)

    p = sub.add_parser("rate", help="weak-rate experiments")
    p.add_argument("experiment", nargs="?",
                   choices=["bounded", "distributional", "stability"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", help="coupling exponent, or 'auto' for 1/alpha")
    p.add_argument("--ladder", type=lambda s: [int(x) for x in s.split(",")])
    p.add_argument("--N", type=int)
    common(p)
    p.set_defaults(fn=cmd_rate)

    p = sub.add_parser("replay", help="re-run a manifest and verify bytes")
    p.add_argument("manifest")
    common(p)
    p.set_defaults(fn=cmd_replay)
    return parser


def dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        cfg = load_config(args.config)
        if args.command == "rate" and not args.experiment:
            args.experiment = cfg.get("rate", {}).get("experiment")
        return args.fn(args, cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (KeyError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc!r}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
