"""Command-line front end: simulate | ulam | verify | figure.

Every command is deterministic given its configuration and seed; data files
(histogram, operator and invariant CSVs) are byte-identical across re-runs
and across thread counts.  Configuration comes from an optional flat
``key = value`` file, with any command-line flag taking precedence.

Exit codes: 0 success / all checks pass, 1 check failure or nonconvergence,
2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import beta_invariant_density
from .ensemble import (
    DiscreteWeighted,
    InitialLaw,
    TruncatedExponential,
    TruncatedGamma,
    TruncatedNormal,
    TruncatedStudentT,
    Uniform01,
    initial_law_catalog,
    run,
    sample_initial,
    SeedPolicy,
)
from .kernel import ParameterLaw, PiecewiseConstant, TwoPoint, UniformInterval
from .measure import EmpiricalMeasure
from .ulam import PowerIterationError, build_ulam, invariant_vector, save_operator_csv
from . import verify as verify_mod

__all__ = ["main", "parse_parameter_law", "parse_initial_law", "load_config"]

# Fixed fallback for the reproduction commands (verify, figure); simulate
# demands an explicit seed so experiment provenance is never implicit.
DEFAULT_SEED = 83

FIGURE_IDS = ("betadist", "determinist_density", "dists", "enddist", "nar", "evol")
VERIFY_SUITES = ("minorization", "reachability", "recurrence", "two-map", "convergence", "all")


class ConfigurationError(ValueError):
    pass


def _parse_args_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def parse_parameter_law(text: str) -> ParameterLaw:
    """Parse a parameter-law spec such as ``uniform(3.87,4)``.

    Accepted forms: ``uniform(a,b)``, ``twopoint(alpha,beta[,weight])``,
    ``pointmass(value)``, ``piecewise(b0,b1,...;d0,d1,...)``.
    """
    text = text.strip()
    m = re.fullmatch(r"(\w+)\((.*)\)", text)
    if not m:
        raise ConfigurationError(f"cannot parse parameter law {text!r}")
    name, body = m.group(1).lower(), m.group(2)
    try:
        if name == "uniform":
            a, b = _parse_args_list(body)
            return UniformInterval(a, b)
        if name == "twopoint":
            args = _parse_args_list(body)
            if len(args) == 2:
                return TwoPoint(args[0], args[1])
            alpha, beta, weight = args
            return TwoPoint(alpha, beta, weight)
        if name == "pointmass":
            (value,) = _parse_args_list(body)
            return TwoPoint(value, value, 1.0)
        if name == "piecewise":
            breaks_text, dens_text = body.split(";")
            return PiecewiseConstant(
                tuple(_parse_args_list(breaks_text)), tuple(_parse_args_list(dens_text))
            )
    except ConfigurationError:
        raise
    except ValueError as exc:
        raise ConfigurationError(f"bad parameter law {text!r}: {exc}") from exc
    raise ConfigurationError(f"unknown parameter law {name!r}")


def parse_initial_law(text: str) -> InitialLaw:
    """Parse an initial-law spec such as ``exponential(1.25)`` or ``uniform``."""
    text = text.strip()
    if text.lower() == "uniform":
        return Uniform01()
    m = re.fullmatch(r"([\w-]+)\((.*)\)", text)
    if not m:
        raise ConfigurationError(f"cannot parse initial law {text!r}")
    name, body = m.group(1).lower(), m.group(2)
    try:
        if name == "exponential":
            (rate,) = _parse_args_list(body)
            return TruncatedExponential(rate)
        if name == "gamma":
            shape, scale = _parse_args_list(body)
            return TruncatedGamma(shape, scale)
        if name == "normal":
            mean, sd = _parse_args_list(body)
            return TruncatedNormal(mean, sd)
        if name in ("student_t", "student-t", "t"):
            (dof,) = _parse_args_list(body)
            return TruncatedStudentT(dof)
        if name == "point":
            (value,) = _parse_args_list(body)
            return DiscreteWeighted((value,), (1.0,))
        if name == "discrete":
            support, weights = [], []
            for pair in body.split(","):
                v, w = pair.split(":")
                support.append(float(v))
                weights.append(float(w))
            return DiscreteWeighted(tuple(support), tuple(weights))
    except ConfigurationError:
        raise
    except ValueError as exc:
        raise ConfigurationError(f"bad initial law {text!r}: {exc}") from exc
    raise ConfigurationError(f"unknown initial law {name!r}")


def load_config(path) -> dict[str, str]:
    """Read a flat ``key = value`` file; ``#`` starts a comment line."""
    out: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"config line without '=': {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().lower()] = value.strip()
    return out


@dataclass
class ExperimentConfig:
    """Resolved settings for a simulation run."""

    lambda_law: ParameterLaw
    initial_law: InitialLaw
    particles: int
    steps: int
    snapshot_steps: tuple[int, ...]
    bins: int
    seed: int
    out_dir: Path
    threads: int

    def header(self) -> dict:
        """Provenance header for output files.

        Execution-only settings (threads, output directory) are deliberately
        excluded so identical experiments produce identical files.
        """
        return {
            "lambda_law": self.lambda_law.describe(),
            "initial_law": self.initial_law.describe(),
            "particles": self.particles,
            "steps": self.steps,
            "bins": self.bins,
            "seed": self.seed,
        }


def _setting(args, config: dict, key: str, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _resolve_lambda_law(args, config) -> ParameterLaw:
    lmin = _setting(args, config, "lambda_min")
    lmax = _setting(args, config, "lambda_max")
    if lmin is not None or lmax is not None:
        if lmin is None or lmax is None:
            raise ConfigurationError("lambda_min and lambda_max must be given together")
        return UniformInterval(float(lmin), float(lmax))
    text = _setting(args, config, "lambda_law", "uniform(3.87,4)")
    return parse_parameter_law(str(text))


def _build_experiment_config(args, require_seed: bool) -> ExperimentConfig:
    config = load_config(args.config) if args.config else {}
    seed = _setting(args, config, "seed")
    if seed is None:
        if require_seed:
            raise ConfigurationError("a seed is required (flag --seed or config key 'seed')")
        seed = DEFAULT_SEED
    snapshots_text = _setting(args, config, "snapshots", "")
    steps = int(_setting(args, config, "steps", 20))
    if isinstance(snapshots_text, str) and snapshots_text:
        snapshot_steps = tuple(int(tok) for tok in snapshots_text.split(",") if tok.strip())
    else:
        snapshot_steps = (steps,)
    try:
        initial_law = parse_initial_law(str(_setting(args, config, "initial_law", "uniform")))
        return ExperimentConfig(
            lambda_law=_resolve_lambda_law(args, config),
            initial_law=initial_law,
            particles=int(_setting(args, config, "particles", 100_000)),
            steps=steps,
            snapshot_steps=snapshot_steps,
            bins=int(_setting(args, config, "bins", 100)),
            seed=int(seed),
            out_dir=Path(_setting(args, config, "out", ".")),
            threads=int(_setting(args, config, "threads", 1)),
        )
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from exc


def _write_measure(measure: EmpiricalMeasure, path: Path, header: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    measure.to_csv(path, header=header)


def cmd_simulate(args) -> int:
    cfg = _build_experiment_config(args, require_seed=True)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    ensemble = sample_initial(cfg.initial_law, cfg.particles, SeedPolicy(cfg.seed))
    ensemble, snapshots = run(
        ensemble,
        cfg.lambda_law,
        cfg.steps,
        snapshot_at=cfg.snapshot_steps,
        n_bins=cfg.bins,
        threads=cfg.threads,
    )
    elapsed = time.perf_counter() - t0
    files = {}
    for step, hist in sorted(snapshots.items()):
        path = cfg.out_dir / f"hist_step{step:04d}.csv"
        _write_measure(hist, path, {**cfg.header(), "snapshot_step": step})
        files[str(step)] = path.name
    summary = {
        "config": cfg.header(),
        "snapshot_files": files,
        "clamped_particles": ensemble.clamp_count,
        "timing_seconds": elapsed,
    }
    (cfg.out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(files)} snapshot(s) to {cfg.out_dir}")
    return 0


def cmd_ulam(args) -> int:
    config = load_config(args.config) if args.config else {}
    try:
        law = _resolve_lambda_law(args, config)
        bins = int(_setting(args, config, "bins", 1024))
        nodes = int(_setting(args, config, "nodes_per_bin", 5))
        tol = float(_setting(args, config, "tol", 1e-12))
        out_dir = Path(_setting(args, config, "out", "."))
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from exc
    out_dir.mkdir(parents=True, exist_ok=True)
    op = build_ulam(law, bins, nodes)
    try:
        inv = invariant_vector(op, tol=tol)
    except PowerIterationError as exc:
        print(f"power iteration failed: {exc}", file=sys.stderr)
        return 1
    save_operator_csv(op, out_dir / "operator.csv")
    header = {"lambda_law": law.describe(), "bins": bins, "nodes_per_bin": nodes, "tol": tol}
    _write_measure(inv.to_measure(), out_dir / "invariant.csv", header)
    print(f"residual {inv.residual:.3e} after {inv.iterations} iterations")
    return 0


def _verify_suite(args) -> list[tuple[str, verify_mod.VerificationReport]]:
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    selected = args.suite
    reports: list[tuple[str, verify_mod.VerificationReport]] = []

    def want(name: str) -> bool:
        return selected in (name, "all")

    if want("minorization"):
        reports.append(("minorization", verify_mod.minorization_check(seed=seed)))
    if want("reachability"):
        # 20 scattered starts, 20 seeded targets of length >= 0.001, 50 steps.
        rng = np.random.default_rng(seed)
        targets = []
        for _ in range(20):
            length = rng.uniform(0.001, 0.005)
            lo = rng.uniform(0.02, 0.98 - length)
            targets.append(verify_mod.IntervalSet.single(lo, lo + length))
        starts = np.linspace(0.01, 0.99, 20)
        law = UniformInterval(3.87, 4.0)
        worst = 1.0
        t0 = time.perf_counter()
        fractions = []
        for i, x0 in enumerate(starts):
            policy = SeedPolicy(seed).spawn(1000 + i)
            fr = verify_mod._multi_target_hit_fractions(float(x0), targets, law, 50, 10_000, policy)
            fractions.append(fr.tolist())
            worst = min(worst, float(fr.min()))
        report = verify_mod.VerificationReport(
            claim="every open target is reached from scattered starts within 50 steps",
            passed=worst > 0.0,
            worst=worst,
            threshold=0.0,
            runtime_seconds=time.perf_counter() - t0,
            details={
                "starts": starts.tolist(),
                "targets": [list(t.intervals) for t in targets],
                "n_paths": 10_000,
                "hit_fractions": fractions,
                "seed": seed,
            },
        )
        reports.append(("reachability", report))
    if want("recurrence"):
        reports.append(("recurrence", verify_mod.recurrence_stats(seed=seed)))
    if want("two-map"):
        reports.append(("two-map", verify_mod.two_map_support_check(2.7, 3.0, seed=seed)))
    if want("convergence"):
        reports.append(("convergence", verify_mod.convergence_matrix(seed=seed)))
    return reports


def cmd_verify(args) -> int:
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = _verify_suite(args)
    all_pass = True
    for name, report in reports:
        report.write_json(out_dir / f"verify_{name.replace('-', '_')}.json")
        status = "PASS" if report.passed else "FAIL"
        print(f"{status} {name}: worst {report.worst:.6g} vs threshold {report.threshold:.6g}")
        all_pass &= report.passed
    return 0 if all_pass else 1


def _figure_seed_policy(seed: int, salt: int) -> SeedPolicy:
    return SeedPolicy(seed).spawn(salt)


def _figure_hist(
    initial: InitialLaw,
    law: ParameterLaw,
    steps: int,
    policy: SeedPolicy,
    bins: int = 100,
    particles: int = 100_000,
    snapshot_steps=None,
):
    e = sample_initial(initial, particles, policy)
    wanted = tuple(snapshot_steps) if snapshot_steps else (steps,)
    _, snapshots = run(e, law, steps, snapshot_at=wanted, n_bins=bins)
    return snapshots


def cmd_figure(args) -> int:
    if args.figure not in FIGURE_IDS:
        print(f"unknown figure id {args.figure!r}; valid ids: {', '.join(FIGURE_IDS)}", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    base_header = {"figure": args.figure, "seed": seed}
    fig = args.figure

    if fig == "betadist":
        # Deterministic lam = 4 run from uniform starts, with the analytic curve.
        law = TwoPoint(4.0, 4.0, 1.0)
        snaps = _figure_hist(Uniform01(), law, 20, _figure_seed_policy(seed, 1))
        snaps[20].to_csv(out_dir / "betadist_hist.csv", {**base_header, "lambda_law": law.describe()})
        xs = (np.arange(1000) + 0.5) / 1000.0
        curve = beta_invariant_density(xs)
        lines = [f"# figure: betadist", f"# seed: {seed}", "x,density"]
        lines += [f"{x!r},{d!r}" for x, d in zip(xs, curve)]
        (out_dir / "betadist_curve.csv").write_text("\n".join(lines) + "\n")
    elif fig == "determinist_density":
        for salt, lam in enumerate((3.87, 3.935), start=1):
            law = TwoPoint(lam, lam, 1.0)
            snaps = _figure_hist(Uniform01(), law, 20, _figure_seed_policy(seed, salt))
            snaps[20].to_csv(
                out_dir / f"determinist_density_lam{lam:g}.csv",
                {**base_header, "lambda_law": law.describe()},
            )
    elif fig == "dists":
        catalog = initial_law_catalog()
        for salt, name in enumerate(("discrete-5pt", "uniform", "exponential"), start=1):
            initial = catalog[name]
            policy = _figure_seed_policy(seed, salt)
            e = sample_initial(initial, 100_000, policy)
            from .measure import histogram

            histogram(e, 100).to_csv(
                out_dir / f"dists_{name}.csv", {**base_header, "initial_law": initial.describe()}
            )
    elif fig == "enddist":
        law = UniformInterval(3.87, 4.0)
        snaps = _figure_hist(TruncatedExponential(1.25), law, 20, _figure_seed_policy(seed, 1))
        snaps[20].to_csv(
            out_dir / "enddist.csv",
            {**base_header, "lambda_law": law.describe(), "initial_law": "exponential(1.25)"},
        )
    elif fig == "nar":
        for salt, upper in enumerate((3.9, 3.935), start=1):
            law = UniformInterval(3.87, upper)
            snaps = _figure_hist(Uniform01(), law, 20, _figure_seed_policy(seed, salt))
            snaps[20].to_csv(
                out_dir / f"nar_upper{upper:g}.csv", {**base_header, "lambda_law": law.describe()}
            )
    elif fig == "evol":
        law = UniformInterval(3.87, 4.0)
        snaps = _figure_hist(
            Uniform01(), law, 200, _figure_seed_policy(seed, 1), snapshot_steps=(1, 5, 20, 200)
        )
        for step, hist in sorted(snaps.items()):
            hist.to_csv(
                out_dir / f"evol_step{step:03d}.csv",
                {**base_header, "lambda_law": law.describe(), "snapshot_step": step},
            )
    print(f"wrote figure data for {fig!r} to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randlogistic",
        description="Simulate the random logistic map and verify its invariant distribution.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_experiment=True):
        p.add_argument("--config", type=str, default=None, help="flat key=value config file")
        p.add_argument("--seed", type=int, default=None, help="64-bit master seed")
        p.add_argument("--out", type=str, default=None, help="output directory")
        if with_experiment:
            p.add_argument("--lambda-min", dest="lambda_min", type=float, default=None)
            p.add_argument("--lambda-max", dest="lambda_max", type=float, default=None)
            p.add_argument("--lambda-law", dest="lambda_law", type=str, default=None)
            p.add_argument("--bins", type=int, default=None)

    p_sim = sub.add_parser("simulate", help="run a particle ensemble and write histograms")
    add_common(p_sim)
    p_sim.add_argument("--initial-law", dest="initial_law", type=str, default=None)
    p_sim.add_argument("--particles", type=int, default=None)
    p_sim.add_argument("--steps", type=int, default=None)
    p_sim.add_argument("--snapshots", type=str, default=None, help="comma-separated steps")
    p_sim.add_argument("--threads", type=int, default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_ulam = sub.add_parser("ulam", help="build the transfer matrix and its invariant vector")
    add_common(p_ulam)
    p_ulam.add_argument("--nodes-per-bin", dest="nodes_per_bin", type=int, default=None)
    p_ulam.add_argument("--tol", type=float, default=None)
    p_ulam.set_defaults(func=cmd_ulam)

    p_verify = sub.add_parser("verify", help="run the numerical verification suite")
    p_verify.add_argument("suite", choices=VERIFY_SUITES)
    add_common(p_verify, with_experiment=False)
    p_verify.set_defaults(func=cmd_verify)

    p_fig = sub.add_parser("figure", help="emit the data series behind a named figure")
    p_fig.add_argument("figure", type=str)
    add_common(p_fig, with_experiment=False)
    p_fig.set_defaults(func=cmd_figure)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
