"""Command-line harness.

    eventum validate --scenario cat
    eventum compare config.json --steps 3 --horizon 3
    eventum sample --scenario cat --steps 1 --samples 100000 --seed 42

Exit status: 0 when every check passes, 1 when a residual exceeds its
tolerance, 2 when the configuration cannot be parsed or built.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .codec import encode_vector
from .config import ConfigError, RunConfig, load_config
from .dilation import DilationError, canonical_dilation, reversed_family, verify_dilation
from .filtering import GENERATOR, prior_distribution, sample_trajectories
from .linalg import PAULI_X, global_phase_distance
from .reduction import ZeroProbabilityError, validate_completeness
from .scenarios import ScenarioError
from .strings import (
    DimensionCapError,
    HorizonError,
    check_algebra_invariance,
    check_shift_reversal,
    check_step_structure,
    conditioned_states,
    decomposable_operator,
    default_generators,
    joint_outcome_distribution,
    nondemolition_grid,
    past,
    reflect_and_reverse,
    unitarity,
)

COMMANDS = ("validate", "simulate", "filter", "compare", "sample")


class Checks:
    """Collects named residuals and their pass/fail status."""

    def __init__(self):
        self.items: list[dict] = []

    def add(self, name: str, value: float, tol: float) -> bool:
        ok = value <= tol
        self.items.append({"name": name, "value": float(value), "tolerance": float(tol), "passed": bool(ok)})
        return ok

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.items)

    def failures(self) -> list[dict]:
        return [c for c in self.items if not c["passed"]]


def _header(cfg: RunConfig, command: str) -> dict:
    return {
        "tool": "eventum",
        "version": __version__,
        "command": command,
        "config_hash": cfg.hash(),
        "config": cfg.canonical(),
        "seed": cfg.seed,
        "generator": GENERATOR,
        "tolerances": cfg.all_tolerances(),
    }


def _seq(seq) -> str:
    return " ".join(str(y) for y in seq)


def cmd_validate(cfg: RunConfig, report: dict, checks: Checks) -> None:
    sc = cfg.build()
    fam = sc.family
    report["completeness"] = validate_completeness(fam)
    checks.add("completeness", report["completeness"], cfg.tol("completeness"))
    if not checks.passed:
        report["dilation"] = None
        return
    try:
        dil = canonical_dilation(fam, sc.E)
    except DilationError as exc:
        report["dilation"] = {"error": str(exc)}
        return
    rep = verify_dilation(dil, fam)
    report["dilation"] = rep.__dict__.copy()
    checks.add("unitarity", rep.unitarity, cfg.tol("unitarity"))
    checks.add("co_unitarity", rep.co_unitarity, cfg.tol("unitarity"))
    checks.add("vacuum_block", rep.vacuum_block, cfg.tol("vacuum"))
    checks.add("extraction", rep.extraction, cfg.tol("extraction"))
    rev = reversed_family(dil, fam.weights)
    report["reversed_completeness"] = validate_completeness(rev)
    checks.add("reversed_completeness", report["reversed_completeness"], cfg.tol("completeness"))


def _model(cfg: RunConfig):
    sc = cfg.build()
    steps = cfg.steps or sc.steps
    horizon = max(cfg.horizon or sc.horizon, steps)
    return sc, sc.string_model(horizon), steps


def cmd_simulate(cfg: RunConfig, report: dict, checks: Checks) -> None:
    sc, model, steps = _model(cfg)
    u1, u2 = unitarity(model)
    checks.add("step_unitarity", max(u1, u2), cfg.tol("unitarity"))
    dist = joint_outcome_distribution(model, sc.psi, steps)
    vacuum = sum(v for k, v in dist.items() if 0 in k)
    checks.add("vacuum_mass", vacuum, cfg.tol("vacuum"))
    report.update(
        steps=steps,
        horizon=model.horizon,
        dimension=model.dim,
        total_mass=dist.total(),
        vacuum_mass=vacuum,
        distribution=dist.restricted(lambda k: 0 not in k).to_records(),
    )


def _filter_table(cfg: RunConfig):
    sc = cfg.build()
    steps = cfg.steps or sc.steps
    dist, trajs = prior_distribution(sc.family, sc.psi, steps, with_trajectories=True)
    return sc, steps, dist, trajs


def cmd_filter(cfg: RunConfig, report: dict, checks: Checks) -> None:
    sc, steps, dist, trajs = _filter_table(cfg)
    report.update(
        steps=steps,
        total_mass=dist.total(),
        pruned_mass=dist.pruned_mass,
        distribution=dist.to_records(),
        posteriors=[{"sequence": list(tr.outcomes), "posterior": encode_vector(tr.posterior)} for tr in trajs],
    )


def filter_csv(cfg: RunConfig) -> str:
    sc, steps, dist, trajs = _filter_table(cfg)
    buf = io.StringIO()
    writer = csv.writer(buf)  # RFC 4180: minimal quoting, CRLF line ends
    header = ["sequence", "probability"]
    for k in range(sc.system_dim):
        header += [f"posterior_re_{k}", f"posterior_im_{k}"]
    writer.writerow(header)
    for tr in trajs:
        row = [_seq(tr.outcomes), f"{tr.weight:.17g}"]
        for z in tr.posterior:
            row += [f"{z.real:.17g}", f"{z.imag:.17g}"]
        writer.writerow(row)
    return buf.getvalue()


def _pointer_flip(p: int) -> np.ndarray:
    x = np.eye(p, dtype=complex)
    x[:2, :2] = PAULI_X
    return x


def cmd_compare(cfg: RunConfig, report: dict, checks: Checks) -> None:
    sc, model, steps = _model(cfg)
    fam, psi = sc.family, sc.psi
    joint = joint_outcome_distribution(model, psi, steps)
    prior, trajs = prior_distribution(fam, psi, steps, with_trajectories=True)
    vacuum = sum(v for k, v in joint.items() if 0 in k)
    tv = joint.restricted(lambda k: 0 not in k).tv_distance(prior)
    checks.add("vacuum_mass", vacuum, cfg.tol("vacuum"))
    checks.add("tv_distance", tv, cfg.tol("tv"))

    states = conditioned_states(model, psi, steps)
    fidelities = []
    for tr in trajs:
        if tr.weight <= 1e-10:
            continue
        if tr.outcomes not in states:
            dist = 1.0
        else:
            dist = global_phase_distance(states[tr.outcomes][0], tr.posterior)
        fidelities.append({"sequence": list(tr.outcomes), "one_minus_overlap": dist})
    checks.add("posterior_mismatch", max((f["one_minus_overlap"] for f in fidelities), default=0.0), cfg.tol("fidelity"))

    grid = nondemolition_grid(model, steps)
    checks.add("nondemolition", grid.max_residual, cfg.tol("nondemolition"))

    shifts = []
    for j in range(model.horizon):
        for t in range(model.horizon - j):
            shifts.append({"site": f"-{j}", "t": t, "residual": check_shift_reversal(model, t, past(j))})
    checks.add("shift_reversal", max(s["residual"] for s in shifts), cfg.tol("shift_reversal"))

    gens = default_generators(model)
    flip = decomposable_operator(model, future_ops={0: _pointer_flip(model.pointer_dim)})
    forward = check_algebra_invariance(model, gens)
    flipped = check_algebra_invariance(model, [flip])
    # +0 is the recycled tail when horizon == 1, so the flip is no valid generator there
    forward_residual = max(forward.forward_residual, flipped.forward_residual if model.horizon > 1 else 0.0)
    checks.add("algebra_forward", forward_residual, cfg.tol("algebra"))

    refl = reflect_and_reverse(model, steps)
    checks.add("reflection", max(refl.__dict__.values()), cfg.tol("reflection"))
    checks.add("step_structure", check_step_structure(model, psi), cfg.tol("vacuum"))

    report.update(
        steps=steps,
        horizon=model.horizon,
        dimension=model.dim,
        tv_distance=tv,
        vacuum_mass=vacuum,
        posterior_fidelities=fidelities,
        nondemolition=[
            {"B": list(name), "t": t, "r": r, "res_BY": by, "res_YY": yy} for name, t, r, by, yy in grid.rows
        ],
        shift_reversal=shifts,
        algebra_invariance={
            "forward_residual": forward_residual,
            "inverse_violation": forward.inverse_violation,
            "future_flip_inverse_violation": flipped.inverse_violation,
        },
        reflection=refl.__dict__.copy(),
    )


def _sample_table(cfg: RunConfig):
    sc = cfg.build()
    steps = cfg.steps or sc.steps
    exact = prior_distribution(sc.family, sc.psi, steps)
    res = sample_trajectories(sc.family, sc.psi, steps, cfg.samples, cfg.seed)
    n = cfg.samples
    rows = []
    keys = sorted(set(exact.masses) | set(res.counts))
    for seq in keys:
        p = exact[seq]
        count = res.counts.get(seq, 0)
        freq = count / n if n else 0.0
        sigma = math.sqrt(p * (1 - p) / n) if n else 0.0
        if sigma > 0:
            z = (freq - p) / sigma
        else:
            z = 0.0 if (freq == p or n == 0) else math.inf
        rows.append({"sequence": list(seq), "count": count, "empirical": freq, "exact": p, "sigma": sigma, "z": z})
    return steps, rows


def cmd_sample(cfg: RunConfig, report: dict, checks: Checks) -> None:
    steps, rows = _sample_table(cfg)
    checks.add("max_abs_z", max((abs(r["z"]) for r in rows), default=0.0), cfg.tol("z_score"))
    report.update(steps=steps, samples=cfg.samples, table=rows)


def sample_csv(cfg: RunConfig) -> str:
    _, rows = _sample_table(cfg)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["sequence", "count", "empirical", "exact", "sigma", "z"])
    for r in rows:
        writer.writerow(
            [_seq(r["sequence"]), r["count"]] + [f"{r[k]:.17g}" for k in ("empirical", "exact", "sigma", "z")]
        )
    return buf.getvalue()


HANDLERS = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "filter": cmd_filter,
    "compare": cmd_compare,
    "sample": cmd_sample,
}
CSV_WRITERS = {"filter": filter_csv, "sample": sample_csv}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eventum", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"eventum {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config_path", nargs="?", metavar="CONFIG", help="JSON run configuration")
        p.add_argument("--config", dest="config_flag", metavar="PATH")
        p.add_argument("--scenario")
        p.add_argument("--steps", type=int)
        p.add_argument("--horizon", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--tol", type=float, help="override every residual tolerance")
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--format", choices=("json", "csv"))
    return parser


def _resolve_config(args) -> RunConfig:
    path = args.config_flag or args.config_path
    if path:
        cfg = load_config(path)
    elif args.scenario:
        cfg = RunConfig(scenario=args.scenario)
    else:
        raise ConfigError("give a config file or --scenario")
    return cfg.with_overrides(
        scenario=args.scenario if path else None,
        steps=args.steps,
        horizon=args.horizon,
        samples=args.samples,
        seed=args.seed,
        tol=args.tol,
        output=args.out,
        format=args.format,
    )


def run_command(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        if cfg.format == "csv" and args.command not in CSV_WRITERS:
            raise ConfigError(f"csv output is not available for '{args.command}'")
        report = _header(cfg, args.command)
        checks = Checks()
        HANDLERS[args.command](cfg, report, checks)
        text = CSV_WRITERS[args.command](cfg) if cfg.format == "csv" else None
    except (ConfigError, ScenarioError, ZeroProbabilityError, HorizonError, DimensionCapError, DilationError) as exc:
        print(f"eventum: error: {exc}", file=stderr)
        return 2
    report["checks"] = checks.items
    report["passed"] = checks.passed
    if text is None:
        text = json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    for c in checks.failures():
        print(f"FAIL {c['name']}: residual {c['value']:.3e} exceeds tolerance {c['tolerance']:.1e}", file=stderr)
    return 0 if checks.passed else 1


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
