"""Command-line front end: sweeps, bound tables, minimax brackets, mixtures, comparisons, verification.

Settings come from defaults, then a JSON ``--config`` document (a run
manifest written by an earlier run also works), then flags. Exit codes: 0 ok,
1 failed verification, 2 invalid configuration, 3 enumeration budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .bounds import BoundDomainError, bound_reports, mixture_bounds
from .budgets import parse_budget
from .core import FamilyError, GridSpec, materialize_family, parse_family
from .exact import (
    DEFAULT_NODE_CAP,
    EnumerationBudgetError,
    family_bayes_lower_bound,
    mc_expected_excess_risk,
    ssl_vs_sl_ratio,
    sup_over_family,
    superlinear_budget_check,
)
from .learners import make_learner
from .mixture import (
    THRESHOLD_SWEEP,
    FiniteComponent,
    MixtureProblem,
    ThresholdComponent,
    ThresholdProblem,
    mixture_split_terms,
    mixture_sup,
)
from .parallel import default_jobs
from .rates import FitError, fit_rate
from .report import BASE_COLUMNS, build_manifest, manifest_hash, write_csv, write_manifest

EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    seed: int = 0
    ell_grid: list = field(default_factory=lambda: [4, 8, 16, 32, 64])
    budget: str = "zero"
    family: str = "pi1"
    learners: list = field(default_factory=lambda: ["majority"])
    output_dir: str = "results"
    node_cap: int = DEFAULT_NODE_CAP
    n_alpha: int = 40
    n_beta: int = 40
    mc_reps: int = 0

    def validate(self) -> "RunConfig":
        if not self.learners:
            raise ConfigError("no learners given")
        for name in self.learners:
            make_learner(name)
        ells = [int(e) for e in self.ell_grid]
        if not ells or any(e < 0 for e in ells) or any(b <= a for a, b in zip(ells, ells[1:])):
            raise ConfigError(f"ell grid must be nonempty, nonnegative and strictly increasing: {self.ell_grid}")
        self.ell_grid = ells
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        parse_budget(self.budget)
        parse_family(self.family)
        if self.node_cap < 1 or self.n_alpha < 1 or self.n_beta < 1 or self.mc_reps < 0:
            raise ConfigError("node_cap, n_alpha, n_beta must be positive and mc_reps nonnegative")
        return self

    @property
    def grid(self) -> GridSpec:
        return GridSpec(n_alpha=self.n_alpha, n_beta=self.n_beta)

    def manifest_config(self) -> dict:
        """Settings that determine the output (the output directory and worker count do not)."""
        d = asdict(self)
        d.pop("output_dir")
        return d


def parse_ell_grid(text: str) -> list[int]:
    """``4,8,16``; ``4..64`` (every integer); ``pow2:4..64`` (powers of two)."""
    text = text.strip()
    pow2 = text.startswith("pow2:")
    if pow2:
        text = text[5:]
    if ".." in text:
        lo, hi = (int(x) for x in text.split(".."))
        if pow2:
            return [2**k for k in range(64) if lo <= 2**k <= hi]
        return list(range(lo, hi + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def load_config(args) -> RunConfig:
    data = {}
    if args.config:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if "config" in data and "command" in data:
            data = data["config"]
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig(**data)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.ell is not None:
        cfg.ell_grid = parse_ell_grid(args.ell)
    if args.budget is not None:
        cfg.budget = args.budget
    if args.family is not None:
        cfg.family = args.family
    if args.learner is not None:
        cfg.learners = [n for item in args.learner for n in item.split(",") if n.strip()]
    if args.out is not None:
        cfg.output_dir = args.out
    if args.node_cap is not None:
        cfg.node_cap = args.node_cap
    for key in ("n_alpha", "n_beta"):
        if getattr(args, key, None) is not None:
            setattr(cfg, key, getattr(args, key))
    if getattr(args, "mc_reps", None) is not None:
        cfg.mc_reps = args.mc_reps
    return cfg.validate()


def _finish(command, cfg, rows, columns, name, echo):
    manifest = build_manifest(command, cfg.manifest_config())
    mh = manifest_hash(manifest)
    out = Path(cfg.output_dir)
    csv_path = write_csv(out / f"{name}.csv", rows, columns, mh)
    write_manifest(out / f"{name}.manifest.json", manifest)
    echo(f"wrote {csv_path} ({len(rows)} rows, manifest {mh})")
    return csv_path


def _slope_so_far(points):
    try:
        return fit_rate(points).fitted_slope
    except FitError:
        return None


def _worst_fields(dist):
    p = dist.params
    return {"alpha": getattr(p, "alpha", None), "beta": getattr(p, "beta", None), "sign": getattr(p, "sign", None)}


# -- subcommands ----------------------------------------------------------------------


def cmd_sweep(cfg: RunConfig, jobs: int, echo=print) -> int:
    family = parse_family(cfg.family)
    budget = parse_budget(cfg.budget)
    rows = []
    for learner_name in cfg.learners:
        learner = make_learner(learner_name, family.hclass)
        pts = []
        for ell in cfg.ell_grid:
            u = budget(ell)
            sup = sup_over_family(learner, family.at(ell), ell, u, cfg.grid, cfg.node_cap, jobs)
            low = family_bayes_lower_bound(family, ell, u, cfg.grid, cfg.node_cap, jobs)
            pts.append((ell, sup.worst_risk))
            row = {"family": family.at(ell).label, "learner": learner.name, "ell": ell, "u": u,
                   "risk": sup.worst_risk, "lower_bound": low.bound, "bound_name": "pairwise_bayes_test",
                   **_worst_fields(sup.worst_member), "fitted_slope": _slope_so_far(pts)}
            if cfg.mc_reps:
                seed = np.random.SeedSequence([cfg.seed, len(rows)])
                est, hw = mc_expected_excess_risk(learner, sup.worst_member, ell, u, cfg.mc_reps, seed)
                row.update(mc_risk=est, mc_half_width=hw)
            rows.append(row)
        slope = _slope_so_far(pts)
        echo(f"{learner.name} on {family.label} with budget {budget.label}: "
             f"fitted slope {slope if slope is None else round(slope, 4)}")
    _finish("sweep", cfg, rows, BASE_COLUMNS, "sweep", echo)
    return 0


def cmd_minimax(cfg: RunConfig, jobs: int, echo=print) -> int:
    """Bracket the minimax risk: best learner in the menu above, pairwise Bayes test below."""
    family = parse_family(cfg.family)
    budget = parse_budget(cfg.budget)
    learners = [make_learner(n, family.hclass) for n in cfg.learners]
    oracles = [lr.name for lr in learners if lr.uses_marginal]
    if oracles:
        raise ConfigError(f"{', '.join(oracles)} is told the marginal and cannot bound the minimax risk")
    rows, upper_pts, lower_pts = [], [], []
    for ell in cfg.ell_grid:
        u = budget(ell)
        sups = [(sup_over_family(lr, family.at(ell), ell, u, cfg.grid, cfg.node_cap, jobs).worst_risk, lr.name)
                for lr in learners]
        upper, best = min(sups)
        low = family_bayes_lower_bound(family, ell, u, cfg.grid, cfg.node_cap, jobs).bound
        upper_pts.append((ell, upper))
        if low > 0:
            lower_pts.append((ell, low))
        rows.append({"family": family.at(ell).label, "learner": best, "ell": ell, "u": u, "risk": upper,
                     "lower_bound": low, "bound_name": "pairwise_bayes_test",
                     "gap_ratio": upper / low if low > 0 else None})
        echo(f"ell={ell:>5} u={u:>10}  {low:.6e} <= minimax <= {upper:.6e}  ({best})")
    echo(f"upper slope {_slope_so_far(upper_pts)}, lower slope {_slope_so_far(lower_pts)}")
    _finish("minimax", cfg, rows, BASE_COLUMNS, "minimax", echo)
    return 0


def cmd_bounds(args, cfg: RunConfig, echo=print) -> int:
    if args.alpha is None and args.c is None:
        raise ConfigError("bounds needs --alpha and --beta, or --c")
    if (args.alpha is None) != (args.beta is None):
        raise ConfigError("--alpha and --beta go together")
    reports = bound_reports(args.alpha, args.beta, args.bound_ell, args.u, args.c, args.c_prime)
    rows = []
    for r in reports:
        echo(f"{r.name:<22} {r.side:<6} {r.value:.10g}")
        rows.append({"bound_name": r.name, "side": r.side, "value": r.value, **r.inputs})
    if args.out is not None:
        _finish("bounds", cfg, rows, ("bound_name", "side", "value"), "bounds", echo)
    return 0


def cmd_mixture(args, cfg: RunConfig, jobs: int, echo=print) -> int:
    """Two-point component (first learner) mixed with thresholds under ERM; worst case over both grids."""
    budget = parse_budget(cfg.budget)
    family = parse_family(cfg.family)
    learner = make_learner(cfg.learners[0], family.hclass)
    comps_b = [ThresholdComponent(ThresholdProblem(t)) for t in THRESHOLD_SWEEP]
    rows, pts, last = [], [], None
    for ell in cfg.ell_grid:
        u = budget(ell)
        g = GridSpec(n_alpha=cfg.n_alpha, n_beta=cfg.n_beta, ell=ell, u=u)
        comps_a = [FiniteComponent(d, learner, cfg.node_cap) for d in materialize_family(family, g)]
        s = mixture_sup(comps_a, comps_b, ell, u)
        row = {"family": f"mixture[{family.at(ell).label}|threshold]", "learner": f"{learner.name}+threshold-erm",
               "ell": ell, "u": u, "risk": s.worst_risk, "part_a": s.part_a, "part_b": s.part_b,
               "worst_a": s.worst_a.name, "worst_b": s.worst_b.name}
        if u >= ell:
            lower, upper = mixture_bounds(s.worst_a.risk, s.worst_b.risk, ell, u)
            row.update(lower_bound=lower, upper_bound=upper, bound_name="mixture_sandwich")
        pts.append((ell, s.worst_risk))
        row["fitted_slope"] = _slope_so_far(pts)
        rows.append(row)
        last = (s, ell, u)
        echo(f"ell={ell:>5} u={u:>12}  risk={s.worst_risk:.6e}  (A {s.part_a:.3e}, B {s.part_b:.3e})")
    path = _finish("mixture", cfg, rows, BASE_COLUMNS, "mixture", echo)
    if args.dump_splits and last is not None:
        s, ell, u = last
        terms = mixture_split_terms(MixtureProblem(s.worst_a, s.worst_b), ell, u)
        split_rows = []
        for t in terms:
            split_rows.append({"component": "A", "ell": ell, "u": u, "split_i": t["split_i"],
                               "split_j": t["split_j"], "weight": t["weight"], "risk": t["risk_a"]})
            split_rows.append({"component": "B", "ell": ell, "u": u, "split_i": ell - t["split_i"],
                               "split_j": u - t["split_j"], "weight": t["weight"], "risk": t["risk_b"]})
        _finish("mixture", cfg, split_rows, ("component", "split_i", "split_j"), path.stem + "_splits", echo)
    return 0


def cmd_compare(args, cfg: RunConfig, jobs: int, echo=print) -> int:
    """SSL sup risk over the SL test bound, per ell, plus the superlinear-budget verdict."""
    family = parse_family(cfg.family)
    budget = parse_budget(cfg.budget)
    names = cfg.learners + (["erm"] if len(cfg.learners) < 2 else [])
    ssl, sl = (make_learner(n, family.hclass) for n in names[:2])
    rep = ssl_vs_sl_ratio(family, ssl, sl, budget, cfg.ell_grid, cfg.grid, cfg.node_cap, jobs)
    rows = []
    for p in rep.points:
        rows.append({"family": family.at(p.ell).label, "learner": ssl.name, "ell": p.ell, "u": p.u,
                     "risk": p.ssl_risk, "lower_bound": p.sl_lower, "bound_name": "pairwise_bayes_test",
                     "sl_learner": sl.name, "sl_risk": p.sl_upper,
                     "ratio": None if p.degenerate else p.ratio, "degenerate": p.degenerate})
        ratio = "degenerate" if p.degenerate else f"{p.ratio:.4e}"
        echo(f"ell={p.ell:>5} u={p.u:>10}  ssl={p.ssl_risk:.4e}  sl_lower={p.sl_lower:.4e}  ratio={ratio}")
    if rep.series is not None:
        echo(f"ratio slope {rep.series.fitted_slope:.4f}")
    v = superlinear_budget_check(args.rate_exponent, budget)
    echo(f"budget {v.budget} against SL rate ell^-{v.rate_exponent:g}: help {v.verdict} "
         f"(tail slope {v.tail_slope:.4g}){'; ' + v.note if v.note else ''}")
    _finish("compare", cfg, rows, BASE_COLUMNS, "compare", echo)
    return 0


def cmd_verify(args, echo=print) -> int:
    from .verify import run_checks

    only = [x for item in (args.only or []) for x in item.split(",") if x]
    results = run_checks(only or None, echo=echo)
    n_ok = sum(r.passed for r in results)
    echo(f"{n_ok}/{len(results)} checks passed")
    return 0 if n_ok == len(results) else EXIT_FAIL


# -- parser ---------------------------------------------------------------------------


def _common(p):
    p.add_argument("--config", help="JSON config or a run manifest")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="worker processes (default: $SSL_RATE_LAB_JOBS or 1)")
    p.add_argument("--ell", help="ell grid: 4,8,16 | 4..64 | pow2:4..64")
    p.add_argument("--budget", help="zero | linear:k | square | quartic | exp:cap")
    p.add_argument("--family", help="pi0 | pi1 | piell | pic:c | rich:c:c_prime")
    p.add_argument("--learner", action="append", help="learner name; repeat or comma-separate")
    p.add_argument("--out", help="output directory")
    p.add_argument("--node-cap", type=int, dest="node_cap", help="enumeration size limit")
    p.add_argument("--n-alpha", type=int, dest="n_alpha", help="label-bias grid points")
    p.add_argument("--n-beta", type=int, dest="n_beta", help="marginal-bias grid points")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssl-rate-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="worst-case exact risk per ell, with Bayes-test lower bounds")
    _common(p)
    p.add_argument("--mc-reps", type=int, dest="mc_reps", help="also Monte Carlo the worst member")

    p = sub.add_parser("minimax", help="menu upper bound and Bayes-test lower bound per ell")
    _common(p)

    p = sub.add_parser("bounds", help="closed-form bound table")
    _common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--c-prime", type=float, dest="c_prime")
    p.add_argument("--u", type=int, default=0, help="unlabeled sample size")

    p = sub.add_parser("mixture", help="two-point / threshold mixture rates")
    _common(p)
    p.add_argument("--dump-splits", action="store_true", help="write per-split terms at the largest ell")

    p = sub.add_parser("compare", help="SSL vs SL ratio and the superlinear-budget verdict")
    _common(p)
    p.add_argument("--rate-exponent", type=float, default=0.5, dest="rate_exponent")

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--only", action="append", help="check id or number; repeat or comma-separate")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    echo = print
    try:
        if args.command == "verify":
            return cmd_verify(args, echo)
        if args.command == "bounds":
            args.bound_ell = parse_ell_grid(args.ell)[0] if args.ell is not None else 1
        cfg = load_config(args)
        jobs = args.jobs if args.jobs is not None else default_jobs()
        if args.command == "sweep":
            return cmd_sweep(cfg, jobs, echo)
        if args.command == "minimax":
            return cmd_minimax(cfg, jobs, echo)
        if args.command == "bounds":
            return cmd_bounds(args, cfg, echo)
        if args.command == "mixture":
            return cmd_mixture(args, cfg, jobs, echo)
        return cmd_compare(args, cfg, jobs, echo)
    except EnumerationBudgetError as exc:
        print(f"error: {exc}\nhint: lower --ell, raise --node-cap, or use --mc-reps for Monte Carlo",
              file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, FamilyError, BoundDomainError, KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
