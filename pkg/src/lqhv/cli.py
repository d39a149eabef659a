"""Command-line frontend.

One command per pipeline: source-op, verify, gamma, upsilon, bounds,
bell-eval, reproduce.  Reports go to stdout (table, json, or csv) or to
--out; every randomized subroutine threads the single --seed and reports
embed the seed, caps, and package version so identical invocations produce
byte-identical output.  Exit status: 0 success, 1 domain error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bounds import state_bound, universal_violation_bound
from .errors import InputFormatError, LqhvError
from .io import (
    canonical_dumps,
    functional_from_json,
    functional_to_json,
    load_json,
    measure_to_json,
    operator_from_json,
    scenario_from_json,
    source_op_to_json,
    state_from_json,
    state_to_json,
)
from .linalg import dim_cap
from .models import DEFAULT_LP_CAP, compute_gamma, estimate_upsilon
from .positivity import covering_bracket, probe_tensor_positivity
from .scenarios import lhv_constants, quantum_value, violation_ratio
from .source_ops import (
    build_singlet_special,
    build_tau,
    build_tau_tilde,
    verify_defining_relation,
)


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    out: str | None = None
    fmt: str = "table"
    options: dict = field(default_factory=dict)


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise InputFormatError(f"expected a comma-separated integer list, got {text!r}") from exc


def _flatten(prefix: str, obj, rows: list):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], rows)
    elif isinstance(obj, (list, tuple)) and all(
        not isinstance(v, (dict, list, tuple)) for v in obj
    ) and len(obj) <= 16:
        rows.append((prefix, " ".join(_scalar_str(v) for v in obj)))
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, _scalar_str(obj)))


def _scalar_str(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def render_report(report: dict, fmt: str) -> str:
    if fmt == "json":
        return canonical_dumps(report, indent=2) + "\n"
    rows: list[tuple[str, str]] = []
    _flatten("", report, rows)
    if fmt == "csv":
        return "\n".join(f"{k},{v}" for k, v in rows) + "\n"
    width = max((len(k) for k, _ in rows), default=0)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows) + "\n"


def _emit(report: dict, config: RunConfig) -> None:
    text = render_report(report, config.fmt)
    if config.out:
        with open(config.out, "w", encoding="utf-8") as fh:
            fh.write(canonical_dumps(report, indent=2) + "\n")
        sys.stdout.write(f"report written to {config.out}\n")
    else:
        sys.stdout.write(text)


def _base_report(config: RunConfig) -> dict:
    return {
        "command": config.command,
        "version": __version__,
        "seed": config.seed,
        "dim_cap": dim_cap(),
    }


def _cmd_source_op(config: RunConfig) -> dict:
    opts = config.options
    state = state_from_json(load_json(opts["state"]))
    settings = opts["settings"]
    builder = opts["builder"]
    if builder == "auto":
        builder = "tau_tilde" if settings[0] == 1 else "tau"
    if builder == "tau":
        t = build_tau(state, settings)
    elif builder == "tau_tilde":
        t = build_tau_tilde(state, settings)
    else:
        raise InputFormatError(f"unknown builder {builder!r}")
    residual = verify_defining_relation(t, trials=opts.get("trials", 20), seed=config.seed)
    norm = t.trace_norm()
    report = _base_report(config)
    report.update(source_op_to_json(t, norm, residual))
    return report


def _cmd_verify(config: RunConfig) -> dict:
    opts = config.options
    shape, op = operator_from_json(load_json(opts["op"]))
    report = _base_report(config)
    report["check"] = opts["check"]
    restarts = opts.get("restarts", 64)
    if opts["check"] == "tensor-positivity":
        verdict = probe_tensor_positivity(op, shape, restarts=restarts, seed=config.seed)
        report["status"] = verdict.status
        report["min_found"] = verdict.min_found
        if verdict.witness is not None:
            report["witness"] = [[list(map(float, np.real(v))), list(map(float, np.imag(v)))]
                                 for v in verdict.witness]
    elif opts["check"] == "covering-bracket":
        br = covering_bracket(op, shape, restarts=restarts, seed=config.seed)
        report["lower"] = br.lower
        report["upper"] = br.upper
        report["trace"] = float(np.trace(op).real)
    else:
        raise InputFormatError(f"unknown check {opts['check']!r}")
    return report


def _cmd_gamma(config: RunConfig) -> dict:
    opts = config.options
    sc = scenario_from_json(load_json(opts["scenario"]))
    result = compute_gamma(sc, lp_cap=opts.get("lp_cap", DEFAULT_LP_CAP))
    report = _base_report(config)
    report.update({
        "gamma": result.gamma,
        "lhv": result.lhv,
        "lp_variables": result.n_variables,
        "lp_constraints": result.n_constraints,
        "max_marginal_error": result.max_marginal_error,
        "dual_violation_ratio": violation_ratio(sc, result.dual_functional),
        "total_variation": result.optimal_measure.total_variation(),
    })
    if opts.get("dual_out"):
        with open(opts["dual_out"], "w", encoding="utf-8") as fh:
            fh.write(canonical_dumps(functional_to_json(result.dual_functional), indent=2) + "\n")
    if opts.get("measure_out"):
        with open(opts["measure_out"], "w", encoding="utf-8") as fh:
            fh.write(canonical_dumps(measure_to_json(result.optimal_measure), indent=2) + "\n")
    return report


def _cmd_upsilon(config: RunConfig) -> dict:
    opts = config.options
    state = state_from_json(load_json(opts["state"]))
    best_gamma, _ = estimate_upsilon(
        state, opts["settings"], opts["outcomes"],
        search_budget=opts.get("budget", 2000), seed=config.seed,
    )
    report = _base_report(config)
    report.update({
        "settings": list(opts["settings"]),
        "outcomes": list(opts["outcomes"]),
        "budget": opts.get("budget", 2000),
        "best_gamma": best_gamma,
    })
    return report


def _bound_report_json(r) -> dict:
    return {
        "dimension_bound": r.dimension_bound,
        "settings_bound": r.settings_bound,
        "universal_min": r.universal_min,
        "source_norm_bounds": [[tag, val] for tag, val in r.source_norm_bounds],
        "state_specific": r.state_specific or {},
        "final_upper": r.final_upper,
    }


def _cmd_bounds(config: RunConfig) -> dict:
    opts = config.options
    settings = opts["settings"]
    report = _base_report(config)
    if opts.get("state"):
        state = state_from_json(load_json(opts["state"]))
        r = state_bound(state, settings)
        report["dims"] = list(state.site_dims)
    else:
        dims = opts["dims"]
        r = universal_violation_bound(dims, settings)
        report["dims"] = list(dims)
    report["settings"] = list(settings)
    report.update(_bound_report_json(r))
    return report


def _cmd_bell_eval(config: RunConfig) -> dict:
    opts = config.options
    sc = scenario_from_json(load_json(opts["scenario"]))
    f = functional_from_json(load_json(opts["functional"]))
    b_inf, b_sup, b_abs = lhv_constants(f)
    qv = quantum_value(sc, f)
    report = _base_report(config)
    report.update({
        "B_inf": b_inf,
        "B_sup": b_sup,
        "B_abs": b_abs,
        "quantum_value": qv,
        "violation_ratio": abs(qv) / b_abs if b_abs > 0 else None,
    })
    return report


def _case_singlet_sqrt3(seed: int) -> dict:
    t = build_singlet_special()
    eigs = np.sort(np.linalg.eigvalsh(t.op))
    return {
        "trace_norm": t.trace_norm(),
        "expected_trace_norm": float(np.sqrt(3.0)),
        "eigenvalues": [float(v) for v in eigs],
        "defining_residual": verify_defining_relation(t, trials=20, seed=seed),
    }


def _case_chsh_gamma(seed: int) -> dict:
    from .scenarios import projective_scenario
    from .states import make_singlet

    sc = projective_scenario(make_singlet(), [[0.0, np.pi / 2], [np.pi / 4, -np.pi / 4]])
    g = compute_gamma(sc)
    return {
        "gamma": g.gamma,
        "expected_gamma": float(np.sqrt(2.0)),
        "dual_violation_ratio": violation_ratio(sc, g.dual_functional),
        "lhv": g.lhv,
    }


def _case_swap_covering(seed: int) -> dict:
    from .linalg import FactorShape

    out = {}
    for d in (2, 3, 4):
        swap = np.zeros((d * d, d * d), dtype=complex)
        for i in range(d):
            for j in range(d):
                swap[j * d + i, i * d + j] = 1.0
        br = covering_bracket(swap, FactorShape((d, d), (1, 1)), restarts=16, seed=seed)
        out[f"d{d}"] = {"lower": br.lower, "upper": br.upper}
    return out


def _case_separable_lhv(seed: int) -> dict:
    from .linalg import random_unitary
    from .scenarios import Scenario, basis_projective_effects, pm_outcomes
    from .states import make_separable_mixture

    rng = np.random.default_rng(seed)
    comps = []
    weights = rng.dirichlet(np.ones(3))
    for w in weights:
        factors = []
        for _ in range(2):
            g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            rho = g @ g.conj().T
            factors.append(rho / np.trace(rho))
        comps.append((float(w), factors))
    state = make_separable_mixture(comps)
    povms = tuple(
        tuple(tuple(basis_projective_effects(random_unitary(rng, 2))) for _ in range(2))
        for _ in range(2)
    )
    sc = Scenario(state, povms, pm_outcomes(2))
    g = compute_gamma(sc)
    return {"gamma": g.gamma, "lhv": g.lhv}


def _case_bounds_grid(seed: int) -> dict:
    r1 = universal_violation_bound((2, 2), (3, 3))
    r2 = universal_violation_bound((2, 2, 2), (2, 2, 2))
    return {
        "dims_2_2_settings_3_3": _bound_report_json(r1),
        "dims_2_2_2_settings_2_2_2": _bound_report_json(r2),
    }


def _case_ghz_bound(seed: int) -> dict:
    from .states import make_ghz

    r = state_bound(make_ghz(2, 3), (2, 2, 2))
    return _bound_report_json(r)


REPRODUCE_CASES = {
    "singlet-sqrt3": _case_singlet_sqrt3,
    "chsh-gamma": _case_chsh_gamma,
    "swap-covering": _case_swap_covering,
    "separable-lhv": _case_separable_lhv,
    "bounds-grid": _case_bounds_grid,
    "ghz-bound": _case_ghz_bound,
}


def _cmd_reproduce(config: RunConfig) -> dict:
    case = config.options["case"]
    if case not in REPRODUCE_CASES:
        raise InputFormatError(
            f"unknown case {case!r}; available: {', '.join(sorted(REPRODUCE_CASES))}"
        )
    report = _base_report(config)
    report["case"] = case
    report["results"] = REPRODUCE_CASES[case](config.seed)
    return report


COMMANDS = {
    "source-op": _cmd_source_op,
    "verify": _cmd_verify,
    "gamma": _cmd_gamma,
    "upsilon": _cmd_upsilon,
    "bounds": _cmd_bounds,
    "bell-eval": _cmd_bell_eval,
    "reproduce": _cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lqhv",
        description="signed-measure models, source operators, and Bell-violation bounds",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None)
        p.add_argument("--format", dest="fmt", choices=("table", "json", "csv"), default="table")

    p = sub.add_parser("source-op", help="build a source operator from a state")
    p.add_argument("--state", required=True)
    p.add_argument("--settings", required=True)
    p.add_argument("--builder", choices=("tau", "tau_tilde", "auto"), default="auto")
    p.add_argument("--trials", type=int, default=20)
    common(p)

    p = sub.add_parser("verify", help="tensor positivity or covering bracket of an operator")
    p.add_argument("--op", required=True)
    p.add_argument("--check", choices=("tensor-positivity", "covering-bracket"), required=True)
    p.add_argument("--restarts", type=int, default=64)
    common(p)

    p = sub.add_parser("gamma", help="exact scenario parameter via linear programming")
    p.add_argument("--scenario", required=True)
    p.add_argument("--dual-out", dest="dual_out", default=None)
    p.add_argument("--measure-out", dest="measure_out", default=None)
    common(p)

    p = sub.add_parser("upsilon", help="measurement search maximizing gamma")
    p.add_argument("--state", required=True)
    p.add_argument("--settings", required=True)
    p.add_argument("--outcomes", required=True)
    p.add_argument("--budget", type=int, default=2000)
    common(p)

    p = sub.add_parser("bounds", help="analytic violation bounds")
    p.add_argument("--dims", default=None)
    p.add_argument("--settings", required=True)
    p.add_argument("--state", default=None)
    common(p)

    p = sub.add_parser("bell-eval", help="classical constants and quantum value of a functional")
    p.add_argument("--scenario", required=True)
    p.add_argument("--functional", required=True)
    common(p)

    p = sub.add_parser("reproduce", help="run a named reference computation")
    p.add_argument("--case", required=True)
    common(p)

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    options = dict(vars(args))
    command = options.pop("command")
    seed = options.pop("seed", 0)
    out = options.pop("out", None)
    fmt = options.pop("fmt", "table")
    for key in ("settings", "outcomes", "dims"):
        if options.get(key) is not None:
            options[key] = _parse_int_list(options[key])
    return RunConfig(command=command, seed=seed, out=out, fmt=fmt, options=options)


def run(config: RunConfig) -> int:
    if config.command == "bounds" and not config.options.get("state") \
            and config.options.get("dims") is None:
        raise InputFormatError("bounds needs --dims or --state")
    report = COMMANDS[config.command](config)
    _emit(report, config)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = config_from_args(args)
    try:
        return run(config)
    except (InputFormatError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (LqhvError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
