"""Command-line front end.

Subcommands: ``equilibria``, ``fuzzify``, ``synthesize``, ``simulate``,
``report``. Every subcommand reads the same configuration stack (preset,
optional YAML file, flag overrides), writes JSON/CSV artifacts into the
output directory and prints a short table. Exit codes: 0 success, 2
configuration error, 3 degenerate fuzzification sector, 4 synthesis LP
infeasible, 5 closed-loop verification failure, 6 simulation divergence.

Verbosity is controlled by the ``COPOS_LOG`` environment variable
(debug/info/warning/error).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    RunConfig,
    domain_to_dict,
    load_config,
    params_to_dict,
)
from .fuzzy import (
    DegenerateSectorError,
    augment,
    build_vertices,
    discretize_euler,
    premise_bounds,
    system_from_dict,
    system_to_dict,
)
from .lp import lp_to_text
from .model import find_equilibria
from .sim import metrics_to_dict, run_closed_loop, summarize, trajectory_to_csv
from .synthesis import (
    SynthesisOptions,
    check_positivity,
    synthesis_result_to_dict,
    synthesize_pdc,
    verify_closed_loop,
)

log = logging.getLogger("copos.cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_INFEASIBLE = 4
EXIT_VERIFICATION = 5
EXIT_DIVERGED = 6


def _setup_logging() -> None:
    level_name = os.environ.get("COPOS_LOG", "warning").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(level=level, format="%(name)s %(levelname)s %(message)s")


def _write_json(cfg: RunConfig, path: str, payload: dict) -> None:
    if cfg.timestamp:
        payload = {"generated_at": datetime.now(timezone.utc).isoformat(), **payload}
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_text(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _out(cfg: RunConfig, name: str) -> str:
    return os.path.join(cfg.out_dir, name)


def cmd_equilibria(cfg: RunConfig) -> int:
    eqs = find_equilibria(cfg.params)
    print(f"{'x1':>12} {'x2':>10}  {'kind':<22} eigenvalues")
    for eq in eqs:
        lam = ", ".join(f"{l.real:.4f}{l.imag:+.4f}j" for l in eq.eigenvalues)
        print(f"{eq.point.x1:12.3f} {eq.point.x2:10.4f}  {eq.kind:<22} {lam}")
    payload = {
        "params": params_to_dict(cfg.params),
        "equilibria": [
            {"x1": eq.point.x1, "x2": eq.point.x2, "kind": eq.kind,
             "eigenvalues": [[l.real, l.imag] for l in eq.eigenvalues]}
            for eq in eqs
        ],
    }
    _write_json(cfg, _out(cfg, "equilibria.json"), payload)
    print(f"wrote {_out(cfg, 'equilibria.json')}")
    return EXIT_OK


def _build_systems(cfg: RunConfig, domain):
    bounds = premise_bounds(cfg.params, domain, cfg.mode)
    vs = build_vertices(bounds)
    avs = augment(vs)
    dvs = discretize_euler(avs, cfg.T)
    return vs, avs, dvs


def cmd_fuzzify(cfg: RunConfig) -> int:
    try:
        vs, avs, dvs = _build_systems(cfg, cfg.domain)
    except DegenerateSectorError as exc:
        print(f"degenerate sector: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    positivity = check_positivity(vs.A, vs.B, mode="continuous")
    b = vs.premise_bounds
    print(f"mode={cfg.mode}  T={cfg.T}")
    for name, (lo, hi) in zip(("theta1", "theta2", "theta3"), b.intervals()):
        print(f"  {name}: [{lo:.4f}, {hi:.4f}]")
    print(f"  vertex A Metzler: {positivity.a_ok}")
    print(f"  vertex B nonneg:  {positivity.b_ok}")
    payload = {
        "params": params_to_dict(cfg.params),
        "domain": domain_to_dict(cfg.domain),
        "mode": cfg.mode,
        "T": cfg.T,
        "vertex_system": system_to_dict(vs),
        "augmented": system_to_dict(avs),
        "augmented_discrete": system_to_dict(dvs),
        "positivity": {"A_metzler": list(positivity.a_ok),
                       "B_nonneg": list(positivity.b_ok)},
    }
    _write_json(cfg, _out(cfg, "fuzzify.json"), payload)
    print(f"wrote {_out(cfg, 'fuzzify.json')}")
    return EXIT_OK


def _synthesize(cfg: RunConfig, dump_lp: bool = False):
    _, _, dvs = _build_systems(cfg, cfg.control_domain)
    result = synthesize_pdc(dvs, cfg.lp)
    return dvs, result


def _print_verification(result) -> None:
    rep = result.report
    print("verification summary")
    for line in rep.summary_lines():
        print(f"  {line}")
    print(f"  certificate p = {np.array2string(result.certificate.p, precision=6)}")
    print(f"  worst pair margin = {result.certificate.margins.max():.3e}")


def cmd_synthesize(cfg: RunConfig, dump_lp: bool = False) -> int:
    try:
        dvs, result = _synthesize(cfg, dump_lp)
    except DegenerateSectorError as exc:
        print(f"degenerate sector: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    if dump_lp:
        # re-assemble the LP for the dump without solving twice
        from .lp import LinearProgram  # local import only for type
        text = _synthesis_lp_text(dvs, cfg.lp)
        _write_text(_out(cfg, "synthesis_lp.txt"), text)
        print(f"wrote {_out(cfg, 'synthesis_lp.txt')}")
    if not result.feasible:
        print("synthesis LP infeasible; tightest rows:", file=sys.stderr)
        for label in result.diagnostics[:12]:
            print(f"  {label}", file=sys.stderr)
        print("consider adjusting the control domain or the sampling period T",
              file=sys.stderr)
        return EXIT_INFEASIBLE
    _print_verification(result)
    payload = {
        "params": params_to_dict(cfg.params),
        "control_domain": domain_to_dict(cfg.control_domain),
        "mode": cfg.mode,
        "T": cfg.T,
        "system": system_to_dict(dvs),
        "result": synthesis_result_to_dict(result),
    }
    _write_json(cfg, _out(cfg, "synthesis.json"), payload)
    print(f"wrote {_out(cfg, 'synthesis.json')}")
    if not result.report.passed:
        print("closed-loop verification FAILED", file=sys.stderr)
        return EXIT_VERIFICATION
    return EXIT_OK


def _synthesis_lp_text(dvs, opts: SynthesisOptions) -> str:
    # rebuilds the same LP assembly for external cross-checking
    from .synthesis import _as_discrete_lists, _resolve_pins, _resolve_rows
    from .lp import LinearProgram, strictify

    A, B = _as_discrete_lists(dvs)
    r, n, m = len(A), A[0].shape[0], B[0].shape[1]
    rows_checked = _resolve_rows(opts.positivity_rows, n)
    pins = _resolve_pins(opts.gain_pins, n, m)
    free = [(z, t) for z in range(m) for t in range(n) if (z, t) not in pins]
    n_vars = n + r * len(free)
    lp = LinearProgram(n_vars)
    for t in range(n):
        lp.set_bounds(t, opts.eps, opts.q_max)

    def put(row, j, z, t, coeff):
        if (z, t) in pins:
            row[t] += coeff * pins[(z, t)]
        else:
            row[n + j * len(free) + free.index((z, t))] += coeff

    rel_a, rhs_a = strictify("<", 0.0, opts.eps)
    for i in range(r):
        AmI = A[i] - np.eye(n)
        for j in range(r):
            for h in range(n):
                row = np.zeros(n_vars)
                for t in range(n):
                    row[t] += AmI[h, t]
                    for z in range(m):
                        put(row, j, z, t, B[i][h, z])
                lp.add_constraint(row, rel_a, rhs_a, label=f"8a[i={i},j={j},h={h}]")
    for i in range(r):
        for j in range(r):
            for h in rows_checked:
                for t in range(n):
                    row = np.zeros(n_vars)
                    row[t] += A[i][h, t]
                    for z in range(m):
                        put(row, j, z, t, B[i][h, z])
                    lp.add_constraint(row, ">=", 0.0, label=f"8d[i={i},j={j},h={h},t={t}]")
    return lp_to_text(lp)


def _load_gains(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    system = system_from_dict(data["system"])
    K = [np.array(Kj) for Kj in data["result"]["K"]]
    return system, K


def cmd_simulate(cfg: RunConfig, gains_path: Optional[str] = None) -> int:
    if gains_path is not None:
        try:
            dvs, K = _load_gains(gains_path)
        except (OSError, KeyError, ValueError) as exc:
            print(f"cannot load gains from {gains_path!r}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        try:
            dvs, result = _synthesize(cfg)
        except DegenerateSectorError as exc:
            print(f"degenerate sector: {exc}", file=sys.stderr)
            return EXIT_DEGENERATE
        if not result.feasible:
            print("synthesis LP infeasible; cannot simulate", file=sys.stderr)
            return EXIT_INFEASIBLE
        if not result.report.passed:
            print("closed-loop verification failed; refusing to simulate",
                  file=sys.stderr)
            return EXIT_VERIFICATION
        K = list(result.K)

    rows = []
    header = (f"{'scenario':<18} {'therapy':<12} {'max x1':>8} {'t_benign':>9} "
              f"{'x1(T)':>9} {'x2(T)':>7} {'chemo':>7} {'immuno':>7}")
    print(header)
    for scenario in cfg.scenarios:
        try:
            traj = run_closed_loop(scenario, dvs, K, cfg.params,
                                   caps=cfg.dose_caps, eps_den=cfg.eps_den,
                                   windup_limit=cfg.windup)
        except RuntimeError as exc:
            print(f"scenario {scenario.name!r} diverged: {exc}", file=sys.stderr)
            return EXIT_DIVERGED
        metrics = summarize(traj, cfg.params)
        stem = scenario.name.replace(" ", "-")
        csv_path = _out(cfg, f"{stem}.csv")
        _write_text(csv_path, trajectory_to_csv(traj))
        _write_json(cfg, _out(cfg, f"{stem}.metrics.json"), {
            "scenario": {"name": scenario.name, "therapy": scenario.therapy,
                         "x0": [scenario.x0.x1, scenario.x0.x2],
                         "z_r": list(scenario.z_r),
                         "duration": scenario.duration,
                         "controller_period": scenario.controller_period,
                         "plant": scenario.plant},
            "metrics": metrics_to_dict(metrics),
            "clamp_events": traj.clamp_events,
            "premise_clamp_events": traj.premise_clamp_events,
            "windup_events": traj.windup_events,
        })
        t_ben = "-" if metrics.time_to_benign is None else f"{metrics.time_to_benign:.2f}"
        print(f"{scenario.name:<18} {scenario.therapy:<12} {metrics.max_tumor:8.1f} "
              f"{t_ben:>9} {metrics.terminal_state.x1:9.3f} "
              f"{metrics.terminal_state.x2:7.3f} {metrics.total_chemo_dose:7.2f} "
              f"{metrics.total_immuno_dose:7.2f}")
        rows.append({"name": scenario.name, "therapy": scenario.therapy,
                     "csv": f"{stem}.csv", "metrics": metrics_to_dict(metrics)})
    _write_json(cfg, _out(cfg, "simulate_summary.json"), {"scenarios": rows})
    print(f"wrote {_out(cfg, 'simulate_summary.json')}")
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    code = cmd_equilibria(cfg)
    if code != EXIT_OK:
        return code
    code = cmd_fuzzify(cfg)
    if code != EXIT_OK:
        return code
    code = cmd_synthesize(cfg)
    if code != EXIT_OK:
        return code
    code = cmd_simulate(cfg)
    if code != EXIT_OK:
        return code
    lines = [
        "# copos run report",
        "",
        "Artifacts in this directory:",
        "",
        "- `equilibria.json` - unforced equilibria and their classification",
        "- `fuzzify.json` - premise bounds, vertex systems, augmentation,",
        "  Euler discretization and vertex positivity flags",
        "- `synthesis.json` - LP synthesis result: Q, M, K, certificate and",
        "  the closed-loop verification report",
        "- `<scenario>.csv` / `<scenario>.metrics.json` - per-scenario",
        "  trajectories and outcome metrics",
        "- `simulate_summary.json` - metrics table across scenarios",
        "",
        f"Scenarios: {', '.join(s.name for s in cfg.scenarios)}",
    ]
    _write_text(_out(cfg, "report.md"), "\n".join(lines) + "\n")
    print(f"wrote {_out(cfg, 'report.md')}")
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="YAML configuration file")
    parser.add_argument("--preset", metavar="NAME", default=None,
                        help="configuration preset (stepanova-table1, reproduce-paper)")
    parser.add_argument("--out", metavar="DIR", default=None, help="output directory")
    parser.add_argument("--mode", choices=("endpoint", "global"), default=None,
                        help="premise extrema mode")
    parser.add_argument("--T", type=float, default=None, metavar="DAYS",
                        help="sampling period in days")
    parser.add_argument("--strict-paper", action="store_true",
                        help="enforce M <= 0 and disable gain pinning")
    parser.add_argument("--no-timestamp", action="store_true",
                        help="omit generated_at fields for byte-reproducible output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="copos",
        description="LP-based positive T-S fuzzy controller synthesis for "
                    "the reformed Stepanova tumor-immune model")
    parser.add_argument("--version", action="version", version=f"copos {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("equilibria", "find and classify the unforced equilibria"),
        ("fuzzify", "build the vertex systems and export them as JSON"),
        ("synthesize", "run the LP synthesis and verification"),
        ("simulate", "run the configured treatment scenarios"),
        ("report", "run the full pipeline and write a summary"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "synthesize":
            p.add_argument("--dump-lp", action="store_true",
                           help="write the assembled LP in text form")
        if name == "simulate":
            p.add_argument("--gains", metavar="PATH", default=None,
                           help="load gains from a synthesis.json instead of "
                                "synthesizing inline")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)

    overrides: dict = {}
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.mode is not None:
        overrides["mode"] = args.mode
    if args.T is not None:
        overrides["T"] = args.T
    if args.no_timestamp:
        overrides["timestamp"] = False
    if args.strict_paper:
        overrides["lp"] = {"enforce_8c": True, "gain_pins": "none"}

    try:
        cfg = load_config(args.config, args.preset, overrides)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "equilibria":
        return cmd_equilibria(cfg)
    if args.command == "fuzzify":
        return cmd_fuzzify(cfg)
    if args.command == "synthesize":
        return cmd_synthesize(cfg, dump_lp=args.dump_lp)
    if args.command == "simulate":
        return cmd_simulate(cfg, gains_path=args.gains)
    return cmd_report(cfg)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
