"""Command-line interface.

Exit codes: 0 a feasible solution was produced, 2 no feasible solution was
found (or a solution failed validation), 1 usage or data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .alns import AlnsConfig, load_config
from .charging_lp import Infeasible
from .evaluator import validate
from .exact import ExactConfig
from .milp import export_milp, import_solution
from .model import (
    COMPANIES,
    FEASIBLE,
    NO_FEASIBLE,
    EvMode,
    Instance,
    InstanceError,
    Solution,
    TwMode,
    builtin_gothenburg,
    generate_instance,
    load_instance,
    load_solution,
    save_instance,
    save_solution,
)
from .plotting import NoCoordinatesError, plot_convergence, render
from .report import (
    SolverSettings,
    apply_tw_profile,
    format_table,
    money,
    run_baselines,
    run_compare,
    solve_baseline,
    solve_collaborative,
    write_csv,
    write_json,
)

log = logging.getLogger("coevrp")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
BUILTIN = "gothenburg"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2, which means "infeasible" here
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


# -- instance handling ------------------------------------------------------------------


def load_any(spec: str) -> Instance:
    """``gothenburg`` for the built-in case, otherwise an instance JSON file."""
    if spec == BUILTIN:
        return builtin_gothenburg()
    return load_instance(spec)


def parse_shared(instance: Instance, text: str) -> Optional[list[int]]:
    """Comma-separated customer labels, ``all`` or ``none``; returns node indices."""
    t = text.strip().lower()
    if t == "all":
        return None
    if t in ("none", "", "{}", "empty"):
        return []
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        try:
            j = instance.index_of(tok)
        except KeyError:
            raise UsageError(f"--shared-set: no customer labelled {tok!r}") from None
        if not instance.nodes[j].is_customer:
            raise UsageError(f"--shared-set: {tok!r} is not a customer")
        out.append(j)
    return out


def apply_modes(instance: Instance, args: argparse.Namespace) -> Instance:
    inst = instance.with_modes(
        EvMode.ELECTRIC if args.ev else EvMode.CONVENTIONAL if args.ev is False else None,
        TwMode.ENFORCED if args.tw else TwMode.IGNORED if args.tw is False else None,
    )
    if args.shared_set is not None:
        inst = inst.with_shared(parse_shared(inst, args.shared_set))
    if getattr(args, "tw_profile", None) and args.command != "compare":
        inst = apply_tw_profile(inst, args.tw_profile)
    return inst


def settings_from(args: argparse.Namespace) -> SolverSettings:
    alns = load_config(args.config) if getattr(args, "config", None) else AlnsConfig()
    return SolverSettings(
        method=args.method,
        seed=args.seed,
        time_limit=args.time_limit,
        alns=alns,
        exact=ExactConfig(),
    )


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _has_xy(instance: Instance) -> bool:
    return all(n.x is not None and n.y is not None for n in instance.nodes)


def _summary_row(instance: Instance, sol: Solution, ok: bool) -> dict:
    row = {
        "instance": instance.name,
        "method": sol.method,
        "status": sol.status if ok else NO_FEASIBLE,
        "meet_point": "" if sol.meet_point is None else instance.nodes[sol.meet_point].label,
        "total_cost": money(sol.total_cost),
        "energy_cost": money(sol.energy_cost),
        "labor_cost": money(sol.labor_cost),
    }
    for k in COMPANIES:
        row[f"profit_{k}"] = money(sol.profits.get(k)) if k in sol.profits else ""
    return row


def _write_outputs(out: Path, instance: Instance, sol: Solution, stem: str = "solution") -> bool:
    """Solution JSON, evaluation JSON, one-row CSV and a route map when coordinates exist."""
    report = validate(instance, sol)
    save_solution(instance, sol, out / f"{stem}.json")
    (out / f"{stem}_evaluation.json").write_text(json.dumps(report.to_dict(), indent=1, default=str))
    row = _summary_row(instance, sol, report.feasible)
    with (out / f"{stem}.csv").open("w") as fh:
        fh.write(",".join(row) + "\n")
        fh.write(",".join("" if v is None else str(v) for v in row.values()) + "\n")
    if _has_xy(instance):
        render(instance, sol, out / f"{stem}.svg")
    if not report.feasible:
        log.error("solution violates %s", ", ".join(report.violated_ids))
    return report.feasible


def _print_solution(instance: Instance, sol: Solution) -> None:
    lab = [n.label for n in instance.nodes]
    print(f"status {sol.status}  method {sol.method}  total cost {sol.total_cost:.1f} SEK")
    if sol.meet_point is not None:
        print(f"meet point {lab[sol.meet_point]}")
    for r in sol.routes:
        phi = sol.profits.get(r.company)
        phi_s = "" if phi is None else f"  profit {phi:.1f}"
        print(f"  vehicle {r.company}: {' -> '.join(lab[i] for i in r.nodes)}  return {r.arrival:.1f} min{phi_s}")


# -- commands -------------------------------------------------------------------------------


def _thresholded(instance: Instance, args: argparse.Namespace, settings: SolverSettings) -> Instance:
    if args.thresholds is False:
        return instance.with_thresholds(None)
    if args.threshold_values:
        vals = [float(x) for x in args.threshold_values.split(",")]
        if len(vals) != 2:
            raise UsageError("--threshold-values needs two numbers")
        return instance.with_thresholds(vals)
    if args.thresholds and instance.thresholds is None:
        base = run_baselines(instance.with_thresholds(None), settings)
        if not base.feasible:
            raise _NoBaseline()
        log.info("thresholds from baselines: %s", base.profits)
        return instance.with_thresholds([base.profits[k] for k in COMPANIES])
    return instance


class _NoBaseline(Exception):
    pass


def cmd_solve(args: argparse.Namespace) -> int:
    instance = apply_modes(load_any(args.instance), args)
    settings = settings_from(args)
    out = _out_dir(args)
    if args.no_collab:
        companies = [args.company] if args.company else list(COMPANIES)
        code = EXIT_OK
        for k in companies:
            sol = solve_baseline(instance.with_thresholds(None), k, settings)
            if isinstance(sol, Infeasible) or sol.status == NO_FEASIBLE:
                print(f"company {k}: no feasible solution ({getattr(sol, 'reason', sol.status)})")
                code = EXIT_INFEASIBLE
                continue
            _print_solution(instance, sol)
            if not _write_outputs(out, instance, sol, stem=f"baseline_{k}"):
                code = EXIT_INFEASIBLE
        return code
    try:
        instance = _thresholded(instance, args, settings)
    except _NoBaseline:
        print("no feasible baseline to derive profit thresholds from")
        return EXIT_INFEASIBLE
    progress = None
    if settings.method == "alns":
        progress = (out / "progress.csv").open("w")
    try:
        if settings.method == "alns":
            from .alns import solve_alns

            sol = solve_alns(instance, settings.alns_config(), progress)
        else:
            sol = solve_collaborative(instance, settings)
    finally:
        if progress is not None:
            progress.close()
    if settings.method == "alns":
        plot_convergence(out / "progress.csv", out / "convergence.svg")
    if isinstance(sol, Infeasible):
        print(f"no feasible solution ({sol.reason})")
        return EXIT_INFEASIBLE
    _print_solution(instance, sol)
    ok = _write_outputs(out, instance, sol)
    if sol.status == NO_FEASIBLE or not ok:
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_baseline(args: argparse.Namespace) -> int:
    instance = apply_modes(load_any(args.instance), args).with_thresholds(None)
    settings = settings_from(args)
    out = _out_dir(args)
    code = EXIT_OK
    for k in ([args.company] if args.company else COMPANIES):
        sol = solve_baseline(instance, k, settings)
        if isinstance(sol, Infeasible) or sol.status == NO_FEASIBLE:
            print(f"company {k}: no feasible solution")
            code = EXIT_INFEASIBLE
            continue
        _print_solution(instance, sol)
        if not _write_outputs(out, instance, sol, stem=f"baseline_{k}"):
            code = EXIT_INFEASIBLE
    return code


def cmd_validate(args: argparse.Namespace) -> int:
    instance = apply_modes(load_any(args.instance), args)
    if args.thresholds is False:
        instance = instance.with_thresholds(None)
    elif args.threshold_values:
        instance = instance.with_thresholds([float(x) for x in args.threshold_values.split(",")])
    sol = load_solution(instance, args.solution)
    report = validate(instance, sol)
    text = json.dumps(report.to_dict(), indent=1, default=str)
    if args.out:
        Path(args.out).write_text(text)
    print(f"feasible: {report.feasible}  total cost {report.total_cost:.4f}")
    for v in report.violations:
        print(f"  {v.constraint_id}: {v.context}")
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def cmd_generate(args: argparse.Namespace) -> int:
    inst = generate_instance(
        args.customers,
        region_km=args.region,
        seed=args.seed,
        tw_slots=None if args.tw_slots == "none" else args.tw_slots,
        n_meet_points=args.meet_points,
        price=args.price,
        shared_fraction=args.shared_fraction,
        ev_mode=EvMode.CONVENTIONAL if args.conventional else EvMode.ELECTRIC,
    )
    out = Path(args.out)
    if out.suffix.lower() != ".json":
        out.mkdir(parents=True, exist_ok=True)
        out = out / f"{inst.name}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_instance(inst, out)
    render(inst, None, out.with_suffix(".svg"))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    base = apply_modes(load_any(args.instance), args).with_thresholds(None)
    settings = settings_from(args)
    out = _out_dir(args)
    scenarios = [(None, base)]
    if args.tw_profile:
        scenarios = [(p.strip(), apply_tw_profile(base, p.strip())) for p in args.tw_profile.split(",")]
    reports = []
    for label, inst in scenarios:
        log.info("comparing %s", label or inst.name)
        reports.append(run_compare(inst, settings, scenario=label or ""))
    write_csv(reports, out / "compare.csv")
    write_json(reports, out / "compare.json")
    print(format_table(reports))
    _plot_compare(reports, out / "compare.svg")
    any_collab = any(r.collaborative.feasible or r.thresholded.feasible for r in reports)
    return EXIT_OK if any_collab else EXIT_INFEASIBLE


def _plot_compare(reports, path: Path) -> None:
    import matplotlib.pyplot as plt

    labels, values = [], {b: [] for b in ("baseline", "collaborative", "thresholds")}
    for r in reports:
        labels.append(r.scenario)
        for res in (r.baseline, r.collaborative, r.thresholded):
            values[res.block].append(res.total_cost if res.total_cost is not None else 0.0)
    fig, ax = plt.subplots(figsize=(max(5, 1.5 * len(labels) + 2), 4))
    width = 0.27
    for i, (block, ys) in enumerate(values.items()):
        ax.bar([x + (i - 1) * width for x in range(len(labels))], ys, width, label=block)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=20)
    ax.set_ylabel("total cost (SEK)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def cmd_plot(args: argparse.Namespace) -> int:
    if args.progress:
        plot_convergence(args.progress, args.out)
        print(f"wrote {args.out}")
        return EXIT_OK
    if not args.instance:
        raise UsageError("plot needs an instance (and usually a solution) or --progress")
    instance = load_any(args.instance)
    sol = load_solution(instance, args.solution) if args.solution else None
    render(instance, sol, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_export_milp(args: argparse.Namespace) -> int:
    instance = apply_modes(load_any(args.instance), args)
    if args.thresholds is False:
        instance = instance.with_thresholds(None)
    elif args.threshold_values:
        instance = instance.with_thresholds([float(x) for x in args.threshold_values.split(",")])
    meets = [instance.index_of(args.meet)] if args.meet else list(instance.meet_points)
    out = Path(args.out)
    if len(meets) > 1 or out.suffix.lower() != ".lp":
        out.mkdir(parents=True, exist_ok=True)
        for m in meets:
            print(f"wrote {export_milp(instance, m, out / f'{instance.name}_{instance.nodes[m].label}.lp')}")
    else:
        print(f"wrote {export_milp(instance, meets[0], out)}")
    return EXIT_OK


def cmd_import_milp(args: argparse.Namespace) -> int:
    instance = apply_modes(load_any(args.instance), args)
    if args.threshold_values:
        instance = instance.with_thresholds([float(x) for x in args.threshold_values.split(",")])
    sol = import_solution(instance, args.values)
    save_solution(instance, sol, args.out)
    _print_solution(instance, sol)
    if sol.status != FEASIBLE:
        print("violations: " + ", ".join(sol.info.get("violations", [])))
        return EXIT_INFEASIBLE
    return EXIT_OK


# -- parser -----------------------------------------------------------------------------------


def _mode_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--ev", dest="ev", action="store_true", default=None, help="electric vehicles")
    g.add_argument("--conventional", dest="ev", action="store_false", help="conventional vehicles")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--tw", dest="tw", action="store_true", default=None, help="enforce time windows")
    g.add_argument("--no-tw", dest="tw", action="store_false", help="ignore customer time windows")
    p.add_argument("--shared-set", help="customer labels open to collaboration, comma-separated, or all/none")


def _threshold_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--thresholds", dest="thresholds", action="store_true", default=None,
                   help="require each company's baseline profit (computed if the instance has none)")
    g.add_argument("--no-thresholds", dest="thresholds", action="store_false", help="drop profit thresholds")
    p.add_argument("--threshold-values", help="explicit thresholds P1,P2 in SEK")


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=("exact", "alns"), default="alns")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-limit", type=float, default=None, help="seconds per solver call")
    p.add_argument("--config", help="ALNS config JSON")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coevrp", description="Collaborative (E)VRP with meet points")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve one instance")
    s.add_argument("instance", help=f"instance JSON or '{BUILTIN}'")
    _mode_flags(s)
    _threshold_flags(s)
    _solver_flags(s)
    s.add_argument("--no-collab", action="store_true", help="single-company baseline instead")
    s.add_argument("--company", type=int, choices=COMPANIES)
    s.add_argument("--tw-profile", help="replace windows, e.g. r1-60-180")
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("baseline", help="non-collaborative baselines")
    s.add_argument("instance")
    _mode_flags(s)
    _solver_flags(s)
    s.add_argument("--company", type=int, choices=COMPANIES)
    s.add_argument("--tw-profile")
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_baseline)

    s = sub.add_parser("compare", help="baselines vs collaboration with and without thresholds")
    s.add_argument("instance")
    _mode_flags(s)
    _solver_flags(s)
    s.add_argument("--tw-profile", help="comma-separated window profiles r<seed>-<length>-<range>")
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("validate", help="check a solution against every constraint")
    s.add_argument("instance")
    s.add_argument("solution")
    _mode_flags(s)
    _threshold_flags(s)
    s.add_argument("--out", help="write the evaluation report JSON here")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("generate", help="random instance on a square region")
    s.add_argument("customers", type=int)
    s.add_argument("--region", type=float, default=25.0, help="side length in km")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tw-slots", choices=("none", "two-slot"), default="none")
    s.add_argument("--meet-points", type=int, default=2)
    s.add_argument("--price", type=float, default=50.0)
    s.add_argument("--shared-fraction", type=float, default=1.0)
    s.add_argument("--conventional", action="store_true")
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("plot", help="route map (svg/png/geojson) or convergence plot")
    s.add_argument("instance", nargs="?")
    s.add_argument("solution", nargs="?")
    s.add_argument("--progress", help="ALNS progress CSV for a convergence plot")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_plot)

    s = sub.add_parser("export-milp", help="write the fixed-meet-point MILP in LP format")
    s.add_argument("instance")
    _mode_flags(s)
    _threshold_flags(s)
    s.add_argument("--meet", help="meet point label (default: one file per meet point)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_export_milp)

    s = sub.add_parser("import-milp", help="turn an external 'var value' file into a solution")
    s.add_argument("instance")
    s.add_argument("values")
    _mode_flags(s)
    s.add_argument("--threshold-values")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_import_milp)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, InstanceError, NoCoordinatesError, ValueError, KeyError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"coevrp: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
