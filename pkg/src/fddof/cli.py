"""Command-line entry point: regions, corner checks, simulations and sweeps."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any

from .channel import GridSpec, NonIntegerDimensionError
from .config import ConfigError, ExperimentConfig, load_config
from .regions import (
    DegenerateGenieError, NetworkGeometry, corner_points, fd_region, genie_sum_bound,
    mimo_ic_dof, overlapped_scenario, symmetric_scenario,
)
from .svg import overlay_svg, region_svg

log = logging.getLogger("fddof")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_THRESHOLD = 0, 2, 3, 4

CONFIG_HELP = """\
config file (YAML):
  scenario:                     # or 'geometry:', exactly one of the two
    symmetric: {L: 1, fwd: 1, back: 1, overlap: 0.75}
    # overlapped: {L_BS: 2, L_Usr: 1, psi: 1}
  # geometry:
  #   L_T1: 1, L_R1: 1, L_T2: 1, L_R2: 1
  #   psi_T11: [[0, 1]]         # lists of [lo, hi] direction-cosine segments
  #   psi_R11, psi_T22, psi_R22, psi_T12, psi_R12 likewise; omitted means empty
  #   theta_R22: [[0, 1.57]]    # or elevation angles in radians
  mode: formulas_only           # physical | blockmodel | formulas_only
  grid: {n_wavevector: 256, oversampling: 8, seed: 0}
  seeds: [0, 1, 2]
  sweep: {name: overlap, values: [1, 0.75, 0.5, 0]}
  output_dir: out               # relative to the config file
  leakage_floor_db: -30
  jobs: 1                       # worker processes for simulate/sweep

exit codes: 0 ok, 2 config error, 3 infeasible geometry, 4 threshold failure
"""


# ---------------------------------------------------------------------------
# output helpers

def _json_text(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_atomic(path: Path, text: str) -> None:
    """Write to a sibling temp file, then rename over the target."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _value_tag(value: float) -> str:
    return f"{value:g}"


def _scenario_flags(cfg: ExperimentConfig, value: float | None) -> dict[str, Any]:
    if cfg.scenario is None:
        return {}
    kind, params = cfg.scenario
    params = dict(params)
    if value is not None:
        params[cfg.sweep[0]] = value
    if kind == "overlapped":
        res = overlapped_scenario(params["L_BS"], params["L_Usr"], params["psi"])
        flags = {"fd_beats_hd": res["fd_beats_hd"], "rectangular": res["rectangular"]}
    else:
        res = symmetric_scenario(params["L"], params["fwd"], params["back"], params["overlap"])
        flags = {"hd_equals_fd": res["hd_equals_fd"], "rectangular": res["rectangular"]}
    return {"kind": kind, "params": params, "hd_sum": res["hd_sum"], **flags}


def region_record(cfg: ExperimentConfig, value: float | None = None) -> dict[str, Any]:
    g = cfg.geometry_at(value)
    region = fd_region(g)
    out = {
        "geometry": g.to_dict(),
        "region": region.to_dict(),
        "shape": region.shape,
        "max_sum": region.max_sum,
        "half_duplex": {"d1_max": region.d1_max, "d2_max": region.d2_max},
    }
    scenario = _scenario_flags(cfg, value)
    if scenario:
        out["scenario"] = scenario
    return out


def _write_region(cfg: ExperimentConfig, out_dir: Path, value: float | None = None) -> dict[str, Any]:
    record = region_record(cfg, value)
    region = fd_region(cfg.geometry_at(value))
    write_atomic(out_dir / "region.json", _json_text(record))
    write_atomic(out_dir / "region.svg", region_svg(region, cfg.plot_unit(value)))
    return record


# ---------------------------------------------------------------------------
# commands

def cmd_region(cfg: ExperimentConfig) -> int:
    _write_region(cfg, cfg.output_dir)
    return EXIT_OK


def cmd_corners(cfg: ExperimentConfig) -> int:
    g = cfg.geometry_at()
    out: dict[str, Any] = {
        "geometry": g.to_dict(),
        "region": fd_region(g).to_dict(),
        "corners": corner_points(g).to_dict(),
    }
    try:
        genie = genie_sum_bound(g)
        out["genie"] = {
            "L_R1_prime": genie.L_R1_prime, "L_T2_prime": genie.L_T2_prime,
            "L_R1_double_prime": genie.L_R1_double_prime,
            "dim_Tx2_prime": genie.dim_Tx2_prime, "dim_Rx1_prime": genie.dim_Rx1_prime,
            "bound": genie.bound,
        }
    except DegenerateGenieError as exc:
        out["genie"] = {"degenerate": str(exc)}
    write_atomic(cfg.output_dir / "corners.json", _json_text(out))
    return EXIT_OK


def _run_passes(record: dict[str, Any], mode: str, floor: float) -> bool:
    if mode == "blockmodel":
        return bool(record["meets_corner"])
    target = record["target"]
    d1, d2 = record["achieved"]
    return d1 >= target[0] - 1 and d2 >= target[1] - 1 and record["leakage_db"] <= floor


def _simulate_task(task: tuple) -> dict[str, Any]:
    from .scheme import achieve_corner

    index, value, corner, seed, geometry, mode, grid, floor = task
    base = {"point": index, "sweep_value": value, "corner": corner, "seed": seed, "mode": mode}
    try:
        result = achieve_corner(NetworkGeometry.from_dict(geometry), corner, mode, seed,
                                grid=grid, leakage_floor_db=floor)
    except NonIntegerDimensionError as exc:
        return {**base, "infeasible": str(exc)}
    record = {**base, **result.record}
    record["passed"] = _run_passes(record, mode, floor)
    return record


def _run_tasks(tasks: list[tuple], jobs: int) -> list[dict[str, Any]]:
    if jobs <= 1 or len(tasks) <= 1:
        return [_simulate_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_simulate_task, tasks))


RUN_COLUMNS = ["sweep_value", "corner", "seed", "mode", "d1", "d2", "target_d1", "target_d2",
               "leakage_db", "meets_corner", "passed"]


def _runs_csv(records: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RUN_COLUMNS)
    for r in records:
        if "infeasible" in r:
            continue
        writer.writerow([
            "" if r["sweep_value"] is None else _value_tag(r["sweep_value"]),
            r["corner"], r["seed"], r["mode"], r["achieved"][0], r["achieved"][1],
            _value_tag(r["target"][0]), _value_tag(r["target"][1]),
            f"{r['leakage_db']:.3f}", str(r["meets_corner"]).lower(), str(r["passed"]).lower(),
        ])
    return buf.getvalue()


def cmd_simulate(cfg: ExperimentConfig) -> int:
    if cfg.mode not in ("physical", "blockmodel"):
        raise ConfigError(f"simulate needs mode physical or blockmodel, not {cfg.mode!r}")
    if not cfg.seeds:
        raise ConfigError("no seeds")
    tasks = []
    for index, value in enumerate(cfg.sweep_values()):
        geometry = cfg.geometry_at(value).to_dict()
        for corner in ("prime", "double_prime"):
            for seed in cfg.seeds:
                tasks.append((index, value, corner, seed, geometry, cfg.mode, cfg.grid,
                              cfg.leakage_floor_db))
    records = _run_tasks(tasks, cfg.jobs)

    for r in records:
        name = f"point{r['point']}_{r['corner']}_seed{r['seed']}.json"
        write_atomic(cfg.output_dir / "runs" / name, _json_text(r))
    write_atomic(cfg.output_dir / "runs.csv", _runs_csv(records))

    infeasible = sorted({(r["point"], r["infeasible"]) for r in records if "infeasible" in r})
    completed = [r for r in records if "infeasible" not in r]
    failures = [r for r in completed if not r["passed"]]
    summary = {
        "config": cfg.describe(),
        "runs": len(completed),
        "passed": len(completed) - len(failures),
        "failed": len(failures),
        "all_meet_corner": all(r["meets_corner"] for r in completed) if completed else False,
        "infeasible": [{"point": p, "sweep_value": cfg.sweep_values()[p], "error": e} for p, e in infeasible],
        "worst_leakage_db": max((r["leakage_db"] for r in completed), default=None),
    }
    write_atomic(cfg.output_dir / "summary.json", _json_text(summary))
    for p, e in infeasible:
        print(f"point {p}: {e}", file=sys.stderr)
    if failures:
        return EXIT_THRESHOLD
    if infeasible:
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig) -> int:
    if cfg.sweep is None:
        raise ConfigError("sweep command needs a 'sweep' entry in the config")
    name, values = cfg.sweep
    points = []
    curves = []
    for value in values:
        point_dir = cfg.output_dir / "sweep" / f"{name}={_value_tag(value)}"
        record = _write_region(cfg, point_dir, value)
        points.append({"value": value, "dir": point_dir.relative_to(cfg.output_dir).as_posix(), **record})
        curves.append((f"{name} = {_value_tag(value)}", fd_region(cfg.geometry_at(value))))
    units = {cfg.plot_unit(v) for v in values}
    unit = units.pop() if len(units) == 1 else None
    write_atomic(cfg.output_dir / "sweep.svg", overlay_svg(curves, unit))
    write_atomic(cfg.output_dir / "summary.json", _json_text({"sweep": name, "points": points}))
    if cfg.mode in ("physical", "blockmodel"):
        return cmd_simulate(cfg)
    return EXIT_OK


def mimo_report(M1: int, N1: int, M2: int, N2: int, simulate: bool = False) -> dict[str, Any]:
    """Interference-channel formula next to the fully overlapped Z-channel analogue.

    Each node's dimension 2L|Psi| is set to its antenna count with every
    scattering interval equal to [-1, 1].
    """
    from .intervals import IntervalSet

    full = IntervalSet.full()
    g = NetworkGeometry(M1 / 4, N1 / 4, M2 / 4, N2 / 4, full, full, full, full, full, full)
    region = fd_region(g)
    report: dict[str, Any] = {
        "antennas": {"M1": M1, "N1": N1, "M2": M2, "N2": N2},
        "mimo_ic_dof": mimo_ic_dof(M1, N1, M2, N2),
        "z_channel_analogue": {
            "d1_max": region.d1_max, "d2_max": region.d2_max,
            "d_sum_max": region.d_sum_max, "max_sum": region.max_sum,
        },
    }
    if simulate:
        from .scheme import achieve_corner

        achieved = [achieve_corner(g, c, "blockmodel") for c in ("prime", "double_prime")]
        report["z_channel_analogue"]["achieved_corners"] = [[a.d1, a.d2] for a in achieved]
    return report


def cmd_mimo_check(M1: int, N1: int, M2: int, N2: int, simulate: bool = False) -> int:
    if min(M1, N1, M2, N2) < 0:
        raise ConfigError("antenna counts must be nonnegative")
    print(_json_text(mimo_report(M1, N1, M2, N2, simulate)), end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument handling

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, type=Path, help="YAML experiment config")
    p.add_argument("--mode", choices=("physical", "blockmodel", "formulas_only"))
    p.add_argument("--seed", type=int, help="run a single seed instead of the config list")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--leakage-floor-db", type=float)
    p.add_argument("--oversampling", type=float)
    p.add_argument("--grid-n", type=int, help="wavevector samples")
    p.add_argument("--jobs", type=int, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fddof",
        description="Spatial degrees-of-freedom regions of a full-duplex base station.",
        epilog=CONFIG_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("region", "write region.json and region.svg"),
        ("corners", "write corners.json with corner points and genie arithmetic"),
        ("simulate", "run the achievability scheme at both corners for every seed"),
        ("sweep", "regions for every sweep value plus an overlay plot"),
    ]:
        p = sub.add_parser(name, help=helptext, epilog=CONFIG_HELP,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        _common(p)
    p = sub.add_parser("mimo-check", help="MIMO interference-channel formula cross-check")
    for name in ("M1", "N1", "M2", "N2"):
        p.add_argument(name, type=int)
    p.add_argument("--simulate", action="store_true",
                   help="also run the block-model scheme on the Z-channel analogue")
    return parser


def _apply_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    grid_kwargs = {}
    if args.oversampling is not None:
        grid_kwargs["oversampling"] = args.oversampling
    if args.grid_n is not None:
        grid_kwargs["n_wavevector"] = args.grid_n
    changes: dict[str, Any] = {}
    if grid_kwargs:
        try:
            changes["grid"] = replace(cfg.grid, **grid_kwargs)
        except ValueError as exc:
            raise ConfigError(f"grid: {exc}") from exc
    if args.mode is not None:
        changes["mode"] = args.mode
    if args.seed is not None:
        changes["seeds"] = [args.seed]
    if args.out is not None:
        changes["output_dir"] = args.out
    if args.leakage_floor_db is not None:
        changes["leakage_floor_db"] = args.leakage_floor_db
    if args.jobs is not None:
        changes["jobs"] = args.jobs
    return replace(cfg, **changes) if changes else cfg


COMMANDS = {"region": cmd_region, "corners": cmd_corners,
            "simulate": cmd_simulate, "sweep": cmd_sweep}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "mimo-check":
            return cmd_mimo_check(args.M1, args.N1, args.M2, args.N2, args.simulate)
        cfg = _apply_overrides(load_config(args.config), args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonIntegerDimensionError as exc:
        print(f"infeasible geometry: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


def main_exit() -> None:
    sys.exit(main())
