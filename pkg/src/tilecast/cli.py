"""Command-line entry point.

    tilecast run <experiment> --config <path> [--out <dir>] [--seeds a,b,c] [--parallel]

Config files are flat `section.key = value` pairs (comments with #); field
names follow the simulation-parameter symbols. All randomness flows from the
configured seeds, and every experiment writes one CSV that is byte-identical
across reruns of the same config.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, ConfigParseError
from .experiments import EXPERIMENTS, ExperimentConfig, default_config
from .qoe import RateGrid
from .scenario import CellConfig
from .tiling import Grid


def parse_config_text(text: str) -> dict[str, str]:
    """Parse `key = value` lines into a flat mapping, tracking line numbers."""
    table: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected 'key = value', got {raw.strip()!r}", line_no)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigParseError("empty key", line_no)
        if key in table:
            raise ConfigParseError(f"duplicate key {key!r}", line_no)
        table[key] = value
    return table


def _shape(value: str) -> tuple[int, int]:
    w, _, h = value.lower().partition("x")
    try:
        return int(w), int(h)
    except ValueError as exc:
        raise ConfigError(f"expected WxH shape, got {value!r}") from exc


def _shapes(value: str) -> tuple[tuple[int, int], ...]:
    return tuple(_shape(part) for part in value.split(",") if part.strip())


def _floats(value: str) -> tuple[float, ...]:
    return tuple(float(part) for part in value.split(",") if part.strip())


def _ints(value: str) -> tuple[int, ...]:
    return tuple(int(part) for part in value.split(",") if part.strip())


def build_config(table: dict[str, str]) -> ExperimentConfig:
    """Assemble an ExperimentConfig from parsed key/value pairs."""
    base = default_config(seeds=(1,))

    def get(key, cast, default):
        return cast(table[key]) if key in table else default

    cell = CellConfig(
        N=get("cell.N", int, base.cell.N),
        K=get("cell.K", int, base.cell.K),
        r1=get("cell.r1", float, base.cell.r1),
        r2=get("cell.r2", float, base.cell.r2),
        c=get("cell.c", float, base.cell.c),
        kappa=get("cell.kappa", float, base.cell.kappa),
        noise_density=get("cell.sigma2", float, base.cell.noise_density),
        P_u=get("cell.P_u", float, base.cell.P_u),
        P_d=get("cell.P_d", float, base.cell.P_d),
        W=get("cell.W", float, base.cell.W),
        C_B=get("cell.C_B", float, base.cell.C_B),
        C_T=get("cell.C_T", float, base.cell.C_T),
        T=get("cell.T", int, None) or int(get("cell.C_B", float, base.cell.C_B) * get("cell.C_T", float, base.cell.C_T)),
    )
    grid_w, grid_h = get("tiling.grid", _shape, (base.grid.H + 1, base.grid.V + 1))
    seeds = get("seeds", _ints, ())
    if not seeds:
        raise ConfigError("config must list at least one seed (key: seeds)")
    return ExperimentConfig(
        cell=cell,
        grid=Grid.from_size(grid_w, grid_h),
        fov=get("tiling.fov", _shape, base.fov),
        scope=get("tiling.scope", _shape, base.scope),
        sched_times=(
            get("sched.T_1", float, base.sched_times[0]),
            get("sched.T_2", float, base.sched_times[1]),
            get("sched.T_y", float, base.sched_times[2]),
        ),
        rate_grid=RateGrid(
            delta=get("rates.delta", float, base.rate_grid.delta),
            D=get("rates.D", int, base.rate_grid.D),
        ),
        L=get("viewports.L", int, base.L),
        beta_bars=get("sweep.beta_bar", _floats, base.beta_bars),
        scopes=get("sweep.scopes", _shapes, base.scopes),
        formats=get("sweep.formats", _shapes, base.formats),
        precoders=tuple(
            p.strip().lower() for p in table.get("sweep.precoders", "mrt,zf").split(",") if p.strip()
        ),
        qoe_precoder=table.get("qoe.precoder", base.qoe_precoder).strip().lower(),
        mc_trials=get("mc.trials", int, base.mc_trials),
        mc_groups=get("mc.groups", int, base.mc_groups),
        seeds=seeds,
    )


def load_config(path) -> ExperimentConfig:
    return build_config(parse_config_text(Path(path).read_text()))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tilecast",
        description="Tiled 360-degree video multicast experiments on a massive MIMO downlink",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a named experiment")
    run_p.add_argument("experiment", help=f"one of: {', '.join(sorted(EXPERIMENTS))}")
    run_p.add_argument("--config", required=True, help="path to a key/value config file")
    run_p.add_argument("--out", default="out", help="output directory for CSV artifacts")
    run_p.add_argument("--seeds", default=None, help="comma-separated seed override")
    run_p.add_argument("--parallel", action="store_true", help="run seeds concurrently")
    args = parser.parse_args(argv)

    if args.experiment not in EXPERIMENTS:
        print(
            f"tilecast: unknown experiment {args.experiment!r}; "
            f"choose from {', '.join(sorted(EXPERIMENTS))}",
            file=sys.stderr,
        )
        return 2
    try:
        cfg = load_config(args.config)
        if args.seeds is not None:
            seeds = _ints(args.seeds)
            if not seeds:
                raise ConfigError("--seeds override must be non-empty")
            cfg = replace(cfg, seeds=seeds)
        if args.parallel:
            cfg = replace(cfg, parallel=True)
    except (ConfigParseError, ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"tilecast: config error: {exc}", file=sys.stderr)
        return 1
    path = EXPERIMENTS[args.experiment](cfg, Path(args.out))
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
