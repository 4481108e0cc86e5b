"""Run configuration and on-disk formats.

The configuration file is a restricted YAML tree: nested mappings with
scalar leaves, no anchors or custom tags. Every key has a default, unknown
keys are rejected (anti-typo), and the full grammar is documented in the
README. Snapshots are CSV with one row per lattice point and 17
significant digits, so repeated runs with the same configuration are
byte-identical; a raw ``npz`` mode exists for large 2D sweeps.
"""
from __future__ import annotations

import copy
import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .entropy_scheme import SchemeConfig
from .errors import ConfigurationError
from .explicit import ExplicitConfig
from .grid import Grid, coordinates, make_grid
from .model import FieldPair, ModelParams

SNAPSHOT_PATTERN = re.compile(r"snap_t(\d+\.\d{4})\.(csv|npz)$")


def default_config() -> dict:
    """Canonical defaults; every legal key appears here."""
    return {
        "grid": {"dim": 1, "min": 0.0, "max": 200.0, "spacing": 0.1},
        "model": {"lambda": 1.0, "m0": 0.5},
        "ic": {"kind": "step", "sigma": 5.0, "seed": None, "mean": None},
        "scheme": "explicit",
        "t_end": 100.0,
        "snapshot_interval": 1.0,
        "seed": 0,
        "output_dir": "runs",
        "snapshot_format": "csv",
        "explicit": {
            "integrator": "rk45_adaptive",
            "dt_init": 1.0e-4,
            "dt_max": 1.0,
            "rel_tol": 1.0e-10,
            "abs_tol": 1.0e-13,
            "box_tol": 1.0e-8,
        },
        "entropy": {
            "tau": 0.1,
            "picard_tol": 1.0e-10,
            "picard_max_iter": 200,
            "inner_m_tol": 1.0e-12,
            "inner_m_max_iter": 200,
            "linear_solver_tol": 1.0e-11,
            "linear_solver_max_iter": 50000,
        },
        "crosscheck": {
            "taus": [1.0e-2, 5.0e-3, 2.5e-3],
            "t_end": 5.0,
            "rel_tol": 1.0e-10,
            "abs_tol": 1.0e-13,
        },
    }


@dataclass
class RunConfig:
    grid: Grid
    params: ModelParams
    scheme: str
    explicit_cfg: ExplicitConfig
    entropy_cfg: SchemeConfig
    ic: dict
    t_end: float
    snapshot_interval: float
    seed: int
    output_dir: str
    snapshot_format: str
    crosscheck: dict
    tree: dict  # merged canonical key tree, used for hashing and reruns


def _merge_checked(defaults: dict, user: dict, path: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for key, value in user.items():
        if key not in defaults:
            raise ConfigurationError(f"unknown config key {path + str(key)!r}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigurationError(f"config key {path + str(key)!r} must be a mapping")
            out[key] = _merge_checked(defaults[key], value, path + str(key) + ".")
        else:
            out[key] = value
    return out


def _parse_yaml(text: str, source: str) -> dict:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigurationError(f"cannot parse {source}{where}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{source} must contain a mapping at the top level")
    return data


def apply_overrides(tree: dict, overrides: list[str]) -> dict:
    """Apply repeatable ``key.path=value`` overrides onto a merged tree."""
    tree = copy.deepcopy(tree)
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not of the form key=value")
        dotted, raw_value = item.split("=", 1)
        value = yaml.safe_load(raw_value)
        node = tree
        parts = dotted.strip().split(".")
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                raise ConfigurationError(f"unknown config key {dotted!r}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigurationError(f"unknown config key {dotted!r}")
        node[parts[-1]] = value
    return tree


def build_run_config(tree: dict, *, allow_both_scheme_blocks: bool = False,
                     given_blocks: set[str] | None = None) -> RunConfig:
    """Validate a merged tree and build the typed configuration."""
    scheme = tree["scheme"]
    if scheme not in ("explicit", "entropy"):
        raise ConfigurationError(f"scheme must be 'explicit' or 'entropy', got {scheme!r}")
    if given_blocks and not allow_both_scheme_blocks and len(given_blocks) > 1:
        raise ConfigurationError(
            "config supplies both 'explicit' and 'entropy' blocks; a run uses "
            "exactly one (the crosscheck command accepts both)"
        )
    if given_blocks and not allow_both_scheme_blocks and given_blocks != {scheme}:
        raise ConfigurationError(
            f"scheme is {scheme!r} but the config block given is for "
            f"{next(iter(given_blocks))!r}"
        )
    g = tree["grid"]
    try:
        grid = make_grid(g["dim"], g["min"], g["max"], g["spacing"])
    except ConfigurationError as exc:
        raise ConfigurationError(f"grid: {exc}") from exc
    try:
        params = ModelParams(lam=float(tree["model"]["lambda"]), m0=float(tree["model"]["m0"]))
    except ConfigurationError as exc:
        raise ConfigurationError(f"model: {exc}") from exc
    t_end = float(tree["t_end"])
    snapshot_interval = float(tree["snapshot_interval"])
    try:
        explicit_cfg = ExplicitConfig(
            t_end=t_end, snapshot_interval=snapshot_interval, **tree["explicit"]
        )
        entropy_cfg = SchemeConfig(**tree["entropy"])
    except (ConfigurationError, TypeError) as exc:
        raise ConfigurationError(str(exc)) from exc
    if scheme == "entropy":
        entropy_cfg.check_contraction(params)
    if tree["ic"]["kind"] not in ("step", "random_gaussian", "sinusoidal"):
        raise ConfigurationError(f"ic.kind: unknown ic kind {tree['ic']['kind']!r}")
    if tree["snapshot_format"] not in ("csv", "npz"):
        raise ConfigurationError("snapshot_format must be 'csv' or 'npz'")
    ic_spec = dict(tree["ic"])
    if ic_spec.get("mean") is None:
        ic_spec.pop("mean", None)
    if ic_spec.get("seed") is None:
        ic_spec["seed"] = int(tree["seed"])  # ic seed falls back to the run seed
    return RunConfig(
        grid=grid,
        params=params,
        scheme=scheme,
        explicit_cfg=explicit_cfg,
        entropy_cfg=entropy_cfg,
        ic=ic_spec,
        t_end=t_end,
        snapshot_interval=snapshot_interval,
        seed=int(tree["seed"]),
        output_dir=str(tree["output_dir"]),
        snapshot_format=str(tree["snapshot_format"]),
        crosscheck=dict(tree["crosscheck"]),
        tree=tree,
    )


def load_config_tree(path) -> tuple[dict, set[str]]:
    """Parse and merge a config file; returns the tree and which scheme blocks
    it customised (a block left at its defaults does not count as given)."""
    path = Path(path)
    user = _parse_yaml(path.read_text(), str(path))
    defaults = default_config()
    tree = _merge_checked(defaults, user)
    given = {k for k in ("explicit", "entropy") if k in user and tree[k] != defaults[k]}
    return tree, given


def load_config(path, overrides: list[str] | None = None,
                allow_both_scheme_blocks: bool = False) -> RunConfig:
    """Load, merge with defaults, apply overrides, validate."""
    tree, given = load_config_tree(path)
    if overrides:
        tree = apply_overrides(tree, overrides)
    return build_run_config(
        tree, allow_both_scheme_blocks=allow_both_scheme_blocks, given_blocks=given
    )


def config_hash(tree: dict) -> str:
    canonical = json.dumps(tree, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def dump_config(tree: dict, path) -> Path:
    path = Path(path)
    path.write_text(yaml.safe_dump(tree, sort_keys=True))
    return path


def snapshot_filename(time: float, fmt: str = "csv") -> str:
    return f"snap_t{time:012.4f}.{'csv' if fmt == 'csv' else 'npz'}"


def write_snapshot(fields: FieldPair, time: float, grid: Grid, output_dir,
                   fmt: str = "csv") -> Path:
    """One row per lattice point, 17 significant digits, header x[,y],u,m."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / snapshot_filename(time, fmt)
    u = grid.check_field(fields.u, "u")
    m = grid.check_field(fields.m, "m")
    if fmt == "npz":
        np.savez(path, time=time, u=u, m=m)
        return path
    coords = coordinates(grid)
    if grid.dim == 1:
        data = np.column_stack([coords, u.ravel(), m.ravel()])
        header = "x,u,m"
    else:
        data = np.column_stack([coords, u.ravel(), m.ravel()])
        header = "x,y,u,m"
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=header, comments="")
    return path


def read_snapshot(path, grid: Grid) -> tuple[float, FieldPair]:
    path = Path(path)
    match = SNAPSHOT_PATTERN.search(path.name)
    if not match:
        raise ConfigurationError(f"{path.name} is not a snapshot file")
    time = float(match.group(1))
    if path.suffix == ".npz":
        data = np.load(path)
        return time, FieldPair(data["u"], data["m"])
    table = np.loadtxt(path, delimiter=",", skiprows=1)
    u = table[:, grid.dim].reshape(grid.shape)
    m = table[:, grid.dim + 1].reshape(grid.shape)
    return time, FieldPair(u, m)


def list_snapshots(run_dir) -> list[Path]:
    run_dir = Path(run_dir)
    return sorted(p for p in run_dir.iterdir() if SNAPSHOT_PATTERN.search(p.name))


def write_diagnostics(rows: list[list[float]], columns: list[str], path) -> Path:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return path


def write_sweep_summary(results: list[dict], path) -> Path:
    """JSON array of wave-speed records, sorted by lambda ascending."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ordered = sorted(results, key=lambda r: r.get("lambda", 0.0))
    path.write_text(json.dumps(ordered, indent=2) + "\n")
    return path


def write_run_summary(summary: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(summary, indent=2, default=float) + "\n")
    return path
