"""Plain-text run configuration: parsing, validation, serialization.

Format: bracketed section headers with ``key = value`` lines; the
``[soliton]`` section repeats once per soliton.  Example::

    [model]
    m = 1.0
    p = 3.0
    d = 1

    [grid]
    length = 160.0
    points = 2048

    [integrator]
    dt = 0.002
    dealias = false

    [soliton]
    omega = 0.8
    v = -0.4

    [soliton]
    omega = 0.8
    v = 0.4

    [experiment]
    t_final = 40.0
    t_start = 10.0
    diag_period = 0.5
    out_dir = runs/two

Validation collects every violation before failing, so a bad file reports
all its problems at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .experiments import MultiSolitonConfig
from .grids import Grid
from .profiles import ModelParams, SolitonParams

__all__ = ["RunConfig", "ConfigError", "parse_config", "serialize_config"]


class ConfigError(ValueError):
    """Syntax or semantic violations; ``problems`` lists all of them."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))


@dataclass
class RunConfig:
    m: float = 1.0
    p: float = 3.0
    d: int = 1
    length: float = 160.0
    points: int = 2048
    dt: float = 0.002
    dealias: bool = False
    solitons: list[dict] = field(default_factory=list)
    t_final: float = 40.0
    t_start: float = 10.0
    diag_period: float = 0.5
    out_dir: str = "."
    seed: int = 0
    stability_warnings: list[str] = field(default_factory=list)

    def model(self) -> ModelParams:
        return ModelParams(self.m, self.p, self.d)

    def grid(self) -> Grid:
        return Grid(self.length, self.points)

    def soliton_params(self) -> list[SolitonParams]:
        model = self.model()
        return [
            SolitonParams(
                model,
                omega=s["omega"],
                theta=s.get("theta", 0.0),
                v=s.get("v", 0.0),
                x0=s.get("x0", 0.0),
            )
            for s in self.solitons
        ]

    def experiment(self) -> MultiSolitonConfig:
        return MultiSolitonConfig(
            model=self.model(),
            grid=self.grid(),
            solitons=self.soliton_params(),
            t_final=self.t_final,
            t_start=self.t_start,
            dt=self.dt,
            diag_period=self.diag_period,
            dealias=self.dealias,
            seed=self.seed,
        )


_SECTION_KEYS = {
    "model": {"m": float, "p": float, "d": int},
    "grid": {"length": float, "points": int},
    "integrator": {"dt": float, "dealias": bool},
    "soliton": {"omega": float, "theta": float, "v": float, "x0": float},
    "experiment": {
        "t_final": float,
        "t_start": float,
        "diag_period": float,
        "out_dir": str,
        "seed": int,
    },
}


def _convert(raw: str, typ, lineno: int, problems: list[str]):
    raw = raw.strip()
    try:
        if typ is bool:
            if raw.lower() in ("true", "yes", "1", "on"):
                return True
            if raw.lower() in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        return typ(raw)
    except ValueError:
        problems.append(f"line {lineno}: cannot parse {raw!r} as {typ.__name__}")
        return None


def parse_config(text: str) -> RunConfig:
    """Parse and validate; raises ConfigError listing every violation."""
    problems: list[str] = []
    cfg = RunConfig()
    cfg.solitons = []
    section: Optional[str] = None
    current_soliton: Optional[dict] = None

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip().lower()
            if section not in _SECTION_KEYS:
                problems.append(f"line {lineno}: unknown section [{section}]")
                section = None
                current_soliton = None
                continue
            if section == "soliton":
                current_soliton = {}
                cfg.solitons.append(current_soliton)
            else:
                current_soliton = None
            continue
        if "=" not in stripped:
            problems.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        if section is None:
            problems.append(f"line {lineno}: key outside of any section")
            continue
        key, raw = (part.strip() for part in stripped.split("=", 1))
        keys = _SECTION_KEYS[section]
        if key not in keys:
            problems.append(f"line {lineno}: unknown key {key!r} in section [{section}]")
            continue
        val = _convert(raw, keys[key], lineno, problems)
        if val is None:
            continue
        if section == "soliton":
            current_soliton[key] = val
        elif section == "experiment" and key == "out_dir":
            cfg.out_dir = val
        else:
            setattr(cfg, key, val)

    _validate(cfg, problems)
    if problems:
        raise ConfigError(problems)
    return cfg


def _validate(cfg: RunConfig, problems: list[str]) -> None:
    if cfg.m <= 0:
        problems.append(f"model.m must be positive (got {cfg.m})")
    if cfg.d not in (1, 2, 3):
        problems.append(f"model.d must be 1, 2 or 3 (got {cfg.d})")
    elif not 1.0 < cfg.p < 1.0 + 4.0 / cfg.d:
        problems.append(
            f"model.p={cfg.p} outside the subcritical window (1, 1+4/d) for d={cfg.d}"
        )
    if cfg.length <= 0:
        problems.append(f"grid.length must be positive (got {cfg.length})")
    if cfg.points <= 0:
        problems.append(f"grid.points must be positive (got {cfg.points})")
    if cfg.dt == 0:
        problems.append("integrator.dt must be nonzero")
    elif cfg.points > 0 and cfg.length > 0 and abs(cfg.dt) > 0.5 * cfg.length / cfg.points:
        problems.append(
            f"integrator.dt={cfg.dt} exceeds the stability heuristic 0.5*spacing="
            f"{0.5 * cfg.length / cfg.points}"
        )
    if cfg.t_final <= cfg.t_start:
        problems.append(
            f"experiment.t_final={cfg.t_final} must exceed t_start={cfg.t_start}"
        )
    if cfg.diag_period <= 0:
        problems.append(f"experiment.diag_period must be positive (got {cfg.diag_period})")

    sqm = math.sqrt(cfg.m) if cfg.m > 0 else float("nan")
    threshold = (
        1.0 / (1.0 + 4.0 / (cfg.p - 1.0) - cfg.d) if cfg.p > 1 and cfg.d in (1, 2, 3) else None
    )
    for i, s in enumerate(cfg.solitons, start=1):
        if "omega" not in s:
            problems.append(f"soliton #{i}: missing required key 'omega'")
            continue
        if cfg.m > 0 and abs(s["omega"]) >= sqm:
            problems.append(
                f"soliton #{i}: |omega|={abs(s['omega'])} not below sqrt(m)={sqm}"
            )
        v = s.get("v", 0.0)
        if abs(v) >= 1.0:
            problems.append(f"soliton #{i}: |v|={abs(v)} not below the speed of light 1")
        if threshold is not None and cfg.m > 0 and s["omega"] ** 2 / cfg.m <= threshold:
            cfg.stability_warnings.append(
                f"soliton #{i}: omega^2/m={s['omega'] ** 2 / cfg.m:.4f} <= "
                f"{threshold:.4f}, outside the orbital-stability window"
            )
    vels = [s.get("v", 0.0) for s in cfg.solitons]
    for j in range(len(vels)):
        for k in range(j + 1, len(vels)):
            if vels[j] == vels[k]:
                problems.append(
                    f"solitons #{j + 1} and #{k + 1} share velocity v={vels[j]}: "
                    "the construction requires pairwise distinct velocities"
                )


def serialize_config(cfg: RunConfig) -> str:
    """Fully resolved round-trippable text form (written next to run outputs)."""
    lines = [
        "[model]",
        f"m = {cfg.m!r}",
        f"p = {cfg.p!r}",
        f"d = {cfg.d}",
        "",
        "[grid]",
        f"length = {cfg.length!r}",
        f"points = {cfg.points}",
        "",
        "[integrator]",
        f"dt = {cfg.dt!r}",
        f"dealias = {str(cfg.dealias).lower()}",
    ]
    for s in cfg.solitons:
        lines += [
            "",
            "[soliton]",
            f"omega = {s['omega']!r}",
            f"theta = {s.get('theta', 0.0)!r}",
            f"v = {s.get('v', 0.0)!r}",
            f"x0 = {s.get('x0', 0.0)!r}",
        ]
    lines += [
        "",
        "[experiment]",
        f"t_final = {cfg.t_final!r}",
        f"t_start = {cfg.t_start!r}",
        f"diag_period = {cfg.diag_period!r}",
        f"out_dir = {cfg.out_dir}",
        f"seed = {cfg.seed}",
        "",
    ]
    return "\n".join(lines)
