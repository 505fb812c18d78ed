"""Experiment configuration: INI text with one section per stage.

Example::

    [model]
    model = 1
    d_n = 0.1
    d_c = 1.0
    r = 1.0
    chi0_excess = 0.1      # or: chi0 = 1.83

    [domain]
    L = auto               # half the critical wavelength
    N = 64

    [ic]
    mode = 1               # or: seed = 7
    amplitude = 0.01

    [tolerances]
    steady_tol = 1e-9
    t_max = 10000
    solver_tol = 1e-8
    recovery_tol = 0.1

    [inverse]
    M = 3
    equations = printed
    fixed =                # e.g. "k, r" or "r=1.0"

    [dispersion]
    m_max = 16
    chi0_sweep =           # start:stop:count

    [output]
    dir = out
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .pde import PdeCoefficients, critical_chi0, most_unstable_q
from .residuals import PARAM_NAMES, Model, ModelParams


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    model: Model
    d_n: float
    d_c: float
    chi0: float
    r: float
    L: float
    N: int = 64
    mode: int | None = 1
    seed: int | None = None
    amplitude: float = 1e-2
    steady_tol: float = 1e-9
    t_max: float = 1e4
    solver_tol: float = 1e-8
    recovery_tol: float | None = None
    M: int | None = None
    equations: str = "printed"
    fixed: dict = field(default_factory=dict)
    m_max: int = 16
    chi0_sweep: tuple[float, float, int] | None = None
    out_dir: Path = Path("out")
    source: str = "<config>"

    @property
    def truncation(self) -> int:
        if self.M is not None:
            return self.M
        return 3 if self.model is Model.ONE else 2

    @property
    def tolerance(self) -> float:
        if self.recovery_tol is not None:
            return self.recovery_tol
        return 0.10 if self.model is Model.ONE else 0.15

    def params(self, k: float | None = None) -> ModelParams:
        """True parameters; ``k`` defaults to the fundamental domain mode."""
        return ModelParams(self.model, self.d_n, self.d_c, self.chi0, self.r, k or math.pi / self.L)

    def coefficients(self) -> PdeCoefficients:
        """PDE coefficients; unlike :meth:`params` these allow ``chi0 = 0``."""
        return PdeCoefficients(self.model, self.d_n, self.d_c, self.chi0, self.r)


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[(.+)\]", s)
        if m:
            current = m.group(1).strip().lower()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s, re.IGNORECASE):
            return no
    return None


class _Reader:
    def __init__(self, cp: configparser.ConfigParser, text: str, source: str):
        self.cp, self.text, self.source = cp, text, source

    def fail(self, section, key, msg):
        line = _line_of(self.text, section, key)
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: [{section}] {key}: {msg}")

    def raw(self, section, key):
        if not self.cp.has_option(section, key):
            return None
        v = self.cp.get(section, key).strip()
        return v or None

    def number(self, section, key, default=None, kind=float, positive=False, required=False):
        v = self.raw(section, key)
        if v is None:
            if required:
                raise ConfigError(f"{self.source}: [{section}] {key}: missing")
            return default
        try:
            out = kind(v)
        except ValueError:
            self.fail(section, key, f"expected {kind.__name__}, got {v!r}")
        if kind is float and not math.isfinite(out):
            self.fail(section, key, "must be finite")
        if positive and not out > 0:
            self.fail(section, key, f"must be positive, got {v}")
        return out


def parse_fixed(spec: str | None) -> dict:
    """``"k, r=1.5"`` -> ``{"k": None, "r": 1.5}``; ``None`` means pin to the known value."""
    out = {}
    if not spec:
        return out
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        name, _, value = item.partition("=")
        name = name.strip()
        if name not in PARAM_NAMES:
            raise ConfigError(f"cannot fix unknown parameter {name!r}")
        out[name] = float(value) if value.strip() else None
    return out


def loads(text: str, source: str = "<config>") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    rd = _Reader(cp, text, source)
    if not cp.has_section("model"):
        raise ConfigError(f"{source}: missing [model] section")

    model_no = rd.number("model", "model", 1, int)
    if model_no not in (1, 2):
        rd.fail("model", "model", f"must be 1 or 2, got {model_no}")
    model = Model(model_no)
    d_n = rd.number("model", "d_n", kind=float, positive=True, required=True)
    d_c = rd.number("model", "d_c", kind=float, positive=True, required=True)
    r = rd.number("model", "r", kind=float, positive=True, required=True)

    L_raw = rd.raw("domain", "L") or "auto"
    if L_raw.lower() == "auto":
        L = math.pi / most_unstable_q(d_n, d_c, r)
    else:
        L = rd.number("domain", "L", kind=float, positive=True)
    N = rd.number("domain", "N", 64, int)
    if N < 64:
        rd.fail("domain", "N", f"need at least 64 cells, got {N}")

    chi0 = rd.number("model", "chi0", kind=float)
    excess = rd.number("model", "chi0_excess", kind=float)
    if (chi0 is None) == (excess is None):
        raise ConfigError(f"{source}: [model] give exactly one of chi0, chi0_excess")
    if chi0 is None:
        chi0 = critical_chi0(d_n, d_c, r, math.pi / L) * (1.0 + excess)
    if chi0 < 0:
        rd.fail("model", "chi0", "must be non-negative")

    seed = rd.number("ic", "seed", None, int)
    mode = rd.number("ic", "mode", None if seed is not None else 1, int)
    if mode is not None and mode < 1:
        rd.fail("ic", "mode", "must be >= 1")

    equations = rd.raw("inverse", "equations") or "printed"
    if equations not in ("printed", "galerkin"):
        rd.fail("inverse", "equations", f"must be 'printed' or 'galerkin', got {equations!r}")
    try:
        fixed = parse_fixed(rd.raw("inverse", "fixed"))
    except (ConfigError, ValueError) as exc:
        rd.fail("inverse", "fixed", str(exc))

    sweep = None
    sweep_raw = rd.raw("dispersion", "chi0_sweep")
    if sweep_raw:
        parts = sweep_raw.split(":")
        try:
            sweep = (float(parts[0]), float(parts[1]), int(parts[2]))
        except (IndexError, ValueError):
            rd.fail("dispersion", "chi0_sweep", f"expected start:stop:count, got {sweep_raw!r}")

    return ExperimentConfig(
        model=model,
        d_n=d_n,
        d_c=d_c,
        chi0=chi0,
        r=r,
        L=L,
        N=N,
        mode=mode,
        seed=seed,
        amplitude=rd.number("ic", "amplitude", 1e-2, float, positive=True),
        steady_tol=rd.number("tolerances", "steady_tol", 1e-9, float, positive=True),
        t_max=rd.number("tolerances", "t_max", 1e4, float, positive=True),
        solver_tol=rd.number("tolerances", "solver_tol", 1e-8, float, positive=True),
        recovery_tol=rd.number("tolerances", "recovery_tol", None, float, positive=True),
        M=rd.number("inverse", "M", None, int, positive=True),
        equations=equations,
        fixed=fixed,
        m_max=rd.number("dispersion", "m_max", 16, int, positive=True),
        chi0_sweep=sweep,
        out_dir=Path(rd.raw("output", "dir") or "out"),
        source=source,
    )


def load(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return loads(text, str(path))
