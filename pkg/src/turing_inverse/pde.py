"""Finite-volume method-of-lines solver and linear stability scan.

Cell-centred grid on ``[0, L]`` with mirrored ghost cells, so both the diffusive and
the chemotactic flux vanish at the walls.  Time integration is classical RK4 with a
fixed step; the loop is compiled with numba.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .residuals import Model, ModelParams


class SimulationError(RuntimeError):
    pass


class BlowUp(SimulationError):
    pass


class SteadyStateTimeout(SimulationError):
    def __init__(self, message, state):
        super().__init__(message)
        self.state = state


class InvalidField(SimulationError):
    pass


@dataclass(frozen=True)
class PdeCoefficients:
    """Coefficients of the time-dependent problem.

    Unlike :class:`ModelParams` this allows ``chi0 = 0`` (no chemotaxis) and
    ``r = 0`` (no growth); there is no wavenumber.  Every solver entry point
    accepts either type.
    """

    model: Model
    d_n: float
    d_c: float
    chi0: float
    r: float

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        for name in ("d_n", "d_c", "chi0", "r"):
            v = getattr(self, name)
            strict = name in ("d_n", "d_c")
            if not (math.isfinite(v) and (v > 0 if strict else v >= 0)):
                raise ValueError(f"{name} must be {'positive' if strict else 'non-negative'}, got {v!r}")


Coefficients = ModelParams | PdeCoefficients


@dataclass(frozen=True)
class Grid1D:
    L: float
    N: int

    def __post_init__(self):
        if self.N < 64:
            raise ValueError(f"grid needs N >= 64 cells, got {self.N}")
        if not self.L > 0:
            raise ValueError("domain length must be positive")

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.N) + 0.5) * self.dx


@dataclass
class FieldPair:
    n: np.ndarray
    c: np.ndarray
    time: float = 0.0
    rate_norm: float = math.nan

    def copy(self) -> "FieldPair":
        return FieldPair(self.n.copy(), self.c.copy(), self.time, self.rate_norm)


@dataclass
class DispersionReport:
    m: np.ndarray
    q_values: np.ndarray
    growth: np.ndarray
    q_star: float
    m_star: int
    unstable: bool


@njit(cache=True)
def _rates(n, c, d_n, d_c, chi0, r, dx, ratio, dn_out, dc_out):
    N = n.size
    inv_dx = 1.0 / dx
    # net n and c fluxes through the interior faces; wall faces carry zero flux
    fn_prev = 0.0
    fc_prev = 0.0
    for j in range(N):
        if j < N - 1:
            grad_c = (c[j + 1] - c[j]) * inv_dx
            if ratio:
                mob = 0.5 * (n[j] / c[j] + n[j + 1] / c[j + 1])
            else:
                mob = 0.5 * (n[j] + n[j + 1])
            fn = -d_n * (n[j + 1] - n[j]) * inv_dx + chi0 * mob * grad_c
            fc = -d_c * grad_c
        else:
            fn = 0.0
            fc = 0.0
        dn_out[j] = -(fn - fn_prev) * inv_dx + r * n[j] * (1.0 - n[j])
        dc_out[j] = -(fc - fc_prev) * inv_dx + n[j] - c[j]
        fn_prev = fn
        fc_prev = fc


@njit(cache=True)
def _rk4_steps(n, c, d_n, d_c, chi0, r, dx, ratio, dt, steps):
    N = n.size
    k1n = np.empty(N); k1c = np.empty(N)
    k2n = np.empty(N); k2c = np.empty(N)
    k3n = np.empty(N); k3c = np.empty(N)
    k4n = np.empty(N); k4c = np.empty(N)
    tn = np.empty(N); tc = np.empty(N)
    h = 0.5 * dt
    w = dt / 6.0
    for _ in range(steps):
        _rates(n, c, d_n, d_c, chi0, r, dx, ratio, k1n, k1c)
        for j in range(N):
            tn[j] = n[j] + h * k1n[j]
            tc[j] = c[j] + h * k1c[j]
        _rates(tn, tc, d_n, d_c, chi0, r, dx, ratio, k2n, k2c)
        for j in range(N):
            tn[j] = n[j] + h * k2n[j]
            tc[j] = c[j] + h * k2c[j]
        _rates(tn, tc, d_n, d_c, chi0, r, dx, ratio, k3n, k3c)
        for j in range(N):
            tn[j] = n[j] + dt * k3n[j]
            tc[j] = c[j] + dt * k3c[j]
        _rates(tn, tc, d_n, d_c, chi0, r, dx, ratio, k4n, k4c)
        for j in range(N):
            n[j] += w * (k1n[j] + 2.0 * k2n[j] + 2.0 * k3n[j] + k4n[j])
            c[j] += w * (k1c[j] + 2.0 * k2c[j] + 2.0 * k3c[j] + k4c[j])
        if not (np.isfinite(n[0]) and np.isfinite(c[0])):
            return False
    return True


def _check_fields(model: Model, f: FieldPair, evolving: bool = False):
    if not (np.all(np.isfinite(f.n)) and np.all(np.isfinite(f.c))):
        raise BlowUp(f"non-finite field at t = {f.time:.6g}")
    if Model(model) is Model.TWO and np.any(f.c <= 0):
        raise InvalidField("chemical concentration must stay positive for Model 2")
    if evolving and (np.any(f.n < 0) or np.any(f.c < 0)):
        raise InvalidField(f"negative density or concentration at t = {f.time:.6g}")


def rhs(model: Model, p: Coefficients, f: FieldPair, g: Grid1D) -> FieldPair:
    """Semi-discrete rates ``(dn/dt, dc/dt)`` as a :class:`FieldPair`."""
    model = Model(model)
    _check_fields(model, f)
    dn = np.empty(g.N)
    dc = np.empty(g.N)
    _rates(
        np.ascontiguousarray(f.n, dtype=float), np.ascontiguousarray(f.c, dtype=float),
        p.d_n, p.d_c, p.chi0, p.r, g.dx, model is Model.TWO, dn, dc,
    )
    return FieldPair(dn, dc, f.time)


def rate_norm(model: Model, p: Coefficients, f: FieldPair, g: Grid1D) -> float:
    """``max|rate| / max(|field|, 1)`` over both components."""
    rates = rhs(model, p, f, g)
    num = max(np.max(np.abs(rates.n)), np.max(np.abs(rates.c)))
    den = max(np.max(np.abs(f.n)), np.max(np.abs(f.c)), 1.0)
    return float(num / den)


def stable_dt(p: Coefficients, g: Grid1D, c_max: float, cfl: float = 0.2) -> float:
    """Fixed RK4 step: ``cfl * dx**2 / max(d_n, d_c, chi0 * c_max)``."""
    return cfl * g.dx**2 / max(p.d_n, p.d_c, p.chi0 * c_max)


@dataclass
class SteadyOptions:
    steady_tol: float = 1e-9
    t_max: float = 1e4
    check_every: float = 1.0
    cfl: float = 0.2
    dt: float | None = None


def step_to_steady(
    model: Model,
    p: Coefficients,
    g: Grid1D,
    ic: FieldPair,
    opts: SteadyOptions | None = None,
) -> FieldPair:
    """Integrate with RK4 until the relative rate norm drops below ``steady_tol``.

    Raises :class:`BlowUp` on non-finite values and :class:`SteadyStateTimeout`
    (carrying the last state) once ``t_max`` passes without convergence.
    """
    model = Model(model)
    opts = opts or SteadyOptions()
    state = ic.copy()
    state.n = np.ascontiguousarray(state.n, dtype=float)
    state.c = np.ascontiguousarray(state.c, dtype=float)
    _check_fields(model, state)
    ratio = model is Model.TWO

    norm = rate_norm(model, p, state, g)
    while norm >= opts.steady_tol:
        if state.time >= opts.t_max:
            state.rate_norm = norm
            raise SteadyStateTimeout(
                f"no steady state by t = {state.time:.6g} (rate norm {norm:.3e})", state
            )
        dt = opts.dt or stable_dt(p, g, float(np.max(state.c)), opts.cfl)
        chunk = max(1, int(round(opts.check_every / dt)))
        ok = _rk4_steps(state.n, state.c, p.d_n, p.d_c, p.chi0, p.r, g.dx, ratio, dt, chunk)
        state.time += chunk * dt
        if not ok:
            raise BlowUp(f"non-finite field before t = {state.time:.6g}")
        _check_fields(model, state, evolving=True)
        norm = rate_norm(model, p, state, g)
    state.rate_norm = norm
    return state


def advance(model: Model, p: Coefficients, g: Grid1D, f: FieldPair, steps: int, dt: float) -> FieldPair:
    """Take exactly ``steps`` RK4 steps of size ``dt``."""
    model = Model(model)
    out = f.copy()
    out.n = np.ascontiguousarray(out.n, dtype=float)
    out.c = np.ascontiguousarray(out.c, dtype=float)
    if not _rk4_steps(out.n, out.c, p.d_n, p.d_c, p.chi0, p.r, g.dx, model is Model.TWO, dt, steps):
        raise BlowUp("non-finite field")
    out.time += steps * dt
    _check_fields(model, out, evolving=True)
    return out


def linearization(q, d_n, d_c, chi0, r):
    """2x2 Jacobian of either model about (1, 1) for perturbations ``cos(q x)``."""
    q2 = q * q
    return np.array([[-d_n * q2 - r, chi0 * q2], [1.0, -d_c * q2 - 1.0]])


def growth_rate(q, d_n, d_c, chi0, r) -> float:
    return float(np.max(np.linalg.eigvals(linearization(q, d_n, d_c, chi0, r)).real))


def dispersion_scan(d_n: float, d_c: float, chi0: float, r: float, L: float, m_max: int) -> DispersionReport:
    """Growth rate of the domain modes ``q = m pi / L``, m = 0..m_max.

    Both models share the same linearization about (1, 1) because ``n / c = 1`` there.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    m = np.arange(m_max + 1)
    q = m * np.pi / L
    growth = np.array([growth_rate(qi, d_n, d_c, chi0, r) for qi in q])
    i = int(np.argmax(growth[1:]) + 1) if m_max >= 1 else 0
    return DispersionReport(m, q, growth, float(q[i]), i, bool(m_max >= 1 and growth[i] > 0))


def critical_chi0(d_n: float, d_c: float, r: float, q: float | None = None) -> float:
    """Smallest chi0 giving a non-negative growth rate.

    With ``q`` given, the threshold for that single mode; otherwise the continuum
    minimum ``(sqrt(d_n) + sqrt(r d_c))**2``.
    """
    if q is None:
        return (math.sqrt(d_n) + math.sqrt(r * d_c)) ** 2
    q2 = q * q
    return (d_n * q2 + r) * (d_c * q2 + 1.0) / q2


def most_unstable_q(d_n: float, d_c: float, r: float) -> float:
    """Wavenumber at which the instability sets in first as chi0 grows."""
    return (r / (d_n * d_c)) ** 0.25


def chi0_threshold_scan(d_n, d_c, r, L, m_max, chi_values) -> float | None:
    """First value in the increasing sweep ``chi_values`` with an unstable domain mode."""
    for chi in np.asarray(chi_values, dtype=float):
        if dispersion_scan(d_n, d_c, chi, r, L, m_max).unstable:
            return float(chi)
    return None


def initial_condition(
    g: Grid1D,
    mode: int | None = None,
    amplitude: float = 1e-2,
    seed: int | None = None,
    n_modes: int = 8,
) -> FieldPair:
    """(1, 1) plus a cosine perturbation.

    With ``seed`` set, the perturbation is a random combination of the first
    ``n_modes`` cosine modes (each satisfies the no-flux condition); otherwise a
    single ``cos(mode pi x / L)``.
    """
    x = g.x
    if seed is not None:
        rng = np.random.default_rng(seed)
        w = rng.standard_normal(n_modes)
        pert = sum(w[i] * np.cos((i + 1) * np.pi * x / g.L) for i in range(n_modes))
        pert *= amplitude / np.max(np.abs(pert))
    else:
        if mode is None:
            raise ValueError("need a mode or a seed")
        pert = amplitude * np.cos(mode * np.pi * x / g.L)
    return FieldPair(1.0 + pert, 1.0 + pert.copy(), 0.0)


def simulate(
    p: Coefficients,
    L: float,
    N: int,
    mode: int | None = None,
    amplitude: float = 1e-2,
    seed: int | None = None,
    opts: SteadyOptions | None = None,
) -> tuple[Grid1D, FieldPair]:
    """Convenience wrapper: perturb (1, 1) and run to a steady pattern.

    The perturbed mode defaults to the most unstable domain mode.
    """
    g = Grid1D(L, N)
    if mode is None and seed is None:
        mode = dispersion_scan(p.d_n, p.d_c, p.chi0, p.r, L, max(8, N // 8)).m_star
    ic = initial_condition(g, mode, amplitude, seed)
    return g, step_to_steady(p.model, p, g, ic, opts)


def write_fields_csv(path, g: Grid1D, f: FieldPair):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "n", "c"])
        for xi, ni, ci in zip(g.x, f.n, f.c):
            w.writerow([f"{xi:.17g}", f"{ni:.17g}", f"{ci:.17g}"])


def read_fields_csv(path) -> tuple[Grid1D, FieldPair]:
    """Read an ``x,n,c`` CSV written on a uniform cell-centred grid."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != ["x", "n", "c"]:
        raise ValueError(f"{path}: expected header 'x,n,c'")
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: malformed number ({exc})") from None
    if data.ndim != 2 or data.shape[1] != 3:
        raise ValueError(f"{path}: every row needs three columns")
    x = data[:, 0]
    N = x.size
    dx = float(np.mean(np.diff(x))) if N > 1 else float("nan")
    if N > 1 and not np.allclose(np.diff(x), dx, rtol=1e-9, atol=0):
        raise ValueError(f"{path}: grid is not uniform")
    # cell centres sit at (j + 1/2) dx, so the end points sum to L
    L = float(x[0] + x[-1])
    return Grid1D(L, N), FieldPair(data[:, 1].copy(), data[:, 2].copy())
