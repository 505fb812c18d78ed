"""Parameter recovery from pattern amplitudes.

Unknowns are solved for in log space, ``theta = log(d_n, d_c, chi0, r, k)``, which
keeps every iterate positive.  Each start is a Levenberg-Marquardt run
(``scipy.optimize.least_squares``); starts come from a log lattice and the
reduction over starts is deterministic.

The coefficient systems are homogeneous of degree one in ``(d_n, chi0, r)`` and
depend on ``d_c`` and ``k`` only through ``d_c k**2`` and the products
``d_n k**2`` and ``chi0 k**2``.  Solving ``residual / r = 0`` removes the trivial
``r -> 0`` collapse; the two remaining scaling directions are reported by
:func:`identifiability_report` and can be removed by pinning parameters through
``SolverOptions.fixed``.
"""

from __future__ import annotations

import enum
import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .residuals import (
    PARAM_NAMES,
    PRINTED_TAGS,
    AmplitudeSpectrum,
    Model,
    ModelParams,
    ResidualError,
    generic_residuals,
    printed_tags,
    residuals,
    stationary_operator,
)

_PENALTY = 1e6
# |log parameter| beyond this is treated as outside the admissible region
_THETA_BOUND = 30.0


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    DEGENERATE = "Degenerate"
    FAILED = "Failed"


class IdentifiabilityWarning(UserWarning):
    pass


@dataclass
class SolverOptions:
    lattice: tuple[float, ...] = (1e-2, 1.0, 1e2)
    seed_k: bool = True
    diff_step: float = 1e-6
    tol: float = 1e-8
    # default: 100 * (unknowns + 1)
    max_nfev: int | None = None
    # "printed": the tabulated coefficient systems; "galerkin": harmonics that a
    # Galerkin solution of the same order satisfies exactly
    equations: str = "printed"
    append_m1: bool = False
    fixed: dict = field(default_factory=dict)
    degeneracy_tol: float = 1e-8
    # best end points continued with polish_factor times the per-start budget
    polish: int = 3
    polish_factor: int = 20


@dataclass
class Minimum:
    params: ModelParams
    residual_norm: float


@dataclass
class RecoveryResult:
    params: ModelParams | None
    residual_norm: float
    iterations: int
    jacobian_condition: float
    starts_tried: int
    status: Status
    reason: str = ""
    minima: list[Minimum] = field(default_factory=list)

    @property
    def invariants(self) -> dict[str, float] | None:
        return None if self.params is None else self.params.invariants()


@dataclass
class Screen:
    ok: bool
    reason: str = ""


@dataclass
class IdentifiabilityReport:
    singular_values: np.ndarray
    condition: float
    rank: int
    null_directions: np.ndarray
    warning: str | None


def degeneracy_screen(spec: AmplitudeSpectrum, M: int, model: Model = Model.ONE, tol: float = 1e-8) -> Screen:
    """Flag spectra that carry no information or collapse part of the system."""
    alpha = np.zeros(max(M, spec.M) + 1)
    alpha[: spec.M + 1] = spec.alpha
    osc = np.abs(alpha[1: M + 1])
    if not np.any(osc > tol * max(abs(alpha[0]), 1e-300)) or np.all(osc == 0):
        return Screen(False, "homogeneous")
    a1 = abs(alpha[1])
    if a1 == 0:
        return Screen(False, "alpha_1 vanishes; the fundamental is missing")
    for i in range(2, M + 1):
        if abs(alpha[i]) < tol * a1:
            vanishing = _tags_lost(Model(model), M, alpha, i)
            msg = f"alpha_{i} below threshold"
            if vanishing:
                msg += "; equations with tag " + ", ".join(map(str, vanishing)) + " vanish"
            return Screen(False, msg)
    return Screen(True)


# generic interior point used only to see which equations are structurally zero
_PROBE = dict(d_n=0.37, d_c=0.61, chi0=1.3, r=0.83, k=1.7)


def _tags_lost(model: Model, M: int, alpha: np.ndarray, i: int) -> tuple[int, ...]:
    """Printed tags whose equation vanishes identically once ``alpha_i`` is zero."""
    a = alpha[: M + 1].copy()
    a[i] = 0.0
    p = ModelParams(model, **_PROBE)
    try:
        values = generic_residuals(AmplitudeSpectrum(a), p, M)
    except ResidualError:
        return ()
    return tuple(t for t, v in zip(printed_tags(model, M), values) if v == 0.0)


def _galerkin_tags(model: Model, M: int) -> list[int]:
    return list(range(1, M + 1)) if model is Model.ONE else list(range(0, M + 1))


class _Objective:
    def __init__(self, spec: AmplitudeSpectrum, model: Model, M: int, opts: SolverOptions):
        self.spec = spec
        self.model = Model(model)
        self.M = M
        self.opts = opts
        unknown = [n for n in PARAM_NAMES if n not in opts.fixed]
        if not unknown:
            raise ValueError("every parameter is fixed; nothing to solve for")
        bad = set(opts.fixed) - set(PARAM_NAMES)
        if bad:
            raise ValueError(f"unknown fixed parameter(s): {sorted(bad)}")
        self.free = [PARAM_NAMES.index(n) for n in unknown]
        self.base = np.zeros(len(PARAM_NAMES))
        for name, v in opts.fixed.items():
            if not v > 0:
                raise ValueError(f"fixed {name} must be positive")
            self.base[PARAM_NAMES.index(name)] = float(v)
        if opts.equations not in ("printed", "galerkin"):
            raise ValueError(f"unknown equation set {opts.equations!r}")
        self.n_eq = self.raw(self.params_from(np.zeros(len(self.free)))).size

    def params_from(self, theta) -> ModelParams:
        values = self.base.copy()
        values[self.free] = np.exp(theta)
        return ModelParams.from_array(self.model, values)

    def raw(self, p: ModelParams) -> np.ndarray:
        if self.opts.equations == "galerkin":
            tags = _galerkin_tags(p.model, self.M)
            if (p.model, self.M) in PRINTED_TAGS:
                # the Galerkin harmonics lead the printed systems
                return residuals(self.spec, p, self.M)[: len(tags)]
            return stationary_operator(self.spec.alpha[: self.M + 1], p).coeffs[tags]
        out = residuals(self.spec, p, self.M)
        if self.model is Model.TWO and self.opts.append_m1 and self.M != 1:
            out = np.concatenate([out, residuals(self.spec, p, 1)])
        return out

    def scaled(self, p: ModelParams) -> np.ndarray:
        return self.raw(p) / p.r

    def __call__(self, theta) -> np.ndarray:
        if np.max(np.abs(theta)) > _THETA_BOUND:
            return np.full(self.n_eq, _PENALTY)
        try:
            out = self.scaled(self.params_from(theta))
        except (ResidualError, ValueError, OverflowError):
            return np.full(self.n_eq, _PENALTY)
        if not np.all(np.isfinite(out)):
            return np.full(self.n_eq, _PENALTY)
        return out


def residual_norm(spec: AmplitudeSpectrum, p: ModelParams, M: int, opts: SolverOptions | None = None) -> float:
    """Norm the solver minimises: ``|residuals / r|``."""
    obj = _Objective(spec, p.model, M, opts or SolverOptions(fixed={}))
    return float(np.linalg.norm(obj.scaled(p)))


def _starts(obj: _Objective, spec: AmplitudeSpectrum) -> list[np.ndarray]:
    axes = []
    for idx in obj.free:
        values = [float(v) for v in obj.opts.lattice]
        if PARAM_NAMES[idx] == "k" and obj.opts.seed_k and spec.k:
            values.append(float(spec.k))
        axes.append(np.log(values))
    return [np.array(s) for s in itertools.product(*axes)]


def _jacobian(obj: _Objective, theta: np.ndarray, h: float = 1e-6) -> np.ndarray:
    f0 = obj(theta)
    J = np.empty((f0.size, theta.size))
    for j in range(theta.size):
        t = theta.copy()
        t[j] += h
        tm = theta.copy()
        tm[j] -= h
        J[:, j] = (obj(t) - obj(tm)) / (2 * h)
    return J


def _condition(J: np.ndarray) -> float:
    s = np.linalg.svd(J, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return float("inf")
    return float(s[0] / s[-1]) if s[-1] > 0 else float("inf")


def solve_inverse(
    spec: AmplitudeSpectrum,
    model: Model,
    M: int | None = None,
    opts: SolverOptions | None = None,
) -> RecoveryResult:
    """Multistart Levenberg-Marquardt recovery of ``(d_n, d_c, chi0, r, k)``.

    A start counts as converged when ``|residuals / r| < tol * (1 + |alpha|)``.  Among
    converged starts the lowest norm wins, ties broken by lexicographic theta.
    ``minima`` keeps every distinct end point within ten times the best norm or
    below the acceptance threshold, best first.
    """
    model = Model(model)
    opts = opts or SolverOptions()
    if M is None:
        M = 3 if model is Model.ONE else 2
    screen = degeneracy_screen(spec, M, model, opts.degeneracy_tol)
    if not screen.ok:
        return RecoveryResult(None, float("nan"), 0, float("inf"), 0, Status.DEGENERATE, screen.reason)
    if spec.M < M:
        raise ResidualError(f"spectrum order {spec.M} is below truncation {M}")

    obj = _Objective(spec, model, M, opts)
    if obj.n_eq < len(obj.free):
        raise ValueError(f"{obj.n_eq} equations cannot determine {len(obj.free)} unknowns")
    accept = opts.tol * (1.0 + float(np.linalg.norm(spec.alpha[: M + 1])))
    budget = opts.max_nfev or 100 * (len(obj.free) + 1)

    def run(theta0, max_nfev):
        sol = least_squares(
            obj, theta0, method="lm", diff_step=opts.diff_step, x_scale=1.0,
            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev,
        )
        norm = float(np.linalg.norm(sol.fun))
        if np.all(np.isfinite(sol.x)) and norm < _PENALTY:
            return norm, tuple(sol.x), sol.nfev
        return None

    starts = _starts(obj, spec)
    runs = [r for r in (run(t, budget) for t in starts) if r is not None]
    if not runs:
        return RecoveryResult(None, float("inf"), 0, float("inf"), len(starts), Status.FAILED, "no start produced a finite residual")

    # ill-conditioned valleys stall short runs; continue the best few with a larger budget
    runs.sort(key=lambda r: (r[0], r[1]))
    for i in range(min(opts.polish, len(runs))):
        polished = run(np.array(runs[i][1]), opts.polish_factor * budget)
        if polished is not None and polished[0] < runs[i][0]:
            runs[i] = (polished[0], polished[1], runs[i][2] + polished[2])
    runs.sort(key=lambda r: (r[0], r[1]))
    best_norm, best_theta, best_nfev = runs[0]
    best_theta = np.array(best_theta)
    params = obj.params_from(best_theta)
    cond = _condition(_jacobian(obj, best_theta))

    minima = []
    # every accepted root counts, even when the best norm sits at rounding level
    cutoff = max(10.0 * best_norm, accept if best_norm < accept else 0.0)
    for norm, theta, _ in runs:
        if norm > cutoff:
            break
        theta = np.array(theta)
        if all(np.max(np.abs(theta - np.log(m.params.as_array()[obj.free]))) > 1e-6 for m in minima):
            minima.append(Minimum(obj.params_from(theta), norm))

    status = Status.CONVERGED if best_norm < accept else Status.FAILED
    reason = "" if status is Status.CONVERGED else f"best residual {best_norm:.3e} above {accept:.3e}"
    return RecoveryResult(params, best_norm, best_nfev, cond, len(starts), status, reason, minima)


def identifiability_report(
    spec: AmplitudeSpectrum,
    model: Model,
    M: int,
    p_hat: ModelParams,
    opts: SolverOptions | None = None,
    rank_tol: float = 1e-8,
    warn_condition: float = 1e8,
) -> IdentifiabilityReport:
    """Singular values of the log-parameter Jacobian of ``residuals / r`` at ``p_hat``.

    Directions whose singular value falls below ``rank_tol`` times the largest are
    returned as rows of ``null_directions`` (in the free-parameter coordinates).
    """
    opts = opts or SolverOptions()
    obj = _Objective(spec, Model(model), M, opts)
    theta = np.log(p_hat.as_array()[obj.free])
    J = _jacobian(obj, theta)
    _, s, vt = np.linalg.svd(J)
    smax = float(s[0]) if s.size else 0.0
    rank = int(np.sum(s > rank_tol * smax)) if smax > 0 else 0
    cond = float(smax / s[-1]) if s.size and s[-1] > 0 else float("inf")
    # rows of vt beyond the rank, plus any unknowns the equations cannot see at all
    null = vt[rank:]
    if J.shape[1] > vt.shape[0]:
        null = np.vstack([null, np.eye(J.shape[1])[vt.shape[0]:]])
    warning = None
    if rank < len(obj.free) or cond > warn_condition:
        warning = (
            f"rank {rank} of {len(obj.free)} unknowns, condition number {cond:.3e}; "
            "the recovered parameters are not locally unique"
        )
        warnings.warn(warning, IdentifiabilityWarning, stacklevel=2)
    return IdentifiabilityReport(s, cond, rank, null, warning)


def relative_errors(recovered: ModelParams, truth: ModelParams) -> dict[str, float]:
    a, b = recovered.as_array(), truth.as_array()
    return {n: float(abs(x - y) / abs(y)) for n, x, y in zip(PARAM_NAMES, a, b)}


def invariant_errors(recovered: ModelParams, truth: ModelParams) -> dict[str, float]:
    a, b = recovered.invariants(), truth.invariants()
    return {n: float(abs(a[n] - b[n]) / abs(b[n])) for n in b}


def result_to_dict(res: RecoveryResult) -> dict:
    def params(p):
        return None if p is None else {n: float(getattr(p, n)) for n in PARAM_NAMES}

    return {
        "status": res.status.value,
        "reason": res.reason,
        "params": params(res.params),
        "invariants": res.invariants,
        "residual_norm": res.residual_norm,
        "iterations": res.iterations,
        "jacobian_condition": res.jacobian_condition,
        "starts_tried": res.starts_tried,
        "minima": [{"params": params(m.params), "residual_norm": m.residual_norm} for m in res.minima],
    }
