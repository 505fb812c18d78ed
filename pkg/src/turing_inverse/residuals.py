"""Galerkin coefficient systems for the two chemotaxis models.

Two independent routes produce the same residual vectors:

* ``residuals_model1`` / ``residuals_model2`` are the coefficient equations written
  out term by term;
* ``generic_residuals`` rebuilds them by expanding the stationary operator with
  :mod:`turing_inverse.series` and reading off harmonics.

Each route is the other's test oracle.

Model 1 (density-dependent sensitivity)::

    0 = d_n n'' - chi0 (n c')' + r n (1 - n)
    0 = d_c c'' + n - c

Model 2 (ratio-dependent sensitivity) replaces ``n c'`` by ``(n / c) c'``; its
residual is multiplied through by ``c**2`` so that every term is a polynomial in
cosines.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .series import CosineSeries, differentiate, differentiate_sine, multiply_cc, multiply_sc, multiply_ss


class Model(enum.IntEnum):
    ONE = 1
    TWO = 2


PARAM_NAMES = ("d_n", "d_c", "chi0", "r", "k")

# Harmonics each printed system equates, keyed by (model, M).
PRINTED_TAGS = {
    (Model.ONE, 1): (1,),
    (Model.ONE, 2): (1, 2, 3),
    (Model.ONE, 3): (1, 2, 3, 4, 5),
    (Model.TWO, 1): (0, 1, 2, 3),
    (Model.TWO, 2): (0, 1, 2, 3, 4),
}


class ResidualError(ValueError):
    pass


class InvalidDenominator(ResidualError):
    """The chemical concentration series is not bounded away from zero."""


@dataclass(frozen=True)
class ModelParams:
    model: Model
    d_n: float
    d_c: float
    chi0: float
    r: float
    k: float

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        for name in PARAM_NAMES:
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and positive, got {v!r}")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES], dtype=float)

    @classmethod
    def from_array(cls, model, values) -> "ModelParams":
        return cls(model, *(float(v) for v in values))

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def invariants(self) -> dict[str, float]:
        """The three combinations a stationary pattern actually constrains.

        The stationary equations are unchanged by ``(d_n, chi0, r) -> s * (d_n, chi0, r)``
        and by ``k -> m k`` with every diffusivity divided by ``m**2``.
        """
        k2 = self.k**2
        return {
            "d_c_k2": self.d_c * k2,
            "d_n_k2_over_r": self.d_n * k2 / self.r,
            "chi0_k2_over_r": self.chi0 * k2 / self.r,
        }


@dataclass
class AmplitudeSpectrum:
    """Cosine amplitudes ``alpha_i`` (cells) and ``beta_i`` (chemical), i = 0..M.

    ``k``, ``L`` and ``m`` are optional metadata carried from spectral extraction.
    """

    alpha: np.ndarray
    beta: np.ndarray | None = None
    k: float | None = None
    L: float | None = None
    m: int | None = None
    model: Model | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float).ravel()
        if self.beta is None:
            self.beta = np.full_like(self.alpha, np.nan)
        self.beta = np.asarray(self.beta, dtype=float).ravel()
        if self.alpha.shape != self.beta.shape:
            raise ValueError("alpha and beta must have equal length")
        if self.alpha.size == 0:
            raise ValueError("empty spectrum")

    @property
    def M(self) -> int:
        return self.alpha.size - 1

    @property
    def has_beta(self) -> bool:
        return bool(np.all(np.isfinite(self.beta)))

    def truncated(self, M: int) -> "AmplitudeSpectrum":
        if M > self.M:
            raise ValueError(f"spectrum has order {self.M}, cannot take {M}")
        return replace(self, alpha=self.alpha[: M + 1].copy(), beta=self.beta[: M + 1].copy())


def beta_relation(alpha_i: float, i: int, d_c: float, k: float) -> float:
    """Chemical amplitude of harmonic ``i >= 1`` forced by the linear c equation."""
    if i < 1:
        raise ValueError("beta_relation needs i >= 1; the mean mode obeys beta_0 = alpha_0")
    return alpha_i / (1.0 + i * i * d_c * k * k)


def beta_vector(alpha: Sequence[float], d_c: float, k: float) -> np.ndarray:
    """``[alpha_0, beta_1, ..., beta_M]`` with the relation applied harmonic by harmonic."""
    alpha = np.asarray(alpha, dtype=float)
    i = np.arange(alpha.size)
    out = alpha / (1.0 + i * i * d_c * k * k)
    out[0] = alpha[0]
    return out


def _padded_alpha(spec: AmplitudeSpectrum, M: int) -> np.ndarray:
    if spec.M < M:
        raise ResidualError(f"spectrum order {spec.M} is below truncation {M}")
    a = [0.0] * 4
    a[: M + 1] = spec.alpha[: M + 1].tolist()
    # plain floats: the hand-written systems are evaluated in scalar Python
    return a


def residuals_model1(spec: AmplitudeSpectrum, p: ModelParams, M: int) -> np.ndarray:
    """Left-hand sides of the Model 1 coefficient system, ordered by harmonic.

    ``M = 1`` gives the cos(kx) equation only, ``M = 2`` harmonics 1..3 and ``M = 3``
    harmonics 1..5.  The beta_i are recomputed from alpha_i, never read from ``spec``.
    """
    if M not in (1, 2, 3):
        raise ResidualError(f"Model 1 system is defined for M in {{1, 2, 3}}, got {M}")
    a0, a1, a2, a3 = _padded_alpha(spec, M)
    _, b1, b2, b3 = beta_vector([a0, a1, a2, a3], p.d_c, p.k).tolist()
    K = p.k * p.k
    dn, X, r = p.d_n, p.chi0, p.r

    if M == 1:
        return np.array([-dn * K * a1 + X * K * a0 * b1 + r * (a1 - 2 * a0 * a1)])
    if M == 2:
        return np.array([
            -dn * K * a1 + X * K * (a0 * b1 + a1 * b2 - 0.5 * a2 * b1)
            + r * (a1 - 2 * a0 * a1 - a1 * a2),
            -4 * dn * K * a2 + X * K * (4 * a0 * b2 + a1 * b1)
            + r * (a2 - 2 * a0 * a2 - 0.5 * a1**2),
            X * K * (3 * a1 * b2 + 1.5 * a2 * b1) - r * a1 * a2,
        ])
    return np.array([
        -dn * K * a1
        + X * K * (a0 * b1 + a1 * b2 - 0.5 * a2 * b1 + 1.5 * a2 * b3 - a3 * b2)
        + r * (a1 - 2 * a0 * a1 - a1 * a2 - a2 * a3),
        -4 * dn * K * a2
        + X * K * (4 * a0 * b2 + a1 * b1 + 3 * a1 * b3 - a3 * b1)
        + r * (a2 - 2 * a0 * a2 - 0.5 * a1**2 - a1 * a3),
        -9 * dn * K * a3
        + X * K * (9 * a0 * b3 + 3 * a1 * b2 + 1.5 * a2 * b1)
        + r * (a3 - 2 * a0 * a3 - a1 * a2),
        X * K * (6 * a1 * b3 + 4 * a2 * b2 + 2 * a3 * b1) - r * (a1 * a3 + 0.5 * a2**2),
        X * K * (7.5 * a2 * b3 + 5 * a3 * b2) - r * a2 * a3,
    ])


def check_denominator(alpha0: float, beta: Sequence[float], k: float, points: int = 1024) -> float:
    """Minimum of the concentration series over one period; raises if not positive.

    Positive means ``min > 1e-6 * max`` on a ``points``-sample grid.  The identically
    zero series is let through because the cleared system is polynomial there.
    """
    # cheap sufficient bound before sampling
    spread = sum(abs(b) for b in list(beta)[1:])
    if alpha0 > 0 and spread < (1 - 1e-6) * alpha0:
        return float(alpha0 - spread)
    beta = np.asarray(beta, dtype=float)
    c = CosineSeries(np.concatenate(([alpha0], beta[1:])), k)
    x = np.linspace(0.0, 2 * np.pi / k, points, endpoint=False)
    vals = c(x)
    lo, hi = float(vals.min()), float(np.abs(vals).max())
    if hi == 0.0:
        # c == 0 identically: the cleared system is satisfied trivially (flat zero state)
        return 0.0
    if not lo > 1e-6 * hi:
        raise InvalidDenominator(
            f"pattern leaves the model's validity region: min c = {lo:.3g}, max |c| = {hi:.3g}"
        )
    return lo


def residuals_model2(spec: AmplitudeSpectrum, p: ModelParams, M: int) -> np.ndarray:
    """Left-hand sides of the denominator-cleared Model 2 system, ordered by harmonic.

    ``M = 1`` equates harmonics 0..3, ``M = 2`` harmonics 0..4.  The clearing factor
    is ``c(x)**2`` with ``beta_0 = alpha_0``.
    """
    if M not in (1, 2):
        raise ResidualError(f"Model 2 system is defined for M in {{1, 2}}, got {M}")
    a0, a1, a2, _ = _padded_alpha(spec, M)
    _, b1, b2, _ = beta_vector([a0, a1, a2, 0.0], p.d_c, p.k).tolist()
    check_denominator(a0, [a0, b1, b2], p.k)
    K = p.k * p.k
    dn, X, r = p.d_n, p.chi0, p.r

    if M == 1:
        return np.array([
            -dn * K * a0 * a1 * b1 + X * K * a0 * b1**2
            + r * a0**3 - r * a0**4 - 0.5 * r * a0**2 * a1**2 + 0.5 * r * a0 * b1**2
            - 0.5 * r * a0**2 * b1**2 - 0.375 * r * a1**2 * b1**2 + r * a0 * a1 * b1
            - 2 * r * a0**2 * a1 * b1,
            -dn * K * a1 * (a0**2 + 0.75 * b1**2) + X * K * (a0**2 * b1 + 0.75 * a1 * b1**2)
            + r * a0**2 * a1 - 2 * r * a0**3 * a1 + 0.75 * r * a1 * b1**2
            - 1.5 * r * a0 * a1 * b1**2 + 2 * r * a0**2 * b1 - 2 * r * a0**3 * b1
            - 1.5 * r * a0 * a1**2 * b1,
            -dn * K * a0 * a1 * b1 + X * K * a0 * a1 * b1 + r * a0 * a1 * b1
            - 2 * r * a0**2 * a1 * b1 - 0.5 * r * a0**2 * a1**2 - 0.5 * r * a1**2 * b1**2
            + 0.5 * r * a0 * b1**2 - 0.5 * r * a0**2 * b1**2,
            -0.25 * dn * K * a1 * b1**2 + 0.25 * X * K * a1 * b1**2
            - 0.5 * r * a0 * a1**2 * b1 + 0.25 * r * a1 * b1**2 - 0.5 * r * a0 * a1 * b1**2,
        ])

    eq0 = (
        -dn * K * (a0 * a1 * b1 + 4 * a0 * a2 * b2 + 0.5 * a1 * b1 * b2 + a2 * b1**2)
        + X * K * (a0 * b1**2 + 4 * a0 * b2**2 + 2 * a1 * b1 * b2 - 0.5 * a2 * b1**2)
        - r * (
            a0**4 - a0**3 + 0.5 * a0**2 * a1**2 + 0.5 * a0**2 * a2**2 + 0.5 * a0**2 * b2**2
            + 2 * a0**2 * a2 * b2 + 0.5 * a0**2 * b1**2 + 2 * a0**2 * a1 * b1
            - 0.5 * a0 * b2**2 + 0.5 * a0 * a1**2 * b2 - a0 * a2 * b2 + a0 * a1 * b1 * b2
            + 0.5 * a0 * a2 * b1**2 - 0.5 * a0 * b1**2 - a0 * a1 * b1 + a0 * a1 * a2 * b1
            + 0.25 * a1**2 * b2**2 + 0.375 * a2**2 * b2**2 - 0.5 * a1 * b1 * b2
            + a1 * a2 * b1 * b2 + 0.375 * a1**2 * b1**2 + 0.25 * a2**2 * b1**2
            - 0.25 * a2 * b1**2
        )
    )
    eq1 = (
        -dn * K * (
            a0**2 * a1 + a0 * a1 * b2 + 4 * a0 * a2 * b1 + 0.5 * a1 * b2**2
            + 0.75 * a1 * b1**2 + 4 * a2 * b1 * b2
        )
        + X * K * (
            a0**2 * b1 + 4.5 * a0 * b1 * b2 + a0 * a1 * b2 - 0.5 * a0 * a2 * b1
            + 0.75 * a1 * b1**2 + 4 * a1 * b2**2 + 0.5 * a2 * b1 * b2
        )
        - r * (
            2 * a0**3 * a1 + 2 * a0**3 * b1 - a0**2 * a1 + a0**2 * a1 * a2
            + 2 * a0**2 * a1 * b2 + a0**2 * b1 * b2 + 2 * a0**2 * a2 * b1 - 2 * a0**2 * b1
            + a0 * a1 * b2**2 - a0 * a1 * b2 + 2 * a0 * a1 * a2 * b2 + 2 * a0 * a2 * b1 * b2
            - a0 * b1 * b2 + 1.5 * a0 * a1 * b1**2 + 1.5 * a0 * a1**2 * b1
            + a0 * a2**2 * b1 - a0 * a2 * b1 - 0.5 * a1 * b2**2 + 0.75 * a1 * a2 * b2**2
            + a1**2 * b1 * b2 + 0.75 * a2**2 * b1 * b2 - a2 * b1 * b2 - 0.75 * a1 * b1**2
            + a1 * a2 * b1**2
        )
    )
    eq2 = (
        -dn * K * (4 * a0**2 * a2 + a0 * a1 * b1 + a1 * b1 * b2 + 3 * a2 * b2**2 + 2 * a2 * b1**2)
        + X * K * (a0 * a1 * b1 + 4 * a0**2 * b2 + 2 * a1 * b1 * b2 + a2 * b1**2 + 3 * a2 * b2**2)
        - r * (
            2 * a0**3 * a2 + 2 * a0**3 * b2 + 0.5 * a0**2 * a1**2 - a0**2 * a2
            - 2 * a0**2 * b2 + 0.5 * a0**2 * b1**2 + 2 * a0**2 * a1 * b1
            + 1.5 * a0 * a2 * b2**2 + a0 * a1**2 * b2 + 1.5 * a0 * a2**2 * b2
            + 2 * a0 * a1 * b1 * b2 + a0 * a2 * b1**2 - 0.5 * a0 * b1**2 - a0 * a1 * b1
            + 2 * a0 * a1 * a2 * b1 + 0.375 * a1**2 * b2**2 - 0.75 * a2 * b2**2
            - a1 * b1 * b2 + 1.5 * a1 * a2 * b1 * b2 + 0.5 * a1**2 * b1**2
            + 0.375 * a2**2 * b1**2 - 0.5 * a2 * b1**2
        )
    )
    eq3 = (
        -dn * K * (
            a0 * a1 * b2 + 4 * a0 * a2 * b1 + 0.25 * a1 * b1**2 + 0.25 * a1 * b2**2
            + 2 * a2 * b1 * b2
        )
        + X * K * (
            0.5 * a0 * b1 * b2 + 3 * a0 * a1 * b2 + 1.5 * a0 * a2 * b1 + 0.25 * a1 * b1**2
            - 0.5 * a1 * b2**2 + 2.75 * a2 * b1 * b2
        )
        - r * (
            a0**2 * a1 * a2 + 2 * a0**2 * a1 * b2 + a0**2 * b1 * b2 + 2 * a0**2 * a2 * b1
            + 0.5 * a0 * a1 * b2**2 - a0 * a1 * b2 + a0 * a1 * a2 * b2 + a0 * a2 * b1 * b2
            - a0 * b1 * b2 + 0.5 * a0 * a1 * b1**2 + 0.5 * a0 * a1**2 * b1
            + 0.5 * a0 * a2**2 * b1 - a0 * a2 * b1 - 0.25 * a1 * b2**2
            + 0.75 * a1 * a2 * b2**2 + 0.75 * a1**2 * b1 * b2 + 0.75 * a2**2 * b1 * b2
            - 0.5 * a2 * b1 * b2 - 0.25 * a1 * b1**2 + 0.75 * a1 * a2 * b1**2
        )
    )
    eq4 = (
        -dn * K * (4 * a0 * a2 * b2 + 0.5 * a1 * b1 * b2 + a2 * b1**2)
        + X * K * (4 * a0 * a2 * b2 + a1 * b1 * b2 + 0.5 * a2 * b1**2)
        - r * (
            0.5 * a0**2 * a2**2 + 0.5 * a0**2 * b2**2 + 2 * a0**2 * a2 * b2
            - 0.5 * a0 * b2**2 + 0.5 * a0 * a1**2 * b2 - a0 * a2 * b2 + a0 * a1 * b1 * b2
            + 0.5 * a0 * a2 * b1**2 + a0 * a1 * a2 * b1 + 0.25 * a1**2 * b2**2
            + 0.5 * a2**2 * b2**2 - 0.5 * a1 * b1 * b2 + a1 * a2 * b1 * b2
            + 0.125 * a1**2 * b1**2 + 0.25 * a2**2 * b1**2 - 0.25 * a2 * b1**2
        )
    )
    return np.array([eq0, eq1, eq2, eq3, eq4])


def residuals(spec: AmplitudeSpectrum, p: ModelParams, M: int) -> np.ndarray:
    if p.model is Model.ONE:
        return residuals_model1(spec, p, M)
    return residuals_model2(spec, p, M)


def printed_tags(model: Model, M: int) -> tuple[int, ...]:
    """Harmonic tags of the coefficient system for ``(model, M)``.

    Outside the tabulated cases the pattern extends as harmonics 1..2M-1 (Model 1)
    and 0..M+2 (Model 2).
    """
    model = Model(model)
    if (model, M) in PRINTED_TAGS:
        return PRINTED_TAGS[(model, M)]
    if M < 1:
        raise ResidualError("truncation order must be >= 1")
    if model is Model.ONE:
        return tuple(range(1, 2 * M))
    return tuple(range(0, M + 3))


def stationary_operator(alpha: Sequence[float], p: ModelParams) -> CosineSeries:
    """Exact cosine expansion of the (cleared) cell equation for the ansatz ``alpha``.

    ``beta`` follows from ``alpha`` through the chemical equation; ``beta_0 = alpha_0``.
    """
    alpha = np.asarray(alpha, dtype=float)
    n = CosineSeries(alpha, p.k)
    c = CosineSeries(beta_vector(alpha, p.d_c, p.k), p.k)
    dn = differentiate(n)
    n_xx = differentiate_sine(dn)
    dc = differentiate(c)
    growth = n - multiply_cc(n, n)

    if p.model is Model.ONE:
        flux = differentiate_sine(multiply_sc(dc, n))
        return n_xx * p.d_n - flux * p.chi0 + growth * p.r

    check_denominator(alpha[0], c.coeffs, p.k)
    c2 = multiply_cc(c, c)
    # (n c')' c - n c'^2 is the numerator of (n c' / c)' over c^2
    flux = multiply_cc(differentiate_sine(multiply_sc(dc, n)), c) - multiply_cc(n, multiply_ss(dc, dc))
    return multiply_cc(n_xx * p.d_n + growth * p.r, c2) - flux * p.chi0


def generic_residuals(
    spec: AmplitudeSpectrum,
    p: ModelParams,
    M: int,
    include_dc_equation: bool = False,
    with_leakage: bool = False,
):
    """Residuals regenerated from series algebra.

    Returns the harmonics of :func:`printed_tags` (plus the harmonic-0 equation in
    front for Model 1 when ``include_dc_equation``).  With ``with_leakage`` a second
    array holds the coefficients of the harmonics above the printed set, which the
    truncated system ignores.
    """
    if M < 1:
        raise ResidualError("truncation order must be >= 1")
    if spec.M < M:
        raise ResidualError(f"spectrum order {spec.M} is below truncation {M}")
    full = stationary_operator(spec.alpha[: M + 1], p).coeffs
    tags = list(printed_tags(p.model, M))
    if include_dc_equation and tags[0] != 0:
        tags = [0] + tags
    out = full[tags]
    if not with_leakage:
        return out
    return out, full[max(tags) + 1:].copy()


def leakage(spec: AmplitudeSpectrum, p: ModelParams, M: int) -> np.ndarray:
    """Coefficients of the harmonics dropped by the truncated system."""
    return generic_residuals(spec, p, M, with_leakage=True)[1]


class GalerkinNonConvergence(RuntimeError):
    def __init__(self, message, alpha, residual_norm):
        super().__init__(message)
        self.alpha = alpha
        self.residual_norm = residual_norm


@dataclass
class GalerkinSolution:
    spectrum: AmplitudeSpectrum
    residual_norm: float
    iterations: int
    trivial: bool


def galerkin_system(alpha: np.ndarray, p: ModelParams, M: int) -> np.ndarray:
    """Harmonics 0..M of the stationary operator: a square system in alpha_0..alpha_M."""
    return stationary_operator(alpha, p).coeffs[: M + 1]


def _fd_jacobian(fun, x, f0, h=1e-7):
    J = np.empty((f0.size, x.size))
    for j in range(x.size):
        step = h * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += step
        xm[j] -= step
        J[:, j] = (fun(xp) - fun(xm)) / (2 * step)
    return J


def forward_galerkin_solve(
    p: ModelParams,
    M: int,
    seed: AmplitudeSpectrum,
    tol: float = 1e-13,
    max_iter: int = 200,
    trivial_tol: float = 1e-8,
) -> GalerkinSolution:
    """Stationary Galerkin pattern for fixed parameters.

    Damped Newton on harmonics 0..M of the stationary operator with unknowns
    alpha_0..alpha_M.  The mean (harmonic-0) equation is part of the system because
    it is what pins alpha_0.  A solution whose oscillating amplitudes all fall below
    ``trivial_tol`` is returned with ``trivial=True``.
    """
    if seed.M < M:
        raise ValueError("seed spectrum shorter than requested order")
    x = seed.alpha[: M + 1].astype(float).copy()
    if not np.any(np.abs(x[1:]) > 0):
        raise ValueError("seed must excite at least one harmonic i >= 1")

    def F(a):
        return galerkin_system(a, p, M)

    f = F(x)
    norm = float(np.linalg.norm(f))
    it = 0
    while norm >= tol and it < max_iter:
        it += 1
        J = _fd_jacobian(F, x, f)
        try:
            step = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -f, rcond=None)[0]
        lam = 1.0
        while lam > 1e-6:
            trial = x + lam * step
            try:
                ft = F(trial)
            except ResidualError:
                lam *= 0.5
                continue
            nt = float(np.linalg.norm(ft))
            if nt < (1 - 1e-4 * lam) * norm or nt < tol:
                break
            lam *= 0.5
        else:
            raise GalerkinNonConvergence(
                f"line search stalled at |F| = {norm:.3e}", x.copy(), norm
            )
        x, f, norm = trial, ft, nt
    if norm >= tol:
        raise GalerkinNonConvergence(
            f"no convergence after {max_iter} iterations, |F| = {norm:.3e}", x.copy(), norm
        )
    beta = beta_vector(x, p.d_c, p.k)
    spec = AmplitudeSpectrum(x, beta, k=p.k, model=p.model)
    trivial = bool(np.max(np.abs(x[1:])) < trivial_tol)
    return GalerkinSolution(spec, norm, it, trivial)


def _is_fundamental(sol: GalerkinSolution) -> bool:
    osc = np.abs(sol.spectrum.alpha[1:])
    return not sol.trivial and osc[0] == osc.max()


def galerkin_pattern(p: ModelParams, M: int, steps: int = 16) -> GalerkinSolution:
    """Non-trivial Galerkin pattern whose largest harmonic is the fundamental.

    Continues in ``s = sqrt(chi0 / onset - 1)`` from just above the onset value of
    ``chi0`` for wavenumber ``k`` up to ``p.chi0``; amplitudes of the bifurcating
    branch are close to linear in ``s``, so a secant predictor keeps Newton on it.
    """
    k2 = p.k * p.k
    onset = (p.d_n * k2 + p.r) * (p.d_c * k2 + 1.0) / k2
    if p.chi0 <= onset:
        raise GalerkinNonConvergence(f"chi0 = {p.chi0:.6g} is not above onset {onset:.6g}", None, np.nan)
    s_end = np.sqrt(p.chi0 / onset - 1.0)
    path = np.linspace(min(0.03, s_end), s_end, steps)
    prev = None
    alpha = np.zeros(M + 1)
    alpha[0] = 1.0
    alpha[1] = path[0]
    sol = None
    for j, s in enumerate(path):
        if j >= 2:
            guess = 2 * alpha - prev
        elif j == 1:
            guess = alpha.copy()
            guess[1:] *= s / path[0]
        else:
            guess = alpha
        sol = forward_galerkin_solve(p.with_(chi0=float(onset * (1 + s * s))), M, AmplitudeSpectrum(guess))
        prev, alpha = alpha, sol.spectrum.alpha
        if not _is_fundamental(sol):
            raise GalerkinNonConvergence("continuation left the fundamental branch", alpha, sol.residual_norm)
    return sol
