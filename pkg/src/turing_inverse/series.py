"""Exact arithmetic on truncated cosine and sine series.

A :class:`CosineSeries` represents ``sum_i c_i cos(i k x)`` for ``i = 0..M`` and a
:class:`SineSeries` represents ``sum_i s_i sin(i k x)`` for ``i = 1..M``.  Products
are expanded with the product-to-sum identities and never truncated implicitly;
degrees grow and the caller decides where to cut.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class WavenumberMismatch(ValueError):
    pass


def _as_coeffs(values) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float)).copy()
    if arr.ndim != 1:
        raise ValueError("series coefficients must be one-dimensional")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CosineSeries:
    """``f(x) = sum_{i=0}^{M} coeffs[i] * cos(i * k * x)``."""

    coeffs: np.ndarray
    k: float

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _as_coeffs(self.coeffs))
        if self.coeffs.size == 0:
            object.__setattr__(self, "coeffs", _as_coeffs([0.0]))
        if not self.k > 0:
            raise ValueError(f"wavenumber must be positive, got {self.k}")

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        i = np.arange(self.coeffs.size)
        return np.cos(np.multiply.outer(x, i) * self.k) @ self.coeffs

    def padded(self, degree: int) -> np.ndarray:
        """Coefficients zero-padded (or cut) to ``degree + 1`` entries."""
        out = np.zeros(degree + 1)
        m = min(degree + 1, self.coeffs.size)
        out[:m] = self.coeffs[:m]
        return out

    def __add__(self, other):
        if isinstance(other, (int, float)):
            c = self.coeffs.copy()
            c[0] += other
            return CosineSeries(c, self.k)
        _check_k(self, other)
        d = max(self.degree, other.degree)
        return CosineSeries(self.padded(d) + other.padded(d), self.k)

    __radd__ = __add__

    def __neg__(self):
        return CosineSeries(-self.coeffs, self.k)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return CosineSeries(self.coeffs * other, self.k)
        if isinstance(other, CosineSeries):
            return multiply_cc(self, other)
        if isinstance(other, SineSeries):
            return multiply_sc(other, self)
        return NotImplemented

    __rmul__ = __mul__

    def __repr__(self):
        return f"CosineSeries({self.coeffs.tolist()}, k={self.k!r})"


@dataclass(frozen=True, eq=False)
class SineSeries:
    """``f(x) = sum_{i=1}^{M} coeffs[i-1] * sin(i * k * x)``; no constant term."""

    coeffs: np.ndarray
    k: float

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _as_coeffs(self.coeffs))
        if not self.k > 0:
            raise ValueError(f"wavenumber must be positive, got {self.k}")

    @property
    def degree(self) -> int:
        return self.coeffs.size

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        i = np.arange(1, self.coeffs.size + 1)
        return np.sin(np.multiply.outer(x, i) * self.k) @ self.coeffs

    def padded(self, degree: int) -> np.ndarray:
        out = np.zeros(degree)
        m = min(degree, self.coeffs.size)
        out[:m] = self.coeffs[:m]
        return out

    def __add__(self, other):
        if not isinstance(other, SineSeries):
            return NotImplemented
        _check_k(self, other)
        d = max(self.degree, other.degree)
        return SineSeries(self.padded(d) + other.padded(d), self.k)

    def __neg__(self):
        return SineSeries(-self.coeffs, self.k)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return SineSeries(self.coeffs * other, self.k)
        if isinstance(other, SineSeries):
            return multiply_ss(self, other)
        if isinstance(other, CosineSeries):
            return multiply_sc(self, other)
        return NotImplemented

    __rmul__ = __mul__

    def __repr__(self):
        return f"SineSeries({self.coeffs.tolist()}, k={self.k!r})"


def _check_k(f, g):
    if f.k != g.k:
        raise WavenumberMismatch(f"wavenumbers differ: {f.k} vs {g.k}")


def _index_grid(nf: int, ng: int, f_start: int, g_start: int):
    i = np.arange(f_start, f_start + nf)[:, None]
    j = np.arange(g_start, g_start + ng)[None, :]
    return np.broadcast_to(i, (nf, ng)), np.broadcast_to(j, (nf, ng))


def differentiate(f: CosineSeries) -> SineSeries:
    """d/dx of a cosine series: ``-(i k) c_i sin(i k x)``."""
    i = np.arange(1, f.coeffs.size)
    return SineSeries(-i * f.k * f.coeffs[1:], f.k)


def differentiate_sine(f: SineSeries) -> CosineSeries:
    """d/dx of a sine series: ``(i k) s_i cos(i k x)``."""
    i = np.arange(1, f.coeffs.size + 1)
    return CosineSeries(np.concatenate(([0.0], i * f.k * f.coeffs)), f.k)


def multiply_cc(f: CosineSeries, g: CosineSeries) -> CosineSeries:
    """Exact product via cos(a)cos(b) = [cos(a-b) + cos(a+b)] / 2."""
    _check_k(f, g)
    i, j = _index_grid(f.coeffs.size, g.coeffs.size, 0, 0)
    half = 0.5 * np.outer(f.coeffs, g.coeffs)
    out = np.zeros(f.degree + g.degree + 1)
    np.add.at(out, i + j, half)
    np.add.at(out, np.abs(i - j), half)
    return CosineSeries(out, f.k)


def multiply_ss(f: SineSeries, g: SineSeries) -> CosineSeries:
    """Exact product via sin(a)sin(b) = [cos(a-b) - cos(a+b)] / 2."""
    _check_k(f, g)
    i, j = _index_grid(f.coeffs.size, g.coeffs.size, 1, 1)
    half = 0.5 * np.outer(f.coeffs, g.coeffs)
    out = np.zeros(f.degree + g.degree + 1)
    np.add.at(out, np.abs(i - j), half)
    np.add.at(out, i + j, -half)
    return CosineSeries(out, f.k)


def multiply_sc(f: SineSeries, g: CosineSeries) -> SineSeries:
    """Exact product via sin(a)cos(b) = [sin(a+b) + sin(a-b)] / 2."""
    _check_k(f, g)
    i, j = _index_grid(f.coeffs.size, g.coeffs.size, 1, 0)
    half = 0.5 * np.outer(f.coeffs, g.coeffs)
    # index 0 collects sin(0) = 0 and is dropped
    out = np.zeros(f.degree + g.degree + 1)
    np.add.at(out, i + j, half)
    diff = i - j
    np.add.at(out, np.abs(diff), np.sign(diff) * half)
    return SineSeries(out[1:], f.k)


def truncate(f: CosineSeries, M: int) -> tuple[CosineSeries, float]:
    """Drop harmonics above ``M``.

    Returns the truncated series and the largest absolute coefficient that was
    discarded (0.0 when nothing was cut).
    """
    if M < 0:
        raise ValueError("truncation order must be non-negative")
    tail = f.coeffs[M + 1:]
    leakage = float(np.max(np.abs(tail))) if tail.size else 0.0
    return CosineSeries(f.coeffs[: M + 1], f.k), leakage
