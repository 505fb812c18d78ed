"""Cosine amplitudes of gridded fields.

Projection uses the composite midpoint rule on the cell centres, which is the
discrete cosine transform the finite-volume grid is built on: for ``N`` cells the
modes ``cos(i pi x / L)``, ``i < N``, are exactly orthogonal under it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jsonio
from .pde import FieldPair, Grid1D
from .residuals import AmplitudeSpectrum, Model

NOISE_FLOOR = 1e-6
DEFAULT_ORDER = {Model.ONE: 3, Model.TWO: 2}


class HomogeneousField(ValueError):
    pass


@dataclass
class ExtractionResult:
    spectrum: AmplitudeSpectrum
    k_est: float | None
    fundamental_mode: int
    tail_energy: float
    contamination: float = 0.0


def project_amplitudes(field, g: Grid1D, i_max: int) -> np.ndarray:
    """``a_0 = mean(field)`` and ``a_i = 2 mean(field cos(i pi x / L))`` for i = 1..i_max."""
    field = np.asarray(field, dtype=float)
    if field.shape != (g.N,):
        raise ValueError(f"field has shape {field.shape}, grid has {g.N} cells")
    if i_max >= g.N // 2:
        raise ValueError(f"mode {i_max} is not resolved on {g.N} cells (need i_max < N/2)")
    i = np.arange(i_max + 1)
    basis = np.cos(np.outer(i, g.x) * (np.pi / g.L))
    a = 2.0 * (basis @ field) / g.N
    a[0] *= 0.5
    return a


def detect_fundamental(a, noise_floor: float = NOISE_FLOOR) -> int:
    """Index of the largest oscillating amplitude; ties go to the lower mode.

    The floor is relative to the largest coefficient, mean included.
    """
    a = np.abs(np.asarray(a, dtype=float))
    scale = float(np.max(a)) if a.size else 0.0
    osc = a[1:]
    if osc.size == 0 or scale == 0.0 or np.max(osc) <= noise_floor * scale:
        raise HomogeneousField("homogeneous field: no mode above the noise floor")
    # argmax returns the first maximum, which is the tie-break we want
    return int(np.argmax(osc)) + 1


def resample_to_fundamental(a, m: int, M: int) -> tuple[np.ndarray, float]:
    """``(a_0, a_m, a_2m, ..., a_Mm)`` and the largest off-harmonic ``|a_j|``, 1 <= j <= Mm."""
    a = np.asarray(a, dtype=float)
    if m < 1:
        raise ValueError("fundamental mode must be >= 1")
    if M * m >= a.size:
        raise ValueError(f"need coefficients up to {M * m}, have {a.size - 1}")
    alpha = a[0: M * m + 1: m].copy()
    j = np.arange(1, M * m + 1)
    off = a[j[j % m != 0]]
    return alpha, float(np.max(np.abs(off))) if off.size else 0.0


def extract(
    g: Grid1D,
    f: FieldPair,
    M: int | None = None,
    model: Model | None = None,
    i_max: int | None = None,
    noise_floor: float = NOISE_FLOOR,
) -> ExtractionResult:
    """Cosine amplitudes of both fields relative to the detected fundamental.

    A homogeneous field gives a spectrum holding only the mean and
    ``fundamental_mode = 0``.
    """
    if M is None:
        M = DEFAULT_ORDER[Model(model)] if model is not None else 3
    if i_max is None:
        i_max = g.N // 2 - 1
    a = project_amplitudes(f.n, g, i_max)
    b = project_amplitudes(f.c, g, i_max)
    try:
        m = detect_fundamental(a, noise_floor)
    except HomogeneousField:
        spec = AmplitudeSpectrum(a[:1], b[:1], L=g.L, m=0, model=model)
        return ExtractionResult(spec, None, 0, 0.0)
    alpha, contamination = resample_to_fundamental(a, m, M)
    beta, _ = resample_to_fundamental(b, m, M)
    k = m * np.pi / g.L
    energy = a[1:] ** 2
    total = float(np.sum(energy))
    tail = float(np.sum(energy[M * m:]) / total) if total > 0 else 0.0
    spec = AmplitudeSpectrum(alpha, beta, k=k, L=g.L, m=m, model=model)
    return ExtractionResult(spec, k, m, tail, contamination)


def reconstruct(spec: AmplitudeSpectrum, x) -> np.ndarray:
    """Evaluate ``sum alpha_i cos(i k x)``."""
    if spec.k is None:
        return np.full(np.shape(x), spec.alpha[0])
    i = np.arange(spec.alpha.size)
    return np.cos(np.multiply.outer(np.asarray(x, dtype=float), i) * spec.k) @ spec.alpha


def spectrum_to_dict(spec: AmplitudeSpectrum) -> dict:
    return {
        "model": None if spec.model is None else int(spec.model),
        "L": spec.L,
        "m": spec.m,
        "k": spec.k,
        "M": spec.M,
        "alpha": [float(v) for v in spec.alpha],
        "beta": [float(v) for v in spec.beta],
    }


def spectrum_from_dict(d: dict) -> AmplitudeSpectrum:
    if "alpha" not in d:
        raise ValueError("spectrum needs an 'alpha' list")
    alpha = np.asarray(d["alpha"], dtype=float)
    beta = d.get("beta")
    beta = None if beta is None else np.asarray(beta, dtype=float)
    if "M" in d and d["M"] is not None and int(d["M"]) != alpha.size - 1:
        raise ValueError(f"M = {d['M']} disagrees with {alpha.size} alpha entries")
    model = d.get("model")
    return AmplitudeSpectrum(
        alpha,
        beta,
        k=d.get("k"),
        L=d.get("L"),
        m=d.get("m"),
        model=None if model is None else Model(int(model)),
    )


def write_spectrum(path, spec: AmplitudeSpectrum) -> None:
    jsonio.dump(spectrum_to_dict(spec), path)


def read_spectrum(path) -> AmplitudeSpectrum:
    return spectrum_from_dict(jsonio.load(path))
