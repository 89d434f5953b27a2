"""Schmidt decomposition of a sampled JSA, spectral purity and g2(0)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .jsa import (
    GaussianJsaCoefficients,
    JsaMatrix,
    PhaseMatchingModel,
    SIDELOBE_ZEROS,
    PumpSpec,
    build_jsa,
    default_grid,
)

TRUNCATION = 1e-12


@dataclass(frozen=True)
class SchmidtResult:
    singular_values: np.ndarray  # nonincreasing, sum of squares 1
    signal_modes: np.ndarray | None = field(default=None, repr=False)  # columns
    idler_modes: np.ndarray | None = field(default=None, repr=False)  # columns

    @property
    def purity(self) -> float:
        return float(np.sum(self.singular_values**4))

    @property
    def schmidt_number(self) -> float:
        return 1.0 / self.purity


def schmidt_decompose(jsa: JsaMatrix, keep_modes: int = 0) -> SchmidtResult:
    """SVD of the amplitude matrix.

    The uniform grid makes the quadrature weight a constant, so the singular
    values of the raw matrix only need renormalizing.
    """
    if not jsa.normalized or abs(jsa.norm2 - 1) > 1e-9:
        raise ValueError("schmidt_decompose needs a normalized JSA (call .normalize())")
    if keep_modes:
        u, s, vh = np.linalg.svd(jsa.amplitudes, full_matrices=False)
    else:
        s = np.linalg.svd(jsa.amplitudes, compute_uv=False)
    s = s[s > TRUNCATION * s[0]]
    s = s / math.sqrt(np.sum(s**2))
    if keep_modes:
        k = min(keep_modes, len(s))
        return SchmidtResult(s, u[:, :k], vh[:k].conj().T)
    return SchmidtResult(s)


def purity_gaussian_analytic(coeffs: GaussianJsaCoefficients) -> float:
    """Purity of exp(-a x^2 - b y^2 - c x y).

    The JSI is a bivariate normal with correlation r = -c / (2 sqrt(ab)); a
    real Gaussian two-mode amplitude has Schmidt purity sqrt(1 - r^2).
    """
    a, b, c = coeffs.a, coeffs.b, coeffs.c
    return math.sqrt(1 - c * c / (4 * a * b))


def g2_zero(purity: float) -> float:
    if not 0 < purity <= 1 + 1e-12:
        raise ValueError(f"purity must lie in (0, 1], got {purity}")
    return 1.0 + min(purity, 1.0)


@dataclass(frozen=True)
class ScanPoint:
    sigma: float
    fwhm_nm: float
    purity: float

    @property
    def g2(self) -> float:
        return g2_zero(self.purity)


def g2_bandwidth_scan(
    crystal,
    pump: PumpSpec,
    sigmas: Sequence[float],
    spatial=None,
    points: int = 256,
    span_multiplier: float = 5.0,
    pm_model: PhaseMatchingModel = PhaseMatchingModel.SINC,
    sidelobe_zeros: int = SIDELOBE_ZEROS,
) -> list[ScanPoint]:
    """g2(0) = 1 + purity for each pump sigma.

    ``spatial`` is an optional ``(pump_beam, collection)`` pair; when given the
    JSA is the single-mode-fiber-projected one from :mod:`pairsource.spatial`.
    """
    if len(sigmas) == 0:
        raise ValueError("sigma list is empty")
    from .spatial import fiber_coupled_jsa

    out = []
    for sigma in sigmas:
        p = pump.with_sigma(float(sigma))
        grid = default_grid(crystal, p, points, span_multiplier, sidelobe_zeros)
        if spatial is None:
            jsa = build_jsa(crystal, p, grid, pm_model)
        else:
            beam, collection = spatial
            jsa = fiber_coupled_jsa(crystal, p, beam, grid, collection, pm_model)
        out.append(ScanPoint(float(sigma), p.fwhm_wavelength * 1e9, schmidt_decompose(jsa).purity))
    return out
