"""Experiment-level predictions: HOM interference, filtered JSI scans, Gaussian fits, brightness."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares
from scipy.special import erf

from .dispersion import C_LIGHT, wavelength_of
from .jsa import Axis1D, GaussianJsaCoefficients, JsaMatrix, PumpSpec
from .schmidt import purity_gaussian_analytic


class Side(str, Enum):
    SIGNAL = "signal"
    IDLER = "idler"


class HomPair(str, Enum):
    SIGNAL_SIGNAL = "signal-signal"
    SIGNAL_IDLER = "signal-idler"


class GridMismatchError(ValueError):
    pass


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class ReducedState:
    axis: Axis1D
    rho: np.ndarray = field(repr=False)

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))


def reduced_state(jsa: JsaMatrix, side: Side) -> ReducedState:
    """rho_s = S S^dagger or rho_i = S^T S^*, normalized to unit trace."""
    if not jsa.normalized:
        raise ValueError("reduced_state needs a normalized JSA")
    s = jsa.amplitudes
    if Side(side) is Side.SIGNAL:
        rho, axis = s @ s.conj().T, jsa.grid.signal
    else:
        rho, axis = s.T @ s.conj(), jsa.grid.idler
    return ReducedState(axis, rho / np.trace(rho).real)


def _same_axis(a: Axis1D, b: Axis1D) -> None:
    if a.points != b.points or not np.allclose(
        [a.center, a.half_span], [b.center, b.half_span], rtol=1e-12, atol=0
    ):
        raise GridMismatchError(f"states live on different frequency grids: {a} vs {b}")


def hom_visibility(a: ReducedState, b: ReducedState) -> float:
    """Tr[rho_a rho_b]."""
    _same_axis(a.axis, b.axis)
    return float(np.real(np.sum(a.rho * b.rho.T)))


def hom_visibility_from_distance(a: ReducedState, b: ReducedState) -> float:
    """(Tr[rho_a^2] + Tr[rho_b^2] - ||rho_a - rho_b||_HS^2) / 2."""
    _same_axis(a.axis, b.axis)
    d = a.rho - b.rho
    return 0.5 * (a.purity + b.purity - float(np.sum(np.abs(d) ** 2)))


@dataclass(frozen=True)
class HomCurve:
    delays: np.ndarray  # s
    coincidences: np.ndarray  # normalized to the far-delay baseline 1

    @property
    def visibility(self) -> float:
        return 1.0 - float(np.min(self.coincidences))

    def fwhm(self) -> float:
        """Full width of the dip at half depth, by linear interpolation."""
        depth = 1.0 - self.coincidences
        half = depth.max() / 2
        above = np.flatnonzero(depth >= half)
        lo, hi = above[0], above[-1]
        t, d = self.delays, depth

        def cross(i, j):
            return t[i] + (half - d[i]) * (t[j] - t[i]) / (d[j] - d[i])

        left = cross(lo - 1, lo) if lo > 0 else t[lo]
        right = cross(hi, hi + 1) if hi + 1 < len(t) else t[hi]
        return float(right - left)


def _side_state(jsa: JsaMatrix, side: Side) -> ReducedState:
    return reduced_state(jsa, side)


def hom_dip(
    jsa_a: JsaMatrix, jsa_b: JsaMatrix, which: HomPair, delays: Sequence[float]
) -> HomCurve:
    """p(tau) = 1 - Re Tr[rho_a D(tau) rho_b D(-tau)], D(tau) = diag(exp(i w tau)).

    Photon a is always the signal of source a; photon b is the signal or the
    idler of source b. Detunings from the grid centre are used in the phase,
    which only drops a global factor that cancels.
    """
    ra = _side_state(jsa_a, Side.SIGNAL)
    side_b = Side.SIGNAL if HomPair(which) is HomPair.SIGNAL_SIGNAL else Side.IDLER
    rb = _side_state(jsa_b, side_b)
    _same_axis(ra.axis, rb.axis)
    w = ra.axis.detuning
    rho_a, rho_bt = ra.rho, rb.rho.T
    delays = np.asarray(delays, dtype=float)
    p = np.empty_like(delays)
    for n, tau in enumerate(delays):
        ph = np.exp(1j * w * tau)
        # Tr[A D B D*] = sum_jk A_jk ph_k B_kj conj(ph_j)
        p[n] = 1.0 - np.real(np.sum(rho_a * np.outer(ph.conj(), ph) * rho_bt))
    return HomCurve(delays, p)


class FilterShape(str, Enum):
    GAUSSIAN = "gaussian"
    FLAT = "flat"


@dataclass(frozen=True)
class MeasuredJsi:
    """Coincidence map versus filter centre frequencies (rad/s).

    ``counts[j, k]`` is for signal filter ``signal_positions[j]`` and idler
    filter ``idler_positions[k]``.
    """

    signal_positions: np.ndarray
    idler_positions: np.ndarray
    counts: np.ndarray

    @property
    def signal_wavelengths(self) -> np.ndarray:
        return wavelength_of(self.signal_positions)

    @property
    def idler_wavelengths(self) -> np.ndarray:
        return wavelength_of(self.idler_positions)


def _cell_weights(axis: Axis1D, positions: np.ndarray, fwhm: float, shape: FilterShape) -> np.ndarray:
    """Filter transmission integrated over each grid cell, normalized to unit area.

    Integrating over cells keeps the delta-filter limit exact on grid points.
    """
    w = axis.values
    edges = np.concatenate(([w[0] - axis.step / 2], w + axis.step / 2))
    rel = edges[None, :] - positions[:, None]
    if FilterShape(shape) is FilterShape.GAUSSIAN:
        s = fwhm / (2 * math.sqrt(2 * math.log(2)))
        cdf = 0.5 * (1 + erf(rel / (math.sqrt(2) * s)))
    else:
        cdf = np.clip(rel / fwhm + 0.5, 0.0, 1.0)
    return np.diff(cdf, axis=1)


def simulate_jsi_measurement(
    jsa: JsaMatrix,
    filter_fwhm: float,
    step: float,
    shape: FilterShape = FilterShape.GAUSSIAN,
) -> MeasuredJsi:
    """Scan two tunable filters over the JSI.

    ``filter_fwhm`` and ``step`` are wavelengths (m), converted to angular
    frequency at each grid axis centre. The filter lattice covers the JSA grid.
    """
    if not filter_fwhm > 0:
        raise ValueError("filter FWHM must be positive")
    if step > filter_fwhm:
        warnings.warn(
            f"filter step {step * 1e9:.3g} nm exceeds the filter FWHM {filter_fwhm * 1e9:.3g} nm; "
            "the map undersamples the filter response",
            UserWarning,
            stacklevel=2,
        )
    maps = []
    for axis in (jsa.grid.signal, jsa.grid.idler):
        lam0 = 2 * math.pi * C_LIGHT / axis.center
        to_w = 2 * math.pi * C_LIGHT / lam0**2
        dw, fw = step * to_w, filter_fwhm * to_w
        n = int(math.floor(axis.half_span / dw))
        pos = axis.center + dw * np.arange(-n, n + 1)
        maps.append((pos, _cell_weights(axis, pos, fw, shape)))
    (ps, fs), (pi, fi) = maps
    counts = fs @ jsa.intensity @ fi.T
    return MeasuredJsi(ps, pi, counts)


@dataclass(frozen=True)
class JsiFit:
    intensity: tuple[float, float, float]  # A, B, C of exp(-A x^2 - B y^2 - C x y)
    amplitude: GaussianJsaCoefficients
    purity: float
    residual: float  # rms residual relative to the map peak
    center: tuple[float, float]


MIN_POINTS_ABOVE_HALF = 7


def fit_jsi_gaussian(data: MeasuredJsi, max_nfev: int = 2000) -> JsiFit:
    """Least-squares fit of a rotated 2D Gaussian to a coincidence map.

    Intensity exponents are twice the amplitude exponents, so the amplitude
    coefficients are (A, B, C) / 2 and the purity follows analytically.
    """
    z = np.asarray(data.counts, dtype=float)
    peak = z.max()
    if not peak > 0:
        raise FitError("map is empty")
    above = z >= peak / 2
    rows, cols = np.any(above, axis=1).sum(), np.any(above, axis=0).sum()
    if rows < MIN_POINTS_ABOVE_HALF or cols < MIN_POINTS_ABOVE_HALF:
        raise FitError(
            f"only {rows}x{cols} filter positions above half maximum; need at least "
            f"{MIN_POINTS_ABOVE_HALF}x{MIN_POINTS_ABOVE_HALF}"
        )
    x0, y0 = data.signal_positions, data.idler_positions
    xs = (x0 - x0.mean()) / (x0[1] - x0[0])
    ys = (y0 - y0.mean()) / (y0[1] - y0[0])
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    zn = z / peak

    # moment-based start, in lattice units
    wgt = zn * above
    m = wgt.sum()
    mx, my = (wgt * X).sum() / m, (wgt * Y).sum() / m
    cov = np.array(
        [
            [(wgt * (X - mx) ** 2).sum(), (wgt * (X - mx) * (Y - my)).sum()],
            [(wgt * (X - mx) * (Y - my)).sum(), (wgt * (Y - my) ** 2).sum()],
        ]
    ) / m
    if np.linalg.matrix_rank(cov, tol=1e-12 * np.trace(cov)) < 2:
        raise FitError("degenerate map: the half-maximum region is rank deficient")
    prec = np.linalg.inv(cov) / 2
    start = [1.0, mx, my, prec[0, 0], prec[1, 1], 2 * prec[0, 1]]

    def model(p):
        amp, cx, cy, A, B, C = p
        dx, dy = X - cx, Y - cy
        return amp * np.exp(-A * dx**2 - B * dy**2 - C * dx * dy)

    sol = least_squares(lambda p: (model(p) - zn).ravel(), start, max_nfev=max_nfev, method="lm")
    if not sol.success:
        raise FitError(f"Gaussian fit did not converge: {sol.message}")
    amp, cx, cy, A, B, C = sol.x
    if not (A > 0 and B > 0 and 4 * A * B - C * C > 0):
        raise FitError(f"fit converged to a non-normalizable Gaussian (A={A:.3g}, B={B:.3g}, C={C:.3g})")
    sx, sy = x0[1] - x0[0], y0[1] - y0[0]
    A, B, C = A / sx**2, B / sy**2, C / (sx * sy)
    coeffs = GaussianJsaCoefficients(A / 2, B / 2, C / 2)
    rms = float(np.sqrt(np.mean(sol.fun**2)))
    center = (float(x0.mean() + cx * sx), float(y0.mean() + cy * sy))
    return JsiFit((A, B, C), coeffs, purity_gaussian_analytic(coeffs), rms, center)


@dataclass(frozen=True)
class LossBudget:
    items: tuple[tuple[str, float], ...]  # (label, dB per photon)

    def __post_init__(self):
        for label, db in self.items:
            if db < 0:
                raise ValueError(f"loss {label!r} is negative ({db} dB)")

    @property
    def total_db(self) -> float:
        return float(sum(db for _, db in self.items))

    @property
    def transmission(self) -> float:
        return 10 ** (-self.total_db / 10)


@dataclass(frozen=True)
class BrightnessReport:
    pairs_per_pulse: float
    pulse_energy: float  # J
    rep_rate: float | None
    loss: LossBudget

    @property
    def source_brightness(self) -> float:
        """Pairs per microjoule of pump energy at the crystal."""
        return self.pairs_per_pulse / (self.pulse_energy * 1e6)

    @property
    def pair_transmission(self) -> float:
        return self.loss.transmission**2

    @property
    def fibered_brightness(self) -> float:
        return self.source_brightness * self.pair_transmission

    @property
    def pair_rate(self) -> float | None:
        return None if self.rep_rate is None else self.pairs_per_pulse * self.rep_rate

    @property
    def heralded_single_rate(self) -> float | None:
        """Detected-side single-photon rate with one photon's loss applied."""
        r = self.pair_rate
        return None if r is None else r * self.loss.transmission

    def pairs_per_pulse_at(self, pulse_energy: float) -> float:
        """Pair probability per pulse at another pulse energy (linear, low-gain regime)."""
        return self.source_brightness * pulse_energy * 1e6


def brightness_report(pairs_per_pulse: float, pump: PumpSpec, budget: LossBudget) -> BrightnessReport:
    if pairs_per_pulse < 0:
        raise ValueError("pairs per pulse must be non-negative")
    if not (pump.pulse_energy and pump.pulse_energy > 0):
        raise ValueError("pump pulse energy must be positive")
    return BrightnessReport(pairs_per_pulse, pump.pulse_energy, pump.rep_rate, budget)
