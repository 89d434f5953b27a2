"""Joint spectral amplitude of the photon pair: pump envelope times phase matching."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .dispersion import (
    C_LIGHT,
    CrystalSpec,
    PhaseMatchingError,
    omega_of,
    qpm_mismatch,
    slownesses,
)

# Gaussian stand-in for sinc: matches the amplitude FWHM of sinc(x) with exp(-alpha^2 x^2)
ALPHA = 0.439
FWHM_PER_SIGMA = 2 * math.sqrt(2 * math.log(2))
SECH_FWHM_FACTOR = 2 * math.log(1 + math.sqrt(2))  # intensity FWHM of sech^2(x)


class Envelope(str, Enum):
    GAUSSIAN = "gaussian"
    SECH2 = "sech2"


class PhaseMatchingModel(str, Enum):
    SINC = "sinc"
    GAUSSIAN = "gaussian"


class GridResolutionWarning(UserWarning):
    pass


def fwhm_nm_to_sigma(fwhm: float, wavelength: float) -> float:
    """Spectral intensity FWHM in wavelength -> Gaussian sigma of angular frequency."""
    d_omega = 2 * math.pi * C_LIGHT * fwhm / wavelength**2
    return d_omega / FWHM_PER_SIGMA


def sigma_to_fwhm_nm(sigma: float, wavelength: float) -> float:
    return sigma * FWHM_PER_SIGMA * wavelength**2 / (2 * math.pi * C_LIGHT)


def duration_to_sigma(fwhm_t: float) -> float:
    """Transform-limited Gaussian pulse: dnu * dt = 2 ln2 / pi."""
    dnu = 2 * math.log(2) / math.pi / fwhm_t
    return 2 * math.pi * dnu / FWHM_PER_SIGMA


def sigma_to_duration(sigma: float) -> float:
    dnu = FWHM_PER_SIGMA * sigma / (2 * math.pi)
    return 2 * math.log(2) / math.pi / dnu


@dataclass(frozen=True)
class PumpSpec:
    """Pulsed pump. ``sigma`` is the Gaussian standard deviation of angular frequency
    of the spectral amplitude envelope, i.e. intensity FWHM = 2 sqrt(2 ln2) sigma."""

    wavelength: float
    sigma: float
    shape: Envelope = Envelope.GAUSSIAN
    pulse_energy: float | None = None
    rep_rate: float | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"pump sigma must be positive, got {self.sigma}")
        if not self.wavelength > 0:
            raise ValueError("pump wavelength must be positive")

    @property
    def omega(self) -> float:
        return float(omega_of(self.wavelength))

    @property
    def fwhm_omega(self) -> float:
        return FWHM_PER_SIGMA * self.sigma

    @property
    def fwhm_wavelength(self) -> float:
        return sigma_to_fwhm_nm(self.sigma, self.wavelength)

    @property
    def duration_fwhm(self) -> float:
        return sigma_to_duration(self.sigma)

    def with_sigma(self, sigma: float) -> "PumpSpec":
        return replace(self, sigma=sigma)

    @classmethod
    def from_fwhm_wavelength(cls, wavelength: float, fwhm: float, **kw) -> "PumpSpec":
        return cls(wavelength, fwhm_nm_to_sigma(fwhm, wavelength), **kw)


@dataclass(frozen=True)
class Axis1D:
    center: float
    half_span: float
    points: int

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.center - self.half_span, self.center + self.half_span, self.points)

    @property
    def step(self) -> float:
        return 2 * self.half_span / (self.points - 1)

    @property
    def detuning(self) -> np.ndarray:
        return self.values - self.center


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform signal x idler angular-frequency grid (rad/s)."""

    signal: Axis1D
    idler: Axis1D

    def __post_init__(self):
        for ax in (self.signal, self.idler):
            if ax.points < 16 or ax.points % 2:
                raise ValueError(f"grid point count must be even and >= 16, got {ax.points}")
            if not ax.half_span > 0:
                raise ValueError("grid half-span must be positive")
            if not ax.half_span < ax.center:
                raise ValueError("grid extends to non-positive frequencies")

    @classmethod
    def symmetric(cls, omega_s: float, omega_i: float, half_span: float, points: int):
        return cls(Axis1D(omega_s, half_span, points), Axis1D(omega_i, half_span, points))

    def mesh(self):
        return np.meshgrid(self.signal.values, self.idler.values, indexing="ij")

    @property
    def cell(self) -> float:
        return self.signal.step * self.idler.step

    def same_axes(self) -> bool:
        return self.signal == self.idler


@dataclass(frozen=True)
class JsaMatrix:
    """S(w_s, w_i) sampled on ``grid``; rows index signal, columns idler."""

    grid: FrequencyGrid
    amplitudes: np.ndarray
    normalized: bool = False

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.cell)

    def normalize(self) -> "JsaMatrix":
        n2 = self.norm2
        if not n2 > 0:
            raise ValueError("cannot normalize an all-zero JSA")
        return JsaMatrix(self.grid, self.amplitudes / math.sqrt(n2), True)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def transpose(self) -> "JsaMatrix":
        return JsaMatrix(
            FrequencyGrid(self.grid.idler, self.grid.signal), self.amplitudes.T.copy(), self.normalized
        )


@dataclass(frozen=True)
class GaussianJsaCoefficients:
    """S ∝ exp(-a dws^2 - b dwi^2 - c dws dwi), coefficients in (rad/s)^-2."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and 4 * self.a * self.b - self.c**2 > 0):
            raise ValueError(f"non-normalizable Gaussian JSA coefficients {self}")

    def evaluate(self, dws, dwi):
        return np.exp(-self.a * dws**2 - self.b * dwi**2 - self.c * dws * dwi)

    def marginal_std(self) -> tuple[float, float]:
        """Standard deviations of the signal and idler JSI marginals."""
        det = 4 * self.a * self.b - self.c**2
        return math.sqrt(self.b / det), math.sqrt(self.a / det)


def pump_envelope(shape: Envelope, sigma: float, omega_p: float, omega_s, omega_i):
    """Pump spectral amplitude at w_s + w_i; both shapes peak at 1 and share the intensity FWHM."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    delta = np.asarray(omega_s) + np.asarray(omega_i) - omega_p
    if Envelope(shape) is Envelope.GAUSSIAN:
        return np.exp(-(delta**2) / (4 * sigma**2))
    width = FWHM_PER_SIGMA * sigma / SECH_FWHM_FACTOR
    return 1.0 / np.cosh(delta / width)


def _mismatch(crystal: CrystalSpec, omega_s, omega_i):
    omega_s, omega_i = np.asarray(omega_s, float), np.asarray(omega_i, float)
    return qpm_mismatch(crystal, omega_s + omega_i, omega_s, omega_i)


def phasematch_sinc(crystal: CrystalSpec, omega_s, omega_i):
    dk = _mismatch(crystal, omega_s, omega_i)
    return np.sinc(dk * crystal.length / (2 * np.pi))


def phasematch_gaussian(crystal: CrystalSpec, omega_s, omega_i):
    dk = _mismatch(crystal, omega_s, omega_i)
    return np.exp(-(ALPHA**2) * dk**2 * crystal.length**2 / 4)


def phasematch(crystal, omega_s, omega_i, model: PhaseMatchingModel):
    if PhaseMatchingModel(model) is PhaseMatchingModel.SINC:
        return phasematch_sinc(crystal, omega_s, omega_i)
    return phasematch_gaussian(crystal, omega_s, omega_i)


def check_pump_resolution(pump: PumpSpec, grid: FrequencyGrid, min_points: float = 8) -> None:
    step = max(grid.signal.step, grid.idler.step)
    if pump.fwhm_omega / step < min_points:
        warnings.warn(
            f"grid resolves the pump FWHM with only {pump.fwhm_omega / step:.1f} points "
            f"(< {min_points:g}); refine the grid or narrow its span",
            GridResolutionWarning,
            stacklevel=3,
        )


def build_jsa(
    crystal: CrystalSpec,
    pump: PumpSpec,
    grid: FrequencyGrid,
    pm_model: PhaseMatchingModel = PhaseMatchingModel.SINC,
) -> JsaMatrix:
    check_pump_resolution(pump, grid)
    ws, wi = grid.mesh()
    amp = pump_envelope(pump.shape, pump.sigma, pump.omega, ws, wi) * phasematch(
        crystal, ws, wi, pm_model
    )
    return JsaMatrix(grid, amp.astype(complex)).normalize()


def gaussian_coefficients(crystal: CrystalSpec, pump: PumpSpec) -> GaussianJsaCoefficients:
    wp = pump.omega
    kp, ks, ki = (s.value for s in slownesses(crystal, wp, wp / 2, wp / 2))
    g = (ALPHA * crystal.length) ** 2
    inv = 1 / pump.sigma**2
    return GaussianJsaCoefficients(
        a=(inv + g * (kp - ks) ** 2) / 4,
        b=(inv + g * (kp - ki) ** 2) / 4,
        c=(inv + g * (kp - ks) * (kp - ki)) / 2,
    )


def separability_residual(crystal: CrystalSpec, pump: PumpSpec) -> float:
    """alpha^2 L^2 sigma^2 (k'_p - k'_s)(k'_p - k'_i) + 1; zero for a separable Gaussian JSA."""
    wp = pump.omega
    kp, ks, ki = (s.value for s in slownesses(crystal, wp, wp / 2, wp / 2))
    return (ALPHA * crystal.length * pump.sigma) ** 2 * (kp - ks) * (kp - ki) + 1


@dataclass(frozen=True)
class PumpBandwidth:
    sigma: float  # rad/s
    wavelength: float

    @property
    def fwhm_omega(self) -> float:
        return FWHM_PER_SIGMA * self.sigma

    @property
    def fwhm_frequency(self) -> float:
        return self.fwhm_omega / (2 * math.pi)

    @property
    def duration_fwhm(self) -> float:
        return sigma_to_duration(self.sigma)

    @property
    def fwhm_wavelength(self) -> float:
        return sigma_to_fwhm_nm(self.sigma, self.wavelength)


def separable_sigma(slowness_product: float, length: float) -> float:
    """Pump sigma that cancels the cross term of the Gaussian JSA."""
    if not slowness_product < 0:
        raise PhaseMatchingError(
            "no separable point: the slowness product (k'_p - k'_s)(k'_p - k'_i) must be "
            f"negative, got {slowness_product:.6e} s^2/m^2"
        )
    return 1 / (ALPHA * length * math.sqrt(-slowness_product))


def optimal_pump_bandwidth(crystal: CrystalSpec, lambda_p: float) -> PumpBandwidth:
    wp = float(omega_of(lambda_p))
    kp, ks, ki = (s.value for s in slownesses(crystal, wp, wp / 2, wp / 2))
    return PumpBandwidth(separable_sigma((kp - ks) * (kp - ki), crystal.length), lambda_p)


SIDELOBE_ZEROS = 4


def ridge_zero_detuning(crystal: CrystalSpec, pump: PumpSpec, order: int = SIDELOBE_ZEROS) -> float:
    """Signal detuning of the ``order``-th sinc zero along the pump ridge w_s + w_i = w_p."""
    wp = pump.omega
    _, ks, ki = (s.value for s in slownesses(crystal, wp, wp / 2, wp / 2))
    if ks == ki:
        return 0.0
    return 2 * math.pi * order / (crystal.length * abs(ks - ki))


def default_grid(
    crystal: CrystalSpec,
    pump: PumpSpec,
    points: int = 256,
    span_multiplier: float = 5.0,
    sidelobe_zeros: int = SIDELOBE_ZEROS,
) -> FrequencyGrid:
    """Degenerate grid, same axis for signal and idler.

    The half-span is ``span_multiplier`` times the wider Gaussian-model marginal
    standard deviation, widened if needed so the sinc ridge is kept out to its
    ``sidelobe_zeros``-th zero. Cutting the ridge sooner drops sidelobes and
    overstates the purity. Pass ``sidelobe_zeros=0`` for the bare multiplier.
    """
    std = max(gaussian_coefficients(crystal, pump).marginal_std())
    half = span_multiplier * std
    if sidelobe_zeros:
        half = max(half, ridge_zero_detuning(crystal, pump, sidelobe_zeros))
    w0 = pump.omega / 2
    return FrequencyGrid.symmetric(w0, w0, half, points)


def sidelobe_weight(crystal: CrystalSpec, jsa: JsaMatrix) -> float:
    """Fraction of the JSI lying outside the central sinc lobe, |dk L / 2| > pi."""
    ws, wi = jsa.grid.mesh()
    outside = np.abs(_mismatch(crystal, ws, wi) * crystal.length / 2) > np.pi
    inten = jsa.intensity
    return float(inten[outside].sum() / inten.sum())
