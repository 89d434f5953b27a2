"""Gaussian-beam focusing, transverse-wavevector-resolved JSA and single-mode fiber projection.

Transverse model: one transverse wavevector component per photon (q_s, q_i),
paraxial longitudinal wavevectors k_z = k - q^2 / 2k, and a Gaussian pump
angular spectrum exp(-(q_s + q_i)^2 w_p^2 / 4). Collection modes are Gaussian
beams focused at the crystal centre, exp(-q^2 w_c^2 / 4) in q. The second
transverse dimension is taken as identical and independent, so 2D
efficiencies are the squares of the 1D ones.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dispersion import CrystalSpec, qpm_mismatch, wavevector
from .jsa import (
    ALPHA,
    FrequencyGrid,
    JsaMatrix,
    PhaseMatchingModel,
    PumpSpec,
    check_pump_resolution,
    default_grid,
    pump_envelope,
)
from .schmidt import schmidt_decompose

MIN_SPAN = 4.0


class TransverseResolutionError(ValueError):
    pass


class TransverseResolutionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class BeamSpec:
    waist: float  # 1/e^2 intensity radius at the crystal centre, m
    wavelength: float  # vacuum wavelength, m

    def __post_init__(self):
        if not self.waist > 0:
            raise ValueError(f"beam waist must be positive, got {self.waist}")

    @property
    def rayleigh_range(self) -> float:
        return math.pi * self.waist**2 / self.wavelength


def focusing_parameter(beam: BeamSpec, length: float) -> float:
    """xi = L / 2 z_R, with the vacuum Rayleigh range."""
    if not length > 0:
        raise ValueError("crystal length must be positive")
    return length / (2 * beam.rayleigh_range)


@dataclass(frozen=True)
class CollectionSpec:
    """Fiber-matched collection modes, imaged to waists at the crystal centre.

    Each photon's transverse wavevector is sampled at ``modes`` points over
    ``[-span / w, span / w]`` of its own collection waist.
    """

    signal_waist: float
    idler_waist: float
    modes: int = 32
    span: float = 5.0

    def __post_init__(self):
        if not (self.signal_waist > 0 and self.idler_waist > 0):
            raise ValueError("collection waists must be positive")
        if self.modes < 8 or self.modes % 2:
            raise ValueError(f"transverse mode count must be even and >= 8, got {self.modes}")

    @classmethod
    def matched(cls, waist: float, **kw) -> "CollectionSpec":
        return cls(waist, waist, **kw)

    def q_axis(self, waist: float) -> np.ndarray:
        qmax = self.span / waist
        return np.linspace(-qmax, qmax, self.modes)

    @property
    def q_signal(self) -> np.ndarray:
        return self.q_axis(self.signal_waist)

    @property
    def q_idler(self) -> np.ndarray:
        return self.q_axis(self.idler_waist)


def fiber_mode(q: np.ndarray, waist: float) -> np.ndarray:
    """Gaussian mode amplitude in q, normalized to unit discrete norm on ``q``."""
    u = np.exp(-(q**2) * waist**2 / 4)
    dq = q[1] - q[0]
    return u / math.sqrt(np.sum(u**2) * dq)


def _check_transverse(collection: CollectionSpec, beam: BeamSpec) -> None:
    if collection.span < MIN_SPAN:
        raise TransverseResolutionError(
            f"transverse grid spans only {collection.span:g}/w; need at least {MIN_SPAN:g}/w"
        )
    for name, w in (("signal", collection.signal_waist), ("idler", collection.idler_waist)):
        dq = 2 * collection.span / w / (collection.modes - 1)
        if dq > 2 / w:
            raise TransverseResolutionError(
                f"{name} collection mode under-resolved: q step {dq:.3e} 1/m exceeds its "
                f"1/e width {2 / w:.3e} 1/m; raise the transverse mode count"
            )
        if dq > 2 / beam.waist:
            warnings.warn(
                f"pump angular spectrum (1/e width {2 / beam.waist:.3e} 1/m) is narrower than "
                f"the {name} q step {dq:.3e} 1/m",
                TransverseResolutionWarning,
                stacklevel=3,
            )


@dataclass(frozen=True)
class SpatialSpectralAmplitude:
    grid: FrequencyGrid
    q_signal: np.ndarray = field(repr=False)
    q_idler: np.ndarray = field(repr=False)
    amplitudes: np.ndarray = field(repr=False)  # (w_s, w_i, q_s, q_i)

    @property
    def cell(self) -> float:
        return self.grid.cell * (self.q_signal[1] - self.q_signal[0]) * (self.q_idler[1] - self.q_idler[0])

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.cell)

    def normalize(self) -> "SpatialSpectralAmplitude":
        return SpatialSpectralAmplitude(
            self.grid, self.q_signal, self.q_idler, self.amplitudes / math.sqrt(self.norm2)
        )

    def bucket_signal_purity(self) -> float:
        """Spectral purity of the signal seen by a detector that ignores transverse momentum.

        rho(w, w') = sum over (w_i, q_s, q_i) of S(w, ...) S*(w', ...).
        """
        a = np.moveaxis(self.amplitudes, 0, -1).reshape(-1, self.grid.signal.points)
        return _purity_of_rho(a.T @ a.conj())


def _purity_of_rho(rho: np.ndarray) -> float:
    rho = rho / np.trace(rho).real
    return float(np.real(np.sum(rho * rho.T)))


class _Kernel:
    """Frequency-only parts of the spatial JSA, shared by every (q_s, q_i) pair."""

    def __init__(self, crystal, pump, beam, grid, pm_model):
        ws, wi = grid.mesh()
        self.env = pump_envelope(pump.shape, pump.sigma, pump.omega, ws, wi)
        self.dk = qpm_mismatch(crystal, ws + wi, ws, wi)
        pol, s = crystal.polarizations, crystal.sellmeier
        self.inv2ks = 1 / (2 * wavevector(pol.signal, grid.signal.values, s))[:, None]
        self.inv2ki = 1 / (2 * wavevector(pol.idler, grid.idler.values, s))[None, :]
        self.inv2kp = 1 / (2 * wavevector(pol.pump, ws + wi, s))
        self.half_l = crystal.length / 2
        self.wp2 = beam.waist**2
        self.model = PhaseMatchingModel(pm_model)

    def __call__(self, qs: float, qi: float) -> np.ndarray:
        dkz = self.dk - qs * qs * self.inv2ks - qi * qi * self.inv2ki + (qs + qi) ** 2 * self.inv2kp
        x = dkz * self.half_l
        pm = np.sinc(x / np.pi) if self.model is PhaseMatchingModel.SINC else np.exp(-(ALPHA * x) ** 2)
        return self.env * pm * math.exp(-((qs + qi) ** 2) * self.wp2 / 4)


def build_spatial_jsa(
    crystal: CrystalSpec,
    pump: PumpSpec,
    beam: BeamSpec,
    grid: FrequencyGrid,
    collection: CollectionSpec,
    pm_model: PhaseMatchingModel = PhaseMatchingModel.SINC,
) -> SpatialSpectralAmplitude:
    """Full (w_s, w_i, q_s, q_i) tensor. Memory is 8 * Nw^2 * Nq^2 bytes."""
    _check_transverse(collection, beam)
    check_pump_resolution(pump, grid)
    qs, qi = collection.q_signal, collection.q_idler
    kernel = _Kernel(crystal, pump, beam, grid, pm_model)
    out = np.empty((grid.signal.points, grid.idler.points, len(qs), len(qi)))
    for a, q1 in enumerate(qs):
        for b, q2 in enumerate(qi):
            out[:, :, a, b] = kernel(q1, q2)
    return SpatialSpectralAmplitude(grid, qs, qi, out).normalize()


@dataclass(frozen=True)
class CouplingReport:
    """Fiber-coupling efficiencies. The 1D values are per transverse dimension;
    the headline values square them for the symmetric second dimension.

    Pair and single efficiencies are relative to the emission captured on the
    transverse grid; heralded efficiencies are conditional and grid-robust.
    """

    pair_1d: float
    signal_single_1d: float
    idler_single_1d: float

    @property
    def signal_heralded_1d(self) -> float:
        """P(signal coupled | idler coupled)."""
        return self.pair_1d / self.idler_single_1d

    @property
    def idler_heralded_1d(self) -> float:
        return self.pair_1d / self.signal_single_1d

    @property
    def pair(self) -> float:
        return self.pair_1d**2

    @property
    def signal_heralded(self) -> float:
        return self.signal_heralded_1d**2

    @property
    def idler_heralded(self) -> float:
        return self.idler_heralded_1d**2

    @property
    def heralded(self) -> float:
        """Mean of the two heralded efficiencies."""
        return 0.5 * (self.signal_heralded + self.idler_heralded)


@dataclass(frozen=True)
class FiberProjection:
    jsa: JsaMatrix  # renormalized fiber-coupled spectral JSA
    coupling: CouplingReport
    heralded_signal: np.ndarray = field(repr=False)  # (w_s, q_s, w_i), idler projected
    bucket_purity: float | None = None  # signal spectral purity without any spatial filter

    def signal_spatial_spectral_purity(self) -> float:
        """Purity of the signal's joint (w, q) state when heralded by the fiber-coupled idler."""
        m = self.heralded_signal
        mat = m.reshape(m.shape[0] * m.shape[1], m.shape[2])
        s = np.linalg.svd(mat, compute_uv=False)
        s = s[s > 1e-12 * s[0]]
        p = s**2 / np.sum(s**2)
        return float(np.sum(p**2))


def _finish(grid, pair_amp, herald_s, herald_i, total, dq_s, dq_i, bucket=None):
    # total: integral of |S|^2 over all four axes
    d2w = grid.cell
    pair = float(np.sum(np.abs(pair_amp) ** 2) * d2w / total)
    idler_single = float(np.sum(np.abs(herald_s) ** 2) * d2w * dq_s / total)
    signal_single = float(np.sum(np.abs(herald_i) ** 2) * d2w * dq_i / total)
    report = CouplingReport(pair, signal_single, idler_single)
    jsa = JsaMatrix(grid, pair_amp.astype(complex)).normalize()
    return FiberProjection(jsa, report, np.transpose(herald_s, (0, 2, 1)), bucket)


def project_to_fiber(ssa: SpatialSpectralAmplitude, collection: CollectionSpec) -> FiberProjection:
    """Overlap each photon's transverse amplitude with its collection mode."""
    qs, qi = ssa.q_signal, ssa.q_idler
    dq_s, dq_i = qs[1] - qs[0], qi[1] - qi[0]
    us, ui = fiber_mode(qs, collection.signal_waist), fiber_mode(qi, collection.idler_waist)
    amp = ssa.amplitudes
    herald_s = np.tensordot(amp, ui, axes=([3], [0])) * dq_i  # idler projected: (ws, wi, qs)
    herald_i = np.tensordot(amp, us, axes=([2], [0])) * dq_s  # signal projected: (ws, wi, qi)
    pair_amp = np.tensordot(herald_s, us, axes=([2], [0])) * dq_s
    return _finish(
        ssa.grid, pair_amp, herald_s, herald_i, ssa.norm2, dq_s, dq_i, ssa.bucket_signal_purity()
    )


def fiber_projection(
    crystal: CrystalSpec,
    pump: PumpSpec,
    beam: BeamSpec,
    grid: FrequencyGrid,
    collection: CollectionSpec,
    pm_model: PhaseMatchingModel = PhaseMatchingModel.SINC,
    bucket: bool = False,
) -> FiberProjection:
    """Same result as ``project_to_fiber(build_spatial_jsa(...))`` without storing the 4D tensor.

    The unfiltered (bucket) signal purity costs one extra Nw^3 product per
    transverse pair and is only computed when ``bucket`` is set.
    """
    _check_transverse(collection, beam)
    check_pump_resolution(pump, grid)
    qs, qi = collection.q_signal, collection.q_idler
    dq_s, dq_i = qs[1] - qs[0], qi[1] - qi[0]
    us, ui = fiber_mode(qs, collection.signal_waist), fiber_mode(qi, collection.idler_waist)
    kernel = _Kernel(crystal, pump, beam, grid, pm_model)
    shape = (grid.signal.points, grid.idler.points)
    herald_s = np.zeros(shape + (len(qs),))
    herald_i = np.zeros(shape + (len(qi),))
    rho = np.zeros((shape[0], shape[0])) if bucket else None
    norm = 0.0
    for a, q1 in enumerate(qs):
        for b, q2 in enumerate(qi):
            t = kernel(q1, q2)
            herald_s[:, :, a] += t * (ui[b] * dq_i)
            herald_i[:, :, b] += t * (us[a] * dq_s)
            norm += float(np.sum(t * t))
            if bucket:
                rho += t @ t.T
    pair_amp = herald_s @ us * dq_s
    total = norm * grid.cell * dq_s * dq_i
    purity = _purity_of_rho(rho) if bucket else None
    return _finish(grid, pair_amp, herald_s, herald_i, total, dq_s, dq_i, purity)


def fiber_coupled_jsa(crystal, pump, beam, grid, collection, pm_model=PhaseMatchingModel.SINC) -> JsaMatrix:
    return fiber_projection(crystal, pump, beam, grid, collection, pm_model).jsa


@dataclass(frozen=True)
class WaistScanPoint:
    waist: float
    spectral_purity: float
    spatial_spectral_purity: float
    signal_heralded: float
    idler_heralded: float
    pair: float

    @property
    def coupling(self) -> float:
        return 0.5 * (self.signal_heralded + self.idler_heralded)


def purity_vs_waist_scan(
    crystal: CrystalSpec,
    pump: PumpSpec,
    beam: BeamSpec,
    waists: Sequence[float],
    grid: FrequencyGrid | None = None,
    modes: int = 32,
    pm_model: PhaseMatchingModel = PhaseMatchingModel.SINC,
) -> list[WaistScanPoint]:
    if len(waists) == 0:
        raise ValueError("waist list is empty")
    grid = grid or default_grid(crystal, pump)
    out = []
    for w in waists:
        proj = fiber_projection(crystal, pump, beam, grid, CollectionSpec.matched(float(w), modes=modes), pm_model)
        c = proj.coupling
        out.append(
            WaistScanPoint(
                float(w),
                schmidt_decompose(proj.jsa).purity,
                proj.signal_spatial_spectral_purity(),
                c.signal_heralded,
                c.idler_heralded,
                c.pair,
            )
        )
    return out
