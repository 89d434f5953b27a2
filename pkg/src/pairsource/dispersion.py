"""Refractive indices, wavevectors, group slownesses and quasi-phase-matching for KTP.

All frequencies are angular (rad/s) and all lengths are in metres. Sellmeier
formulas are evaluated with the wavelength in micrometres, the convention of
the published coefficient sets.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Callable, NamedTuple, Sequence, Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar

C_LIGHT = 299_792_458.0  # m/s

ArrayLike = Union[float, np.ndarray]


class SellmeierDomainError(ValueError):
    """Wavelength outside the validity window of a Sellmeier set."""


class PhaseMatchingError(ValueError):
    """No quasi-phase-matching solution for the requested configuration."""


class Axis(str, Enum):
    X = "X"
    Y = "Y"
    Z = "Z"


class Polarizations(NamedTuple):
    pump: Axis
    signal: Axis
    idler: Axis

    @classmethod
    def parse(cls, text: str | Sequence[str]) -> "Polarizations":
        parts = text.replace(",", " ").split() if isinstance(text, str) else list(text)
        if len(parts) != 3:
            raise ValueError(f"expected three axes (pump, signal, idler), got {text!r}")
        return cls(*(Axis(p.strip().upper()) for p in parts))

    def swapped(self) -> "Polarizations":
        return Polarizations(self.pump, self.idler, self.signal)

    def __str__(self) -> str:
        return ", ".join(a.value for a in self)


# n^2 as a function of wavelength in micrometres
def _pole2(c: Sequence[float], lam: np.ndarray) -> np.ndarray:
    a, b1, c1, b2, c2 = c
    l2 = lam * lam
    return a + b1 / (l2 - c1) + b2 / (l2 - c2)


def _pole1(c: Sequence[float], lam: np.ndarray) -> np.ndarray:
    a, b, c1, d = c
    l2 = lam * lam
    return a + b / (l2 - c1) - d * l2


def _fan(c: Sequence[float], lam: np.ndarray) -> np.ndarray:
    a, b, l0, d = c
    l2 = lam * lam
    return a + b * l2 / (l2 - l0 * l0) - d * l2


def _fradkin(c: Sequence[float], lam: np.ndarray) -> np.ndarray:
    a, b, c1, d, e, f = c
    l2 = lam * lam
    return a + b / (1.0 - c1 / l2) + d / (1.0 - e / l2) - f * l2


def _constant(c: Sequence[float], lam: np.ndarray) -> np.ndarray:
    (n,) = c
    return np.full_like(lam, n * n)


FORMS: dict[str, tuple[int, Callable[[Sequence[float], np.ndarray], np.ndarray]]] = {
    "pole2": (5, _pole2),
    "pole1": (4, _pole1),
    "fan": (4, _fan),
    "fradkin": (6, _fradkin),
    "constant": (1, _constant),
}


@dataclass(frozen=True)
class AxisFormula:
    form: str
    coefficients: tuple[float, ...]

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown Sellmeier form {self.form!r}; known: {sorted(FORMS)}")
        expected, _ = FORMS[self.form]
        if len(self.coefficients) != expected:
            raise ValueError(
                f"form {self.form!r} takes {expected} coefficients, got {len(self.coefficients)}"
            )

    def n_squared(self, lam_um: np.ndarray) -> np.ndarray:
        return FORMS[self.form][1](self.coefficients, lam_um)


@dataclass(frozen=True)
class SellmeierSet:
    """Per-axis refractive index formulas with a shared validity window.

    ``window`` is (min, max) wavelength in metres.
    """

    axes: dict[Axis, AxisFormula]
    window: tuple[float, float]
    name: str = "custom"
    provenance: str = ""

    def __post_init__(self):
        lo, hi = self.window
        if not 0 < lo < hi:
            raise ValueError(f"invalid validity window {self.window}")

    def check_window(self, lam: ArrayLike) -> None:
        lam = np.asarray(lam, dtype=float)
        lo, hi = self.window
        if not np.all(np.isfinite(lam)) or np.any(lam < lo) or np.any(lam > hi):
            bad = lam[~((lam >= lo) & (lam <= hi))] if lam.ndim else lam
            worst = float(np.ravel(bad)[0]) if np.size(bad) else float("nan")
            raise SellmeierDomainError(
                f"wavelength {worst * 1e9:.6g} nm outside the validity window "
                f"[{lo * 1e9:.6g}, {hi * 1e9:.6g}] nm of Sellmeier set {self.name!r}"
            )

    @classmethod
    def constant(cls, n: float, window: tuple[float, float] = (200e-9, 10e-6)) -> "SellmeierSet":
        """Dispersionless medium with the same index on every axis."""
        f = AxisFormula("constant", (float(n),))
        return cls({a: f for a in Axis}, window, name=f"constant-{n:g}")


def load_sellmeier(source: Union[str, Path]) -> SellmeierSet:
    """Load a Sellmeier set by bundled name (e.g. ``ktp_kato2002``) or file path.

    File layout (INI)::

        [set]
        name = ktp_kato2002
        form = pole2             ; default form for every axis
        window_nm = 430, 3540
        provenance = free text

        [X]
        coefficients = a, b, c, ...
        form = fan               ; optional per-axis override
    """
    path = Path(source)
    if path.suffix != ".ini" and not path.exists():
        ref = resources.files("pairsource") / "data" / f"{source}.ini"
        if not ref.is_file():
            raise FileNotFoundError(
                f"unknown Sellmeier set {source!r}; bundled sets: {', '.join(bundled_sets())}"
            )
        text = ref.read_text()
        origin = str(source)
    else:
        text = path.read_text()
        origin = str(path)
    return parse_sellmeier(text, origin)


def bundled_sets() -> list[str]:
    root = resources.files("pairsource") / "data"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def parse_sellmeier(text: str, origin: str = "<string>") -> SellmeierSet:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.read_string(text, source=origin)
    if not cp.has_section("set"):
        raise ValueError(f"{origin}: missing [set] section")
    meta = cp["set"]
    default_form = meta.get("form", "pole2")
    try:
        lo, hi = (float(v) * 1e-9 for v in meta["window_nm"].split(","))
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{origin}: [set] needs window_nm = <min>, <max>") from exc
    axes = {}
    for axis in Axis:
        if not cp.has_section(axis.value):
            raise ValueError(f"{origin}: missing [{axis.value}] section")
        sec = cp[axis.value]
        coeffs = tuple(float(v) for v in sec["coefficients"].split(","))
        axes[axis] = AxisFormula(sec.get("form", default_form), coeffs)
    return SellmeierSet(
        axes, (lo, hi), name=meta.get("name", origin), provenance=meta.get("provenance", "")
    )


DEFAULT_SELLMEIER = "ktp_kato2002"


def default_sellmeier() -> SellmeierSet:
    return load_sellmeier(DEFAULT_SELLMEIER)


@dataclass(frozen=True)
class CrystalSpec:
    """A periodically poled crystal.

    ``grating_sign`` orients the poling wavevector along +z (+1) or -z (-1);
    both first-order Fourier components of a square poling pattern exist, so a
    design picks whichever compensates the bulk mismatch.
    """

    length: float
    poling_period: float
    polarizations: Polarizations
    sellmeier: SellmeierSet
    grating_sign: int = 1

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"crystal length must be positive, got {self.length}")
        if not self.poling_period > 0:
            raise ValueError(f"poling period must be positive, got {self.poling_period}")
        if self.grating_sign not in (1, -1):
            raise ValueError("grating_sign must be +1 or -1")

    @property
    def grating_wavevector(self) -> float:
        return self.grating_sign * 2 * math.pi / self.poling_period


@dataclass(frozen=True)
class Slowness:
    """Group slowness dk/domega (s/m) of one field at ``omega0``."""

    value: float
    axis: Axis
    omega0: float

    @property
    def group_index(self) -> float:
        return self.value * C_LIGHT


def omega_of(lam: ArrayLike) -> ArrayLike:
    return 2 * np.pi * C_LIGHT / np.asarray(lam, dtype=float)


def wavelength_of(omega: ArrayLike) -> ArrayLike:
    omega = np.asarray(omega, dtype=float)
    with np.errstate(divide="ignore"):
        return 2 * np.pi * C_LIGHT / omega


def refractive_index(axis: Axis, lam: ArrayLike, s: SellmeierSet) -> ArrayLike:
    s.check_window(lam)
    lam_um = np.asarray(lam, dtype=float) * 1e6
    n = np.sqrt(s.axes[Axis(axis)].n_squared(lam_um))
    return float(n) if n.ndim == 0 else n


def wavevector(axis: Axis, omega: ArrayLike, s: SellmeierSet) -> ArrayLike:
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise SellmeierDomainError("angular frequency must be positive (infinite wavelength)")
    k = np.asarray(refractive_index(axis, wavelength_of(omega), s)) * omega / C_LIGHT
    return float(k) if k.ndim == 0 else k


FD_RELATIVE_STEP = 1e-4


def group_slowness(
    axis: Axis, omega0: float, s: SellmeierSet, rel_step: float = FD_RELATIVE_STEP
) -> Slowness:
    """dk/domega by a five-point central difference (truncation error O(h^4))."""
    h = rel_step * omega0
    k = lambda w: wavevector(axis, w, s)  # noqa: E731
    d = (-k(omega0 + 2 * h) + 8 * k(omega0 + h) - 8 * k(omega0 - h) + k(omega0 - 2 * h)) / (12 * h)
    return Slowness(float(d), Axis(axis), float(omega0))


def slownesses(crystal: CrystalSpec, omega_p: float, omega_s: float, omega_i: float):
    pol, s = crystal.polarizations, crystal.sellmeier
    return (
        group_slowness(pol.pump, omega_p, s),
        group_slowness(pol.signal, omega_s, s),
        group_slowness(pol.idler, omega_i, s),
    )


def slowness_product(crystal: CrystalSpec, lambda_p: float) -> float:
    """(k'_p - k'_s)(k'_p - k'_i) in s^2/m^2 at degenerate emission."""
    wp = omega_of(lambda_p)
    kp, ks, ki = slownesses(crystal, wp, wp / 2, wp / 2)
    return (kp.value - ks.value) * (kp.value - ki.value)


# 1 m^-1 GHz^-1 product unit, read with 1 GHz = 1e9 rad/s, is 1e-18 s^2/m^2
SLOWNESS_PRODUCT_UNIT = 1e-18


def qpm_mismatch(crystal: CrystalSpec, omega_p: ArrayLike, omega_s: ArrayLike, omega_i: ArrayLike):
    """Delta k = k_i(w_i) + k_s(w_s) + K - k_p(w_p), K the signed grating wavevector."""
    pol, s = crystal.polarizations, crystal.sellmeier
    grating = 0.0 if math.isinf(crystal.poling_period) else crystal.grating_wavevector
    return (
        wavevector(pol.idler, omega_i, s)
        + wavevector(pol.signal, omega_s, s)
        + grating
        - wavevector(pol.pump, omega_p, s)
    )


def _bulk_mismatch(sellmeier, pol: Polarizations, lambda_p, lambda_s, lambda_i) -> float:
    return (
        wavevector(pol.pump, omega_of(lambda_p), sellmeier)
        - wavevector(pol.signal, omega_of(lambda_s), sellmeier)
        - wavevector(pol.idler, omega_of(lambda_i), sellmeier)
    )


def _check_energy(lambda_p: float, lambda_s: float, lambda_i: float) -> None:
    lhs, rhs = 1 / lambda_p, 1 / lambda_s + 1 / lambda_i
    if abs(lhs - rhs) > 1e-9 * lhs:
        raise ValueError(
            f"energy conservation violated: 1/lambda_p = {lhs:.9e} but "
            f"1/lambda_s + 1/lambda_i = {rhs:.9e} (1/m)"
        )


def solve_poling_period(
    sellmeier: SellmeierSet,
    polarizations: Polarizations,
    lambda_p: float,
    lambda_s: float,
    lambda_i: float,
    grating_sign: int | None = None,
) -> float:
    """Poling period that zeroes the phase mismatch.

    The grating term is linear in 1/period, so the root is closed form. With
    ``grating_sign=None`` the orientation that admits a positive period is
    used; with an explicit sign an incompatible bulk mismatch is an error.
    """
    _check_energy(lambda_p, lambda_s, lambda_i)
    need = _bulk_mismatch(sellmeier, polarizations, lambda_p, lambda_s, lambda_i)
    if need == 0.0:
        raise PhaseMatchingError("bulk phase matching already satisfied; no finite poling period")
    sign = grating_sign if grating_sign is not None else (1 if need > 0 else -1)
    if need * sign < 0:
        raise PhaseMatchingError(
            f"no positive poling period with grating_sign={sign:+d}: the bulk mismatch "
            f"k_p - k_s - k_i = {need:.6e} 1/m has the opposite sign"
        )
    return 2 * math.pi / abs(need)


def grating_sign_for(sellmeier, polarizations, lambda_p, lambda_s, lambda_i) -> int:
    return 1 if _bulk_mismatch(sellmeier, polarizations, lambda_p, lambda_s, lambda_i) > 0 else -1


def design_crystal(
    sellmeier: SellmeierSet,
    polarizations: Polarizations,
    length: float,
    lambda_p: float,
    poling_period: float | None = None,
) -> CrystalSpec:
    """Crystal phase-matched for degenerate emission at 2*lambda_p.

    A given ``poling_period`` is kept as is; the grating orientation is always
    taken from the bulk mismatch.
    """
    lam = 2 * lambda_p
    sign = grating_sign_for(sellmeier, polarizations, lambda_p, lam, lam)
    if poling_period is None:
        poling_period = solve_poling_period(sellmeier, polarizations, lambda_p, lam, lam, sign)
    return CrystalSpec(length, poling_period, polarizations, sellmeier, sign)


def _roots_near_turning_points(f, grid, vals, K) -> list[float]:
    """Close root pairs that straddle an extremum and fall between two scan samples."""
    out = []
    a = np.abs(vals)
    for j in np.flatnonzero((a[1:-1] < a[:-2]) & (a[1:-1] < a[2:])) + 1:
        if np.sign(vals[j - 1]) != np.sign(vals[j + 1]):
            continue  # ordinary crossing, already bracketed
        s = np.sign(vals[j])
        lo, hi = grid[j - 1], grid[j + 1]
        ext = minimize_scalar(lambda x: s * f(x), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-16})
        fx = f(ext.x)
        if np.sign(fx) == s and abs(fx) > 1e-9 * abs(K):
            continue
        if abs(fx) <= 1e-9 * abs(K):
            out.append(float(ext.x))  # tangent (double) root
            continue
        out.append(brentq(f, lo, ext.x, xtol=1e-18, rtol=1e-14))
        out.append(brentq(f, ext.x, hi, xtol=1e-18, rtol=1e-14))
    return out


def solve_degenerate_wavelength(
    sellmeier: SellmeierSet,
    polarizations: Polarizations,
    poling_period: float,
    grating_sign: int | None = None,
    samples: int = 2000,
    near: float | None = None,
) -> float:
    """Pump wavelength whose degenerate pair (2*lambda_p, 2*lambda_p) is phase matched.

    Brackets sign changes of the mismatch on a scan of the admissible pump
    range, then refines each with Brent's method. Type-II degenerate mismatch
    curves can turn over, so one period may match two pump wavelengths; pass
    ``near`` to take the root closest to it. Without ``near``, more than one
    root is an error.
    """
    if not poling_period > 0:
        raise ValueError(f"poling period must be positive, got {poling_period}")
    lo, hi = sellmeier.window
    lam_lo, lam_hi = lo, hi / 2
    if lam_lo >= lam_hi:
        raise PhaseMatchingError("validity window too narrow for degenerate emission")
    grid = np.linspace(lam_lo, lam_hi, samples)
    signs = (1, -1) if grating_sign is None else (grating_sign,)
    roots = []
    for sign in signs:
        K = sign * 2 * math.pi / poling_period

        def f(lp, K=K):
            return -_bulk_mismatch(sellmeier, polarizations, lp, 2 * lp, 2 * lp) + K

        vals = f(grid)
        for j in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0):
            roots.append(brentq(f, grid[j], grid[j + 1], xtol=1e-18, rtol=1e-14))
        roots += _roots_near_turning_points(f, grid, vals, K)
    roots = sorted(set(round(r, 15) for r in roots))
    if not roots:
        raise PhaseMatchingError(
            f"no degenerate phase-matching point for poling period {poling_period * 1e6:.6g} um "
            f"within pump wavelengths [{lam_lo * 1e9:.6g}, {lam_hi * 1e9:.6g}] nm"
        )
    if near is not None:
        return float(min(roots, key=lambda r: abs(r - near)))
    if len(roots) > 1:
        raise PhaseMatchingError(
            "several degenerate phase-matching points: "
            + ", ".join(f"{r * 1e9:.4f} nm" for r in roots)
            + "; pass grating_sign or near to disambiguate"
        )
    return float(roots[0])


DEFAULT_POLARIZATIONS = Polarizations(Axis.X, Axis.X, Axis.Z)
