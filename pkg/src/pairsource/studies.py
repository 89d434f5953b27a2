"""Scenario -> physics objects -> artifact files for each named study."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import dispersion as disp
from . import jsa as J
from .observables import (
    FilterShape,
    HomPair,
    LossBudget,
    Side,
    brightness_report,
    fit_jsi_gaussian,
    hom_dip,
    hom_visibility,
    reduced_state,
    simulate_jsi_measurement,
)
from .scenario import STUDIES, UNITS, Scenario, ScenarioError
from .schmidt import g2_bandwidth_scan, schmidt_decompose
from .spatial import BeamSpec, CollectionSpec, fiber_projection, focusing_parameter, purity_vs_waist_scan

FLOAT_FORMAT = "{:.8e}"
DEFAULT_POINTS = 256
DEFAULT_SPAN = 5.0
DEFAULT_MODES = 32


@dataclass
class Setup:
    crystal: disp.CrystalSpec
    pump: J.PumpSpec
    beam: BeamSpec | None
    collection: CollectionSpec | None
    points: int
    span: float
    sidelobe_zeros: int
    pm_model: J.PhaseMatchingModel

    def grid(self, pump: J.PumpSpec | None = None) -> J.FrequencyGrid:
        return J.default_grid(self.crystal, pump or self.pump, self.points, self.span, self.sidelobe_zeros)

    @property
    def has_spatial(self) -> bool:
        return self.beam is not None and self.collection is not None


def _yes(value: str, where: str) -> bool:
    v = value.strip().lower()
    if v in ("yes", "true", "on", "1"):
        return True
    if v in ("no", "false", "off", "0"):
        return False
    raise ScenarioError(f"{where}: expected yes or no, got {value!r}")


def build_setup(scen: Scenario, grid_points: int | None = None, pm: str | None = None) -> Setup:
    """Resolve a scenario into physics objects, recording defaults back into it."""
    name = scen.get("crystal", "sellmeier", disp.DEFAULT_SELLMEIER)
    sell = disp.load_sellmeier(name)
    scen.set("crystal", "sellmeier", name)
    pol = disp.Polarizations.parse(scen.get("crystal", "polarizations", "X X Z"))
    scen.set("crystal", "polarizations", " ".join(a.value for a in pol))
    length = scen.require("crystal", "length")
    lam_p = scen.require("pump", "wavelength")
    period = scen.get("crystal", "poling_period", "solve")
    if period == "solve":
        crystal = disp.design_crystal(sell, pol, length, lam_p)
        scen.set("crystal", "poling_period", "solve", "um")
    else:
        crystal = disp.design_crystal(sell, pol, length, lam_p, poling_period=period)

    width = scen.entry("pump", "fwhm") or scen.entry("pump", "sigma")
    if width is None:
        raise ScenarioError(f"{scen.origin}: [pump] needs a width")
    if width.base == "sigma":
        sigma = width.value
    elif width.unit in UNITS["length"]:
        sigma = J.fwhm_nm_to_sigma(width.value, lam_p)
    else:
        sigma = J.duration_to_sigma(width.value)
    shape = J.Envelope(scen.get("pump", "shape", "gaussian"))
    scen.set("pump", "shape", shape.value)
    pump = J.PumpSpec(
        lam_p, sigma, shape, scen.get("pump", "pulse_energy"), scen.get("pump", "rep_rate")
    )

    beam = collection = None
    if scen.has("beams", "pump_waist"):
        beam = BeamSpec(scen.get("beams", "pump_waist"), lam_p)
        ws = scen.require("beams", "signal_waist")
        wi = scen.get("beams", "idler_waist", ws)
        modes = scen.get("beams", "transverse_modes", DEFAULT_MODES)
        collection = CollectionSpec(ws, wi, modes=modes)
        scen.set("beams", "idler_waist", wi, "m")
        scen.set("beams", "transverse_modes", modes)

    points = grid_points or scen.get("grid", "points", DEFAULT_POINTS)
    span = scen.get("grid", "span_multiplier", DEFAULT_SPAN)
    zeros = scen.get("grid", "sidelobe_zeros", J.SIDELOBE_ZEROS)
    model = J.PhaseMatchingModel(pm or scen.get("grid", "phase_matching", "sinc"))
    scen.set("grid", "points", points)
    scen.set("grid", "span_multiplier", float(span))
    scen.set("grid", "sidelobe_zeros", zeros)
    scen.set("grid", "phase_matching", model.value)
    return Setup(crystal, pump, beam, collection, points, span, zeros, model)


class Output:
    """Collects headline numbers and writes data files deterministically."""

    def __init__(self, directory: Path):
        self.dir = directory
        self.dir.mkdir(parents=True, exist_ok=True)
        self.summary: dict[str, float | str] = {}
        self.lines: list[str] = []

    def headline(self, key: str, value, label: str | None = None) -> None:
        if isinstance(value, float):
            value = float(FLOAT_FORMAT.format(value))
        self.summary[key] = value
        shown = FLOAT_FORMAT.format(value) if isinstance(value, float) else str(value)
        self.lines.append(f"{label or key}: {shown}")

    def csv(self, name: str, header: list[str], columns: list) -> None:
        cols = [np.asarray(c, dtype=float).ravel() for c in columns]
        rows = [",".join(header)]
        rows += [",".join(FLOAT_FORMAT.format(v) for v in row) for row in zip(*cols)]
        (self.dir / name).write_text("\n".join(rows) + "\n")

    def finish(self, study: str) -> None:
        self.summary["study"] = study
        text = json.dumps(self.summary, indent=2, sort_keys=True)
        (self.dir / "summary.json").write_text(text + "\n")


def _spatial_flag(scen: Scenario, setup: Setup) -> bool:
    e = scen.entry("study", "spatial")
    want = _yes(e.value, f"{scen.origin}:{e.line}") if e else setup.has_spatial
    if want and not setup.has_spatial:
        raise ScenarioError(f"{scen.origin}: spatial = yes needs a [beams] section with pump and signal waists")
    scen.set("study", "spatial", "yes" if want else "no")
    return want


def _state(setup: Setup, spatial: bool, pump=None, bucket=False):
    pump = pump or setup.pump
    grid = setup.grid(pump)
    if spatial:
        return fiber_projection(setup.crystal, pump, setup.beam, grid, setup.collection, setup.pm_model, bucket)
    return J.build_jsa(setup.crystal, pump, grid, setup.pm_model)


def _jsa_of(state) -> J.JsaMatrix:
    return state if isinstance(state, J.JsaMatrix) else state.jsa


def study_design(scen: Scenario, setup: Setup, out: Output) -> None:
    cr, lam = setup.crystal, setup.pump.wavelength
    wp = setup.pump.omega
    kp, ks, ki = disp.slownesses(cr, wp, wp / 2, wp / 2)
    product = disp.slowness_product(cr, lam)
    out.headline("poling_period_um", cr.poling_period * 1e6, "poling period [um]")
    out.headline("grating_sign", cr.grating_sign)
    out.headline("group_index_pump", kp.group_index)
    out.headline("group_index_signal", ks.group_index)
    out.headline("group_index_idler", ki.group_index)
    out.headline(
        "slowness_product_per_m_per_GHz", product / disp.SLOWNESS_PRODUCT_UNIT, "slowness product [m^-1 GHz^-1]"
    )
    try:
        bw = J.optimal_pump_bandwidth(cr, lam)
    except disp.PhaseMatchingError as exc:
        out.lines.append(f"separable pump bandwidth: none ({exc})")
    else:
        out.headline("optimal_sigma_rad_per_s", bw.sigma, "separable pump sigma [rad/s]")
        out.headline("optimal_fwhm_nm", bw.fwhm_wavelength * 1e9, "separable pump FWHM [nm]")
        out.headline("optimal_duration_ps", bw.duration_fwhm * 1e12, "transform-limited pulse FWHM [ps]")
    if setup.has_spatial:
        out.headline("pump_focusing_parameter", focusing_parameter(setup.beam, cr.length))
        sig = BeamSpec(setup.collection.signal_waist, 2 * lam)
        out.headline("signal_focusing_parameter", focusing_parameter(sig, cr.length))


def study_bandwidth_scan(scen: Scenario, setup: Setup, out: Output) -> None:
    spatial = _spatial_flag(scen, setup)
    lam = setup.pump.wavelength
    lo = scen.get("study", "fwhm_min", 0.1e-9)
    hi = scen.get("study", "fwhm_max", 1.0e-9)
    steps = scen.get("study", "steps", 21)
    if not (0 < lo < hi) or steps < 2:
        raise ScenarioError(f"{scen.origin}: bandwidth scan needs 0 < fwhm_min < fwhm_max and steps >= 2")
    for key, v, unit in (("fwhm_min", lo, "m"), ("fwhm_max", hi, "m")):
        scen.set("study", key, v, unit)
    scen.set("study", "steps", steps)
    fwhms = np.linspace(lo, hi, steps)
    sigmas = [J.fwhm_nm_to_sigma(f, lam) for f in fwhms]
    cfg = (setup.beam, setup.collection) if spatial else None
    pts = g2_bandwidth_scan(setup.crystal, setup.pump, sigmas, cfg, setup.points, setup.span, setup.pm_model,
                            sidelobe_zeros=setup.sidelobe_zeros)
    out.csv(
        "bandwidth_scan.csv",
        ["pump_fwhm_nm", "sigma_rad_per_s", "purity", "g2_zero"],
        [[p.fwhm_nm for p in pts], [p.sigma for p in pts], [p.purity for p in pts], [p.g2 for p in pts]],
    )
    best = max(pts, key=lambda p: p.g2)
    out.headline("peak_g2_zero", best.g2, "peak g2(0)")
    out.headline("peak_pump_fwhm_nm", best.fwhm_nm, "pump FWHM at peak [nm]")
    out.headline("peak_purity", best.purity, "purity at peak")


def study_waist_scan(scen: Scenario, setup: Setup, out: Output) -> None:
    if not setup.has_spatial:
        raise ScenarioError(f"{scen.origin}: waist-scan needs a [beams] section")
    lo = scen.get("study", "waist_min", 50e-6)
    hi = scen.get("study", "waist_max", 400e-6)
    steps = scen.get("study", "steps", 15)
    if not (0 < lo < hi) or steps < 2:
        raise ScenarioError(f"{scen.origin}: waist scan needs 0 < waist_min < waist_max and steps >= 2")
    for key, v in (("waist_min", lo), ("waist_max", hi)):
        scen.set("study", key, v, "m")
    scen.set("study", "steps", steps)
    waists = np.linspace(lo, hi, steps)
    pts = purity_vs_waist_scan(
        setup.crystal, setup.pump, setup.beam, waists, setup.grid(), setup.collection.modes, setup.pm_model
    )
    out.csv(
        "waist_scan.csv",
        ["waist_um", "spectral_purity", "spatial_spectral_purity", "signal_heralded", "idler_heralded", "pair_coupling"],
        [
            [p.waist * 1e6 for p in pts],
            [p.spectral_purity for p in pts],
            [p.spatial_spectral_purity for p in pts],
            [p.signal_heralded for p in pts],
            [p.idler_heralded for p in pts],
            [p.pair for p in pts],
        ],
    )
    best = max(pts, key=lambda p: p.coupling)
    out.headline("best_coupling_waist_um", best.waist * 1e6, "waist of best heralded coupling [um]")
    out.headline("best_coupling", best.coupling, "best heralded coupling")
    out.headline("spectral_purity_at_best_coupling", best.spectral_purity)


def _filter_settings(scen: Scenario):
    fwhm = scen.get("study", "filter_fwhm", 0.2e-9)
    step = scen.get("study", "filter_step", fwhm / 5)
    shape = FilterShape(scen.get("study", "filter_shape", "gaussian"))
    scen.set("study", "filter_fwhm", fwhm, "m")
    scen.set("study", "filter_step", step, "m")
    scen.set("study", "filter_shape", shape.value)
    return fwhm, step, shape


def _write_map(out: Output, measured) -> None:
    S, I = np.meshgrid(measured.signal_wavelengths * 1e9, measured.idler_wavelengths * 1e9, indexing="ij")
    out.csv("jsi_measured.csv", ["signal_nm", "idler_nm", "coincidences"], [S, I, measured.counts])


def _coupling_headlines(out: Output, state) -> None:
    if isinstance(state, J.JsaMatrix):
        return
    c = state.coupling
    out.headline("signal_heralded_efficiency", c.signal_heralded)
    out.headline("idler_heralded_efficiency", c.idler_heralded)
    out.headline("pair_coupling_efficiency", c.pair)
    if state.bucket_purity is not None:
        out.headline("unfiltered_purity", state.bucket_purity, "purity without spatial filtering")


def _real_modes(modes: np.ndarray) -> np.ndarray:
    """Remove the arbitrary SVD phase: largest component of each mode made real positive."""
    idx = np.argmax(np.abs(modes), axis=0)
    peak = modes[idx, np.arange(modes.shape[1])]
    return np.real(modes * (np.abs(peak) / peak))


def study_jsi(scen: Scenario, setup: Setup, out: Output) -> None:
    spatial = _spatial_flag(scen, setup)
    fwhm, step, shape = _filter_settings(scen)
    state = _state(setup, spatial, bucket=spatial)
    jsa = _jsa_of(state)
    res = schmidt_decompose(jsa, keep_modes=8)
    lam_s = disp.wavelength_of(jsa.grid.signal.values) * 1e9
    lam_i = disp.wavelength_of(jsa.grid.idler.values) * 1e9
    S, I = np.meshgrid(lam_s, lam_i, indexing="ij")
    out.csv("jsi.csv", ["signal_nm", "idler_nm", "intensity"], [S, I, jsa.intensity])
    modes = _real_modes(res.signal_modes)
    out.csv(
        "schmidt_modes.csv",
        ["signal_nm"] + [f"mode_{n}" for n in range(modes.shape[1])],
        [lam_s] + list(modes.T),
    )
    out.csv("schmidt_coefficients.csv", ["index", "lambda"], [np.arange(len(res.singular_values)), res.singular_values])
    _write_map(out, simulate_jsi_measurement(jsa, fwhm, step, shape))
    out.headline("purity", res.purity, "Schmidt purity")
    out.headline("schmidt_number", res.schmidt_number)
    out.headline("g2_zero", 1 + res.purity, "predicted g2(0)")
    _coupling_headlines(out, state)


def study_jsi_fit(scen: Scenario, setup: Setup, out: Output) -> None:
    spatial = _spatial_flag(scen, setup)
    fwhm, step, shape = _filter_settings(scen)
    state = _state(setup, spatial)
    jsa = _jsa_of(state)
    measured = simulate_jsi_measurement(jsa, fwhm, step, shape)
    _write_map(out, measured)
    fit = fit_jsi_gaussian(measured)
    out.headline("fitted_purity", fit.purity, "fitted purity")
    out.headline("fit_residual_rms", fit.residual)
    out.headline("fit_A_per_rad2_s2", fit.intensity[0])
    out.headline("fit_B_per_rad2_s2", fit.intensity[1])
    out.headline("fit_C_per_rad2_s2", fit.intensity[2])
    out.headline("schmidt_purity", schmidt_decompose(jsa).purity, "Schmidt purity of the simulated JSA")


def study_hom(scen: Scenario, setup: Setup, out: Output) -> None:
    spatial = _spatial_flag(scen, setup)
    lo = scen.get("study", "delay_min", -10e-12)
    hi = scen.get("study", "delay_max", 10e-12)
    steps = scen.get("study", "steps", 201)
    if not lo < hi or steps < 3:
        raise ScenarioError(f"{scen.origin}: hom needs delay_min < delay_max and steps >= 3")
    scen.set("study", "delay_min", lo, "s")
    scen.set("study", "delay_max", hi, "s")
    scen.set("study", "steps", steps)
    jsa = _jsa_of(_state(setup, spatial))
    delays = np.linspace(lo, hi, steps)
    ss = hom_dip(jsa, jsa, HomPair.SIGNAL_SIGNAL, delays)
    si = hom_dip(jsa, jsa, HomPair.SIGNAL_IDLER, delays)
    out.csv("hom.csv", ["delay_ps", "p_signal_signal", "p_signal_idler"], [delays * 1e12, ss.coincidences, si.coincidences])
    rs, ri = reduced_state(jsa, Side.SIGNAL), reduced_state(jsa, Side.IDLER)
    out.headline("visibility_signal_signal", hom_visibility(rs, rs))
    out.headline("visibility_signal_idler", hom_visibility(rs, ri))
    out.headline("dip_fwhm_ps", ss.fwhm() * 1e12, "signal-signal dip FWHM [ps]")


def study_brightness(scen: Scenario, setup: Setup, out: Output) -> None:
    ppp = scen.get("study", "pairs_per_pulse")
    if ppp is None:
        raise ScenarioError(f"{scen.origin}: brightness needs pairs_per_pulse in [study]")
    budget = LossBudget(tuple(scen.losses()))
    rep = brightness_report(ppp, setup.pump, budget)
    out.headline("source_brightness_pairs_per_uJ", rep.source_brightness)
    out.headline("loss_per_photon_dB", budget.total_db)
    out.headline("fibered_brightness_pairs_per_uJ", rep.fibered_brightness)
    if rep.pair_rate is not None:
        out.headline("pair_rate_per_s", rep.pair_rate)
        out.headline("heralded_single_rate_per_s", rep.heralded_single_rate)
    other = scen.get("study", "compare_pulse_energy")
    if other is not None:
        out.headline("pairs_per_pulse_at_compare_energy", rep.pairs_per_pulse_at(other))


RUNNERS: dict[str, Callable[[Scenario, Setup, Output], None]] = {
    "design": study_design,
    "bandwidth-scan": study_bandwidth_scan,
    "waist-scan": study_waist_scan,
    "jsi": study_jsi,
    "jsi-fit": study_jsi_fit,
    "hom": study_hom,
    "brightness": study_brightness,
}
assert set(RUNNERS) == set(STUDIES)


def run_scenario(scen: Scenario, out_dir: Path, grid_points: int | None = None, pm: str | None = None) -> Output:
    name = scen.get("study", "name")
    if name is None:
        raise ScenarioError(f"{scen.origin}: [study] needs a name; valid names: {', '.join(STUDIES)}")
    if name not in RUNNERS:
        e = scen.entry("study", "name")
        raise ScenarioError(f"{scen.origin}:{e.line}: unknown study {name!r}; valid names: {', '.join(STUDIES)}")
    setup = build_setup(scen, grid_points, pm)
    out = Output(out_dir)
    RUNNERS[name](scen, setup, out)
    out.finish(name)
    (out_dir / "scenario.ini").write_text(scen.dumps())
    return out
