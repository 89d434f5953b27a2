"""Scenario files: INI sections with unit-suffixed keys.

Every dimensioned key carries its unit as a suffix (``length_mm = 30``,
``wavelength_nm = 772``). Values are converted to SI on load; the effective
scenario can be written back out in SI so that a rerun reproduces it exactly.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

UNITS: dict[str, dict[str, float]] = {
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9, "pm": 1e-12},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12, "fs": 1e-15},
    "energy": {"J": 1.0, "mJ": 1e-3, "uJ": 1e-6, "nJ": 1e-9, "pJ": 1e-12},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "angular_frequency": {"rad_per_s": 1.0},
    "loss": {"dB": 1.0},
}

SI_SUFFIX = {"length": "m", "time": "s", "energy": "J", "frequency": "Hz", "angular_frequency": "rad_per_s", "loss": "dB"}

STUDIES = {
    "design": "poling period, slowness product, separable pump bandwidth, focusing parameters",
    "bandwidth-scan": "g2(0) and purity versus pump spectral FWHM",
    "waist-scan": "spectral and spatial-spectral purity and coupling versus collection waist",
    "jsi": "joint spectral intensity, filtered coincidence map and Schmidt modes",
    "jsi-fit": "two-dimensional Gaussian fit of the filtered coincidence map",
    "hom": "two-photon interference dips, signal-signal and signal-idler",
    "brightness": "pair brightness with a per-photon loss budget",
}

# section -> key base -> dimension (None: dimensionless number, "text": string)
SCHEMA: dict[str, dict[str, str | None]] = {
    "crystal": {"sellmeier": "text", "length": "length", "poling_period": "length", "polarizations": "text"},
    "pump": {
        "wavelength": "length",
        "fwhm": "length|time",
        "sigma": "angular_frequency",
        "shape": "text",
        "pulse_energy": "energy",
        "rep_rate": "frequency",
    },
    "beams": {"pump_waist": "length", "signal_waist": "length", "idler_waist": "length", "transverse_modes": None},
    "grid": {"points": None, "span_multiplier": None, "sidelobe_zeros": None, "phase_matching": "text"},
    "study": {
        "name": "text",
        "spatial": "text",
        "fwhm_min": "length",
        "fwhm_max": "length",
        "waist_min": "length",
        "waist_max": "length",
        "steps": None,
        "filter_fwhm": "length",
        "filter_step": "length",
        "filter_shape": "text",
        "delay_min": "time",
        "delay_max": "time",
        "pairs_per_pulse": None,
        "loss": "loss",
        "compare_pulse_energy": "energy",
    },
}

INTEGER_KEYS = {"transverse_modes", "points", "sidelobe_zeros", "steps"}

HELP_UNITS = """\
scenario files:
  INI sections [crystal], [pump], [beams], [grid], [study]. Every dimensioned
  key must end in a unit suffix, which is case sensitive:
    length     m cm mm um nm pm        e.g. length_mm = 30
    time       s ms us ns ps fs        e.g. fwhm_ps = 2.6
    energy     J mJ uJ nJ pJ           e.g. pulse_energy_nJ = 2.5
    frequency  Hz kHz MHz GHz          e.g. rep_rate_MHz = 80
    angular    rad_per_s               e.g. sigma_rad_per_s = 4.67e11
    loss       dB                      e.g. loss_coupling_dB = 0.46
  The pump width is given exactly once, as fwhm_<length> (spectral FWHM),
  fwhm_<time> (transform-limited pulse FWHM) or sigma_rad_per_s.
  poling_period_um = solve computes the period for degenerate emission.
"""


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Entry:
    base: str
    unit: str | None
    raw: str
    value: object  # SI float, int, or str
    line: int


@dataclass
class Scenario:
    entries: dict[str, dict[str, Entry]] = field(default_factory=dict)
    origin: str = "<scenario>"

    def has(self, section: str, base: str) -> bool:
        return base in self.entries.get(section, {})

    def get(self, section: str, base: str, default=None):
        e = self.entries.get(section, {}).get(base)
        return default if e is None else e.value

    def entry(self, section: str, base: str) -> Entry | None:
        return self.entries.get(section, {}).get(base)

    def require(self, section: str, base: str):
        e = self.entry(section, base)
        if e is None:
            raise ScenarioError(f"{self.origin}: [{section}] is missing required key {base!r}")
        return e.value

    def losses(self) -> list[tuple[str, float]]:
        return [(k[len("loss_"):], e.value) for k, e in self.entries.get("study", {}).items() if k.startswith("loss_")]

    def set(self, section: str, base: str, value, unit: str | None = None) -> None:
        old = self.entry(section, base)
        line = old.line if old else 0
        self.entries.setdefault(section, {})[base] = Entry(base, unit, str(value), value, line)

    def dumps(self) -> str:
        """Effective scenario in SI units; loading it gives identical values."""
        out = []
        for section in SCHEMA:
            items = self.entries.get(section)
            if not items:
                continue
            out.append(f"[{section}]")
            for key in sorted(items):
                e = items[key]
                if isinstance(e.value, float):
                    dim = _dimension_of(section, key, e.unit)
                    suffix = SI_SUFFIX.get(dim) if dim else None
                    name = f"{key}_{suffix}" if suffix else key
                    out.append(f"{name} = {e.value!r}")
                else:
                    name = f"{key}_{e.unit}" if e.unit else key
                    out.append(f"{name} = {e.value}")
            out.append("")
        return "\n".join(out)


def _dimension_of(section: str, base: str, unit: str | None) -> str | None:
    if base.startswith("loss_"):
        return "loss"
    dim = SCHEMA[section].get(base)
    if dim and "|" in dim:
        return next(d for d in dim.split("|") if unit in UNITS[d])
    return dim if dim in UNITS else None


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    lines: dict[tuple[str, str], int] = {}
    section = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"^\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and section is not None:
            lines.setdefault((section, m.group(1)), n)
    return lines


def _split_key(section: str, key: str, line: int, origin: str) -> tuple[str, str | None, str | None]:
    """Return (base, unit, dimension) for a raw key."""
    where = f"{origin}:{line}"
    schema = SCHEMA[section]
    if key in schema:
        dim = schema[key]
        if dim not in (None, "text"):
            examples = " or ".join(f"{key}_{u}" for d in dim.split("|") for u in list(UNITS[d])[:2])
            raise ScenarioError(f"{where}: key {key!r} needs a unit suffix (e.g. {examples})")
        return key, None, dim
    if section == "study" and key.startswith("loss_"):
        label, _, unit = key[len("loss_"):].rpartition("_")
        if not label or unit not in UNITS["loss"]:
            raise ScenarioError(f"{where}: loss keys look like loss_<label>_dB, got {key!r}")
        return f"loss_{label}", unit, "loss"
    # longest matching base wins, so rad_per_s and multi-part bases resolve cleanly
    for base in sorted(schema, key=len, reverse=True):
        dim = schema[base]
        if dim in (None, "text") or not key.startswith(base + "_"):
            continue
        unit = key[len(base) + 1:]
        for d in dim.split("|"):
            if unit in UNITS[d]:
                return base, unit, d
        allowed = ", ".join(u for d in dim.split("|") for u in UNITS[d])
        raise ScenarioError(f"{where}: unknown unit {unit!r} for {base!r}; use one of {allowed}")
    known = ", ".join(sorted(schema))
    raise ScenarioError(f"{where}: unknown key {key!r} in [{section}]; known keys: {known}")


def parse_scenario(text: str, origin: str = "<scenario>") -> Scenario:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # unit suffixes are case sensitive (mJ vs MJ)
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ScenarioError(str(exc)) from None
    lines = _key_lines(text)
    scen = Scenario(origin=origin)
    for section in parser.sections():
        if section not in SCHEMA:
            line = next((n for (s, _), n in lines.items() if s == section), 0)
            raise ScenarioError(
                f"{origin}:{line}: unknown section [{section}]; expected one of "
                + ", ".join(f"[{s}]" for s in SCHEMA)
            )
        bucket = scen.entries.setdefault(section, {})
        for key, raw in parser.items(section):
            line = lines.get((section, key), 0)
            base, unit, dim = _split_key(section, key, line, origin)
            if base in bucket:
                prev = bucket[base]
                raise ScenarioError(
                    f"{origin}:{line}: {base!r} given twice in [{section}] (also line {prev.line})"
                )
            bucket[base] = Entry(base, unit, raw, _convert(raw, base, unit, dim, f"{origin}:{line}"), line)
    _check_pump_width(scen)
    return scen


def _convert(raw: str, base: str, unit: str | None, dim: str | None, where: str):
    raw = raw.strip()
    if dim == "text":
        return raw
    if base == "poling_period" and raw.lower() == "solve":
        return "solve"
    try:
        if base in INTEGER_KEYS:
            return int(raw)
        number = float(raw)
    except ValueError:
        kind = "an integer" if base in INTEGER_KEYS else "a number"
        raise ScenarioError(f"{where}: {base!r} must be {kind}, got {raw!r}") from None
    return number * UNITS[dim][unit] if dim else number


def _check_pump_width(scen: Scenario) -> None:
    given = [k for k in ("fwhm", "sigma") if scen.has("pump", k)]
    if "pump" in scen.entries and len(given) != 1:
        raise ScenarioError(
            f"{scen.origin}: [pump] needs exactly one width: fwhm_<length unit>, fwhm_<time unit> "
            "or sigma_rad_per_s"
        )


def load_scenario(path: str | Path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {p}: {exc.strerror}") from None
    return parse_scenario(text, str(p))
