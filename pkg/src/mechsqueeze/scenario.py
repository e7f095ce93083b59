"""Scenario files: strict TOML schema mapping one-to-one onto the parameter types.

A scenario describes the system either in SI terms ([oscillator] +
[measurement]) or directly through the governing numbers ([dimensionless]);
exactly one style must be used.  Unknown keys anywhere are errors - silent
typos in physics configs are the dominant failure mode.

Bundled scenarios (fig2, fig3a, fig3b, fig4, membrane) live as package data
and can be addressed by name instead of a path.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ScenarioError
from .multimode import SecondMode
from .params import DimensionlessParams, MeasurementParams, OscillatorParams

SWEEP_VARIABLES = ("C", "n_th", "eta", "n_cav", "Q")
MAX_AXIS_POINTS = 1_000_000
MAX_TOTAL_POINTS = 10_000_000
BUNDLED = ("fig2", "fig3a", "fig3b", "fig4", "membrane")


@dataclass(frozen=True)
class SweepAxis:
    variable: str
    min: float
    max: float
    points: int
    log: bool = True

    def values(self):
        import numpy as np

        if self.points == 1:
            return np.array([self.min])
        if self.log:
            return np.logspace(math.log10(self.min), math.log10(self.max), self.points)
        return np.linspace(self.min, self.max, self.points)


@dataclass(frozen=True)
class ThresholdSpec:
    targets: tuple[str, ...] = ("position", "momentum")
    n_th: tuple[float, ...] | None = None
    eta: tuple[float, ...] | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    feedback_ratios: tuple[float, ...]
    oscillator: OscillatorParams | None = None
    measurement: MeasurementParams | None = None
    dimensionless: dict | None = None          # {eta, n_th, Q}
    second_mode: SecondMode | None = None
    sweep: tuple[SweepAxis, ...] = ()
    thresholds: ThresholdSpec | None = None
    nth_at_shifted: bool = False
    digest: str = field(default="", compare=False)

    @property
    def is_si(self) -> bool:
        return self.oscillator is not None

    def base_numbers(self, ratio: float) -> DimensionlessParams:
        """Governing numbers at a given feedback ratio (base C as configured)."""
        if self.is_si:
            from .params import derive_dimensionless, FeedbackSetting

            return derive_dimensionless(
                self.oscillator, self.measurement, FeedbackSetting.from_ratio(ratio),
                nth_at_shifted=self.nth_at_shifted)
        d = self.dimensionless
        c = d.get("C", 1.0)
        return DimensionlessParams(eta=d["eta"], C=c, n_th=d["n_th"], Q=d["Q"], R=ratio)


def _reject_unknown(table: dict, allowed: set[str], where: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ScenarioError(f"unknown key(s) {sorted(unknown)} in [{where}]")


def _need(table: dict, key: str, where: str):
    if key not in table:
        raise ScenarioError(f"missing required key '{key}' in [{where}]")
    return table[key]


def _number(value, key: str, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"'{key}' in [{where}] must be a number, got {value!r}")
    return float(value)


def _parse_oscillator(table: dict) -> OscillatorParams:
    _reject_unknown(table, {"mass", "omega0", "gamma", "quality_factor", "temperature"},
                    "oscillator")
    if ("gamma" in table) == ("quality_factor" in table):
        raise ScenarioError("[oscillator] needs exactly one of gamma or quality_factor")
    omega0 = _number(_need(table, "omega0", "oscillator"), "omega0", "oscillator")
    gamma = (_number(table["gamma"], "gamma", "oscillator") if "gamma" in table
             else omega0 / _number(table["quality_factor"], "quality_factor", "oscillator"))
    return OscillatorParams(
        mass=_number(_need(table, "mass", "oscillator"), "mass", "oscillator"),
        omega0=omega0,
        gamma=gamma,
        temperature=_number(_need(table, "temperature", "oscillator"),
                            "temperature", "oscillator"),
    )


def _parse_measurement(table: dict) -> MeasurementParams:
    allowed = {"eta", "cooperativity", "g0", "kappa", "n_cav", "frequency_pull"}
    _reject_unknown(table, allowed, "measurement")
    kwargs = {k: _number(v, k, "measurement") for k, v in table.items()}
    return MeasurementParams(**kwargs)


def _parse_second_mode(table: dict) -> SecondMode:
    _reject_unknown(table, {"omega2", "quality_factor", "mass", "g_ratio"}, "second_mode")
    return SecondMode(
        omega2=_number(_need(table, "omega2", "second_mode"), "omega2", "second_mode"),
        q2=_number(_need(table, "quality_factor", "second_mode"),
                   "quality_factor", "second_mode"),
        mass2=_number(_need(table, "mass", "second_mode"), "mass", "second_mode"),
        g_ratio=_number(_need(table, "g_ratio", "second_mode"), "g_ratio", "second_mode"),
    )


def _parse_sweep(entries, si: bool) -> tuple[SweepAxis, ...]:
    if not isinstance(entries, list):
        raise ScenarioError("[[sweep]] must be an array of tables")
    if len(entries) > 2:
        raise ScenarioError("at most two sweep axes are supported")
    axes = []
    for entry in entries:
        _reject_unknown(entry, {"variable", "min", "max", "points", "log"}, "sweep")
        variable = _need(entry, "variable", "sweep")
        if variable not in SWEEP_VARIABLES:
            raise ScenarioError(
                f"sweep variable {variable!r} not one of {SWEEP_VARIABLES}")
        if variable == "n_cav" and not si:
            raise ScenarioError("sweeping n_cav requires the SI scenario style")
        points = _need(entry, "points", "sweep")
        if not isinstance(points, int) or not (1 <= points <= MAX_AXIS_POINTS):
            raise ScenarioError(f"sweep points must be an int in [1, {MAX_AXIS_POINTS}]")
        lo = _number(_need(entry, "min", "sweep"), "min", "sweep")
        hi = _number(_need(entry, "max", "sweep"), "max", "sweep")
        if not (0 < lo <= hi):
            raise ScenarioError("sweep range must satisfy 0 < min <= max")
        axes.append(SweepAxis(variable=variable, min=lo, max=hi, points=points,
                              log=bool(entry.get("log", True))))
    if len(axes) == 2:
        if axes[0].variable == axes[1].variable:
            raise ScenarioError("2-D sweep axes must differ")
        if axes[0].points * axes[1].points > MAX_TOTAL_POINTS:
            raise ScenarioError(f"2-D sweep exceeds {MAX_TOTAL_POINTS} total points")
    return tuple(axes)


def _parse_thresholds(table: dict) -> ThresholdSpec:
    _reject_unknown(table, {"targets", "n_th", "eta"}, "thresholds")
    targets = table.get("targets", ["position", "momentum"])
    for t in targets:
        if t not in ("position", "momentum"):
            raise ScenarioError(f"threshold target {t!r} unknown")
    n_th = table.get("n_th")
    eta = table.get("eta")
    return ThresholdSpec(
        targets=tuple(targets),
        n_th=tuple(float(x) for x in n_th) if n_th is not None else None,
        eta=tuple(float(x) for x in eta) if eta is not None else None,
    )


def parse_scenario(raw: dict, name: str) -> Scenario:
    top_allowed = {"title", "oscillator", "measurement", "dimensionless", "feedback",
                   "second_mode", "sweep", "thresholds", "options"}
    _reject_unknown(raw, top_allowed, "top level")

    si_style = "oscillator" in raw or "measurement" in raw
    dl_style = "dimensionless" in raw
    if si_style == dl_style:
        raise ScenarioError(
            "scenario must use either [oscillator]+[measurement] or [dimensionless]")
    oscillator = measurement = dimensionless = None
    if si_style:
        if "oscillator" not in raw or "measurement" not in raw:
            raise ScenarioError("SI style needs both [oscillator] and [measurement]")
        oscillator = _parse_oscillator(raw["oscillator"])
        measurement = _parse_measurement(raw["measurement"])
    else:
        table = raw["dimensionless"]
        _reject_unknown(table, {"eta", "C", "n_th", "Q"}, "dimensionless")
        dimensionless = {k: _number(v, k, "dimensionless") for k, v in table.items()}
        for key in ("eta", "n_th", "Q"):
            _need(table, key, "dimensionless")
        # eager validation with the parameter model's own error messages
        DimensionlessParams(eta=dimensionless["eta"], C=dimensionless.get("C", 1.0),
                            n_th=dimensionless["n_th"], Q=dimensionless["Q"], R=1.0)

    fb = raw.get("feedback", {})
    _reject_unknown(fb, {"ratios"}, "feedback")
    ratios = fb.get("ratios", [1.0])
    if not (isinstance(ratios, list) and ratios
            and all(isinstance(r, (int, float)) and not isinstance(r, bool) and r > 0
                    for r in ratios)):
        raise ScenarioError("[feedback] ratios must be a non-empty list of positive numbers")

    second_mode = _parse_second_mode(raw["second_mode"]) if "second_mode" in raw else None
    if second_mode is not None and oscillator is not None:
        if second_mode.omega2 <= oscillator.omega0:
            raise ScenarioError("second_mode omega2 must exceed oscillator omega0")
    if second_mode is not None and oscillator is None:
        raise ScenarioError("second_mode requires the SI scenario style")

    options = raw.get("options", {})
    _reject_unknown(options, {"nth_at_shifted"}, "options")
    nth_at_shifted = options.get("nth_at_shifted", False)
    if not isinstance(nth_at_shifted, bool):
        raise ScenarioError("options.nth_at_shifted must be a boolean")

    sweep = _parse_sweep(raw.get("sweep", []), si_style)
    if dimensionless is not None and "C" not in dimensionless:
        if not any(axis.variable == "C" for axis in sweep):
            raise ScenarioError(
                "[dimensionless] must set C unless a sweep axis covers it")

    digest = hashlib.sha256(
        json.dumps(raw, sort_keys=True, default=str).encode()).hexdigest()

    return Scenario(
        name=name,
        feedback_ratios=tuple(float(r) for r in ratios),
        oscillator=oscillator,
        measurement=measurement,
        dimensionless=dimensionless,
        second_mode=second_mode,
        sweep=sweep,
        thresholds=_parse_thresholds(raw["thresholds"]) if "thresholds" in raw else None,
        nth_at_shifted=nth_at_shifted,
        digest=digest,
    )


def load_scenario(source: str | Path) -> Scenario:
    """Load from a path, or from the bundled set by bare name."""
    path = Path(source)
    if not path.suffix and str(source) in BUNDLED:
        from importlib import resources

        ref = resources.files("mechsqueeze") / "scenarios" / f"{source}.toml"
        raw = tomllib.loads(ref.read_text(encoding="utf-8"))
        return parse_scenario(raw, str(source))
    if not path.exists():
        raise ScenarioError(f"scenario file {source!r} not found "
                            f"(bundled names: {', '.join(BUNDLED)})")
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"TOML parse error in {source}: {exc}") from exc
    return parse_scenario(raw, path.stem)
