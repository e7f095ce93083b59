"""Scenario ingestion, sweep orchestration, and data export.

Subcommands: ``point``, ``sweep``, ``thresholds``, ``bounds``, ``spectra``.
Every emitted table carries a provenance comment block (scenario hash, tool
version, wall clock); the CSV body below it is byte-identical across reruns
of the same scenario.  A deterministic 1%-by-default subset of sweep points
is re-verified against the quadrature oracle; disagreement beyond 1e-4
relative is a loud consistency failure (exit code 3).

Exit codes: 0 success, 2 validation error, 3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .conditional import (
    covariance_closed,
    covariance_numeric,
    optimal_quadrature,
)
from .criteria import classify, momentum_threshold, position_threshold
from .errors import (
    InvalidParameterError,
    MechSqueezeError,
    ScenarioError,
    WeakMeasurementError,
)
from .multimode import variance_bounds
from .params import DimensionlessParams, FeedbackSetting
from .scenario import Scenario, load_scenario
from .spectra import (
    default_grid,
    displacement_psd,
    export_table,
    force_psd_total,
    imprecision_psd,
    measured_psd,
    second_mode_psd,
)

ORACLE_MISMATCH_TOL = 1e-4

COLUMNS = [
    "status", "eta", "C", "n_th", "Q", "R", "n_cav",
    "n_tot", "omega_meas", "vxx", "vpp", "vxp", "det_v", "det_target", "purity",
    "theta", "v_min", "rwa", "backaction_dominated", "weak_measurement",
    "v_lower", "v_upper", "omega12", "bound_regime",
    "vxx_numeric", "vpp_numeric", "vxp_numeric", "oracle_rel_err",
]

THRESHOLD_COLUMNS = [
    "status", "target", "regime", "n_th", "R", "eta",
    "c_closed", "c_full", "ratio", "c_optimal", "v_at_optimal",
    "n_cav_closed", "n_cav_full",
]

BOUNDS_COLUMNS = [
    "status", "n_cav", "R", "v_lower", "v_upper", "v_single_mode",
    "omega12", "bound_regime",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


@dataclass
class ResultTable:
    """Column-ordered numeric records plus a provenance block."""

    columns: list
    rows: list
    provenance: dict

    def body_lines(self) -> list[str]:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_fmt(v) for v in row))
        return lines

    def write_csv(self, path: Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for key, value in self.provenance.items():
                fh.write(f"# {key}: {value}\n")
            fh.write("\n".join(self.body_lines()))
            fh.write("\n")

    def write_json(self, path: Path) -> None:
        records = [
            {col: (None if (isinstance(v, float) and math.isnan(v)) else v)
             for col, v in zip(self.columns, row)}
            for row in self.rows
        ]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"provenance": self.provenance, "rows": records}, fh, indent=1)
            fh.write("\n")


def _provenance(scenario: Scenario, extra: dict | None = None) -> dict:
    prov = {
        "tool": f"mechsqueeze {__version__}",
        "scenario": scenario.name,
        "scenario-sha256": scenario.digest,
        "generated": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    if extra:
        prov.update(extra)
    return prov


def _selected_for_verification(digest: str, ratio: float, index: int,
                               fraction: float) -> bool:
    if fraction <= 0.0:
        return False
    if fraction >= 1.0:
        return True
    token = f"{digest}:{ratio:.17g}:{index}".encode()
    draw = int.from_bytes(hashlib.sha256(token).digest()[:8], "big") / 2.0**64
    return draw < fraction


def _apply_overrides(scenario: Scenario, ratio: float, overrides: dict
                     ) -> tuple[DimensionlessParams, float | None]:
    """Base numbers with overrides; returns (params, n_cav or None)."""
    if "R" in overrides and "K" in overrides:
        raise ScenarioError("give at most one of R and K overrides")
    if "K" in overrides:
        gain = float(overrides["K"])
        if gain <= -1.0:
            raise ScenarioError("K override must exceed -1 (units of Omega0^2)")
        ratio = math.sqrt(1.0 + gain)
    elif "R" in overrides:
        ratio = float(overrides["R"])
    p = scenario.base_numbers(ratio)
    n_cav = overrides.get("n_cav")
    if n_cav is not None:
        if not scenario.is_si:
            raise ScenarioError("n_cav override requires the SI scenario style")
        c = scenario.measurement.cooperativity_at(scenario.oscillator, float(n_cav))
        p = p.replace(C=c)
    elif (scenario.is_si and scenario.measurement.n_cav is not None
            and scenario.measurement.cooperativity is None
            and "C" not in overrides):
        # the configured photon number only describes the row when C was not
        # independently overridden
        n_cav = scenario.measurement.n_cav
    simple = {k: float(v) for k, v in overrides.items()
              if k in ("eta", "C", "n_th", "Q")}
    if simple:
        p = p.replace(**simple)
    unknown = set(overrides) - {"eta", "C", "n_th", "Q", "R", "K", "n_cav"}
    if unknown:
        raise ScenarioError(f"unknown override(s): {sorted(unknown)}")
    return p, (float(n_cav) if n_cav is not None else None)


def _compute_row(scenario: Scenario, p: DimensionlessParams,
                 n_cav: float | None, index: int, ratio: float,
                 verify_fraction: float) -> list:
    row = {c: None for c in COLUMNS}
    row.update(status="ok", eta=p.eta, C=p.C, n_th=p.n_th, Q=p.Q, R=p.R,
               n_cav=n_cav)
    try:
        v = covariance_closed(p)
        regime = classify(p)
        quad = optimal_quadrature(v, p)
        row.update(
            n_tot=p.n_tot, omega_meas=p.omega_meas,
            vxx=v.vxx, vpp=v.vpp, vxp=v.vxp,
            det_v=v.det, det_target=p.n_tot / (p.eta * p.C), purity=v.purity,
            theta=quad.theta, v_min=quad.v_min,
            rwa=regime.rwa, backaction_dominated=regime.backaction_dominated,
            weak_measurement=regime.weak_measurement,
        )
        if scenario.second_mode is not None:
            bounds = variance_bounds(p, scenario.oscillator, None, scenario.second_mode)
            row.update(v_lower=bounds.lower, v_upper=bounds.upper,
                       omega12=bounds.omega12, bound_regime=bounds.regime_flag)
        if _selected_for_verification(scenario.digest, ratio, index, verify_fraction):
            nv = covariance_numeric(p)
            # floor the cross-term denominator at the correlation level below
            # which vxp cannot move any derived quantity at tolerance
            scale_xp = max(abs(v.vxp), math.sqrt(v.vxx * v.vpp) * 1e-3)
            rel = max(abs(nv.vxx / v.vxx - 1.0), abs(nv.vpp / v.vpp - 1.0),
                      abs(nv.vxp - v.vxp) / scale_xp)
            row.update(vxx_numeric=nv.vxx, vpp_numeric=nv.vpp, vxp_numeric=nv.vxp,
                       oracle_rel_err=rel)
            if rel > ORACLE_MISMATCH_TOL:
                row["status"] = "numeric-mismatch"
    except MechSqueezeError as exc:
        row["status"] = f"error:{type(exc).__name__}"
    return [row[c] for c in COLUMNS]


# module-level worker so ProcessPoolExecutor can pickle it
def _sweep_chunk(args) -> list:
    scenario, ratio, chunk, verify_fraction = args
    out = []
    for index, assignment in chunk:
        try:
            p, n_cav = _apply_overrides(scenario, ratio, assignment)
            row = _compute_row(scenario, p, n_cav, index, ratio, verify_fraction)
        except MechSqueezeError as exc:
            row = [None] * len(COLUMNS)
            row[0] = f"error:{type(exc).__name__}"
        out.append((index, row))
    return out


def _grid_assignments(scenario: Scenario) -> list[dict]:
    axes = scenario.sweep
    if not axes:
        raise ScenarioError("scenario has no [[sweep]] axes")
    if len(axes) == 1:
        return [{axes[0].variable: float(v)} for v in axes[0].values()]
    outer, inner = axes
    return [{outer.variable: float(vo), inner.variable: float(vi)}
            for vo in outer.values() for vi in inner.values()]


def run_point(scenario: Scenario, overrides: dict | None = None, *,
              ratio: float | None = None, verify: bool = True) -> ResultTable:
    """Single full record; verification always runs unless disabled."""
    overrides = dict(overrides or {})
    r = ratio if ratio is not None else scenario.feedback_ratios[0]
    p, n_cav = _apply_overrides(scenario, r, overrides)
    row = _compute_row(scenario, p, n_cav, 0, p.R, 1.0 if verify else 0.0)
    return ResultTable(columns=list(COLUMNS), rows=[row],
                       provenance=_provenance(scenario, {"command": "point"}))


def run_sweep(scenario: Scenario, *, workers: int = 1,
              verify_fraction: float = 0.01) -> dict[float, ResultTable]:
    """One table per feedback ratio, rows in lexicographic grid order."""
    assignments = list(enumerate(_grid_assignments(scenario)))
    tables: dict[float, ResultTable] = {}
    for ratio in scenario.feedback_ratios:
        if workers <= 1 or len(assignments) < 4:
            pairs = _sweep_chunk((scenario, ratio, assignments, verify_fraction))
        else:
            chunk_size = max(1, math.ceil(len(assignments) / (workers * 8)))
            chunks = [assignments[i:i + chunk_size]
                      for i in range(0, len(assignments), chunk_size)]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = pool.map(_sweep_chunk,
                                   [(scenario, ratio, ch, verify_fraction)
                                    for ch in chunks])
                pairs = [pair for chunk_result in results for pair in chunk_result]
        pairs.sort(key=lambda item: item[0])
        tables[ratio] = ResultTable(
            columns=list(COLUMNS),
            rows=[row for _, row in pairs],
            provenance=_provenance(scenario, {"command": "sweep",
                                              "feedback-ratio": f"{ratio:.17g}"}),
        )
    return tables


def run_thresholds(scenario: Scenario) -> ResultTable:
    """Threshold table over the requested (target, n_th, R, eta) grid."""
    spec = scenario.thresholds
    targets = spec.targets if spec else ("position", "momentum")
    base = scenario.base_numbers(scenario.feedback_ratios[0])
    n_th_list = (spec.n_th if spec and spec.n_th else (base.n_th,))
    eta_list = (spec.eta if spec and spec.eta else (base.eta,))
    can_map = scenario.is_si and scenario.measurement.kappa is not None
    rows = []
    for target in targets:
        fn = position_threshold if target == "position" else momentum_threshold
        for n_th in n_th_list:
            for ratio in scenario.feedback_ratios:
                for eta in eta_list:
                    row = dict.fromkeys(THRESHOLD_COLUMNS)
                    row.update(status="ok", target=target, n_th=n_th, R=ratio, eta=eta)
                    try:
                        t = fn(eta=eta, n_th=n_th, Q=base.Q, R=ratio)
                        row.update(regime=t.formula_used,
                                   c_closed=t.c_closed_form, c_full=t.c_full_model,
                                   c_optimal=t.c_optimal, v_at_optimal=t.v_at_optimal)
                        if t.c_closed_form and t.c_full_model:
                            row["ratio"] = t.c_closed_form / t.c_full_model
                        if can_map:
                            osc, meas = scenario.oscillator, scenario.measurement
                            if t.c_closed_form:
                                row["n_cav_closed"] = meas.photons_at(osc, t.c_closed_form)
                            if t.c_full_model:
                                row["n_cav_full"] = meas.photons_at(osc, t.c_full_model)
                    except WeakMeasurementError:
                        row["status"] = "weak-measurement"
                    except MechSqueezeError as exc:
                        row["status"] = f"error:{type(exc).__name__}"
                    rows.append([row[c] for c in THRESHOLD_COLUMNS])
    return ResultTable(columns=list(THRESHOLD_COLUMNS), rows=rows,
                       provenance=_provenance(scenario, {"command": "thresholds"}))


def run_bounds(scenario: Scenario) -> dict[float, ResultTable]:
    """Second-mode variance bounds along an n_cav sweep, one table per ratio."""
    if scenario.second_mode is None:
        raise ScenarioError("bounds require a [second_mode] section")
    axes = [a for a in scenario.sweep if a.variable == "n_cav"]
    if not axes:
        raise ScenarioError("bounds require an n_cav sweep axis")
    values = axes[0].values()
    osc, meas, mode2 = scenario.oscillator, scenario.measurement, scenario.second_mode
    tables: dict[float, ResultTable] = {}
    for ratio in scenario.feedback_ratios:
        rows = []
        for n_cav in values:
            row = dict.fromkeys(BOUNDS_COLUMNS)
            row.update(status="ok", n_cav=float(n_cav), R=ratio)
            try:
                c = meas.cooperativity_at(osc, float(n_cav))
                p = scenario.base_numbers(ratio).replace(C=c)
                b = variance_bounds(p, osc, None, mode2)
                single = covariance_closed(p).vxx
                row.update(v_lower=b.lower, v_upper=b.upper, v_single_mode=single,
                           omega12=b.omega12, bound_regime=b.regime_flag)
            except MechSqueezeError as exc:
                row["status"] = f"error:{type(exc).__name__}"
            rows.append([row[c] for c in BOUNDS_COLUMNS])
        tables[ratio] = ResultTable(
            columns=list(BOUNDS_COLUMNS), rows=rows,
            provenance=_provenance(scenario, {"command": "bounds",
                                              "feedback-ratio": f"{ratio:.17g}"}),
        )
    return tables


def run_spectra(scenario: Scenario, out_dir: Path) -> list[Path]:
    """Two-column tables of the SI spectra for each feedback ratio."""
    if not scenario.is_si:
        raise ScenarioError("spectra export requires the SI scenario style")
    osc = scenario.oscillator
    out = []
    omegas = default_grid(osc.omega0, 2001)
    for ratio in scenario.feedback_ratios:
        fb = FeedbackSetting.from_ratio(ratio)
        p = scenario.base_numbers(ratio)
        spectra = {
            "sxx": displacement_psd(p, osc, fb),
            "smeas": measured_psd(p, osc, fb),
            "simp": imprecision_psd(p, osc),
            "sff": force_psd_total(p, osc),
        }
        if scenario.second_mode is not None:
            spectra["sxx2"] = second_mode_psd(scenario.second_mode, p, osc)
        for tag, spectrum in spectra.items():
            path = out_dir / f"{scenario.name}_R{ratio:g}_{tag}.txt"
            export_table(spectrum, omegas, path)
            out.append(path)
    return out


# ---------------------------------------------------------------------------
# command-line front end
# ---------------------------------------------------------------------------

def _parse_override(text: str) -> tuple[str, float]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"override must be key=value, got {text!r}")
    key, _, value = text.partition("=")
    try:
        return key.strip(), float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"override value in {text!r} not numeric") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mechsqueeze",
        description="Conditional-squeezing calculator for a measured, "
                    "feedback-shifted mechanical oscillator.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True,
                        help="scenario file path or bundled name "
                             "(fig2, fig3a, fig3b, fig4, membrane)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    p_point = sub.add_parser("point", parents=[common],
                             help="single parameter point, full record")
    p_point.add_argument("--override", action="append", type=_parse_override,
                         default=[], metavar="KEY=VALUE",
                         help="override eta/C/n_th/Q/R/K/n_cav")
    p_point.add_argument("--no-verify", action="store_true",
                         help="skip the numeric-oracle check")
    p_sweep = sub.add_parser("sweep", parents=[common], help="grid sweep")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--verify-fraction", type=float, default=0.01)
    sub.add_parser("thresholds", parents=[common], help="squeezing thresholds")
    sub.add_parser("bounds", parents=[common], help="second-mode variance bounds")
    sub.add_parser("spectra", parents=[common], help="export spectra tables")
    return parser


def _write(table: ResultTable, path_base: Path, fmt: str) -> Path:
    # names may contain dots (R0.1); append the extension explicitly
    path = path_base.parent / (path_base.name + (".json" if fmt == "json" else ".csv"))
    if fmt == "json":
        table.write_json(path)
    else:
        table.write_csv(path)
    return path


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
    except (ScenarioError, MechSqueezeError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out)
    numeric_failure = False
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "point":
            table = run_point(scenario, dict(args.override),
                              verify=not args.no_verify)
            path = _write(table, out_dir / f"{scenario.name}_point", args.format)
            print(f"wrote {path}")
            numeric_failure = any(row[0] == "numeric-mismatch" for row in table.rows)
        elif args.command == "sweep":
            tables = run_sweep(scenario, workers=args.workers,
                               verify_fraction=args.verify_fraction)
            for ratio, table in tables.items():
                path = _write(table, out_dir / f"{scenario.name}_R{ratio:g}",
                              args.format)
                bad = sum(1 for row in table.rows
                          if row[0] not in ("ok", None) and row[0] != "ok")
                print(f"wrote {path} ({len(table.rows)} rows, {bad} non-ok)")
                numeric_failure |= any(row[0] == "numeric-mismatch" for row in table.rows)
        elif args.command == "thresholds":
            table = run_thresholds(scenario)
            path = _write(table, out_dir / f"{scenario.name}_thresholds", args.format)
            print(f"wrote {path}")
        elif args.command == "bounds":
            tables = run_bounds(scenario)
            for ratio, table in tables.items():
                path = _write(table, out_dir / f"{scenario.name}_bounds_R{ratio:g}",
                              args.format)
                print(f"wrote {path}")
        elif args.command == "spectra":
            for path in run_spectra(scenario, out_dir):
                print(f"wrote {path}")
    except InvalidParameterError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except MechSqueezeError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    return 3 if numeric_failure else 0


if __name__ == "__main__":
    sys.exit(main())
