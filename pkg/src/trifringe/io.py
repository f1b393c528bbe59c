"""File formats: delimited datasets, model documents, run configs.

CSV layouts are fixed and validated strictly: the header must match
exactly, malformed rows are rejected with their line number, and
numbers are written with shortest round-trip formatting so write/read
is the identity.  Scan files carry their metadata in ``#key=value``
preamble lines ahead of the header; port pairs appear as 1-based
strings like ``1-2`` in every external format, while the library uses
0-based indices internally.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .calibration import FringeDataset, FringeRecord, SetpointFit
from .device import CouplingMatrix, DeviceModel, PhaseCalibration, SetpointRecord
from .errors import ValidationError
from .fisher import FisherCurve
from .homscan import HomScanDataset, VisibilityRecord
from .synth import CouplingLaw, RunConfig, ScanJob, SyntheticDeviceSpec

FRINGE_COLUMNS = ("voltage_V", "current_A", "input_port", "counts_out1",
                  "counts_out2", "counts_out3", "integration_s")
HOM_COLUMNS = ("delay_ps", "coincidences", "singles_m", "singles_n")
HOM_META_KEYS = ("input_pair", "output_pair", "voltage_V", "current_A",
                 "window_ns", "integration_s")
VISIBILITY_COLUMNS = ("input_pair", "output_pair", "theta_rad", "visibility",
                      "visibility_sigma", "baseline", "extremum",
                      "dip_center_ps", "dip_width_ps")
FISHER_COLUMNS = ("theta", "F", "F_lo", "F_hi")
REPORT_COLUMNS = ("voltage", "theta", "g1", "g2", "g3", "g1_lo", "g1_hi",
                  "g2_lo", "g2_hi", "g3_lo", "g3_hi", "likelihood_at_min",
                  "n_evals", "status")
PREDICTION_COLUMNS = ("theta_rad", "output_pair", "indistinguishable",
                      "indistinguishable_lo", "indistinguishable_hi",
                      "distinguishable", "distinguishable_lo",
                      "distinguishable_hi")
COMPARISON_COLUMNS = ("input_pair", "output_pair", "theta_rad", "measured",
                      "measured_sigma", "predicted", "predicted_lo",
                      "predicted_hi", "deviation_sigma")


def _fmt(value: float) -> str:
    return repr(float(value))


def _parse_float(text: str, what: str, line_no: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(f"line {line_no}: {what} is not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ValidationError(f"line {line_no}: {what} must be finite, got {text!r}")
    return value


def pair_to_text(pair) -> str:
    return f"{pair[0] + 1}-{pair[1] + 1}"


def pair_from_text(text: str, what: str = "port pair") -> tuple[int, int]:
    parts = text.strip().split("-")
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise ValidationError(f"{what} must look like '1-2', got {text!r}")
    a, b = (int(p) - 1 for p in parts)
    if not (0 <= a <= 2 and 0 <= b <= 2) or a == b:
        raise ValidationError(f"{what} must name two distinct ports in 1..3, got {text!r}")
    return a, b


def _check_header(line: str, columns, line_no: int) -> None:
    got = tuple(c.strip() for c in line.split(","))
    if got == tuple(columns):
        return
    unknown = [c for c in got if c not in columns]
    missing = [c for c in columns if c not in got]
    parts = []
    if unknown:
        parts.append(f"unknown column(s) {unknown}")
    if missing:
        parts.append(f"missing column(s) {missing}")
    if not parts:
        parts.append(f"column order must be {','.join(columns)}")
    raise ValidationError(f"line {line_no}: bad header: " + "; ".join(parts))


def _split_row(line: str, n_columns: int, line_no: int) -> list[str]:
    cells = [c.strip() for c in line.split(",")]
    if len(cells) != n_columns:
        raise ValidationError(
            f"line {line_no}: expected {n_columns} fields, got {len(cells)}"
        )
    return cells


def _read_lines(path: str) -> list[str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None


def _split_preamble(lines: list[str]):
    """Leading '#key=value' lines -> dict, remaining lines with numbers."""
    meta = {}
    body_start = 0
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            body_start = i
            break
        if "=" not in line:
            raise ValidationError(f"line {i + 1}: malformed preamble line {line!r}")
        key, _, value = line[1:].partition("=")
        meta[key.strip()] = value.strip()
    else:
        body_start = len(lines)
    body = [(i + 1, lines[i]) for i in range(body_start, len(lines)) if lines[i].strip()]
    return meta, body


# ---------------------------------------------------------------------------
# fringe datasets
# ---------------------------------------------------------------------------

def write_fringes(dataset: FringeDataset, path: str) -> None:
    lines = [f"#source_rate_per_s={_fmt(dataset.source_rate)}",
             ",".join(FRINGE_COLUMNS)]
    for rec in dataset.records:
        lines.append(",".join([
            _fmt(rec.voltage), _fmt(rec.current), str(rec.input_port + 1),
            _fmt(rec.counts[0]), _fmt(rec.counts[1]), _fmt(rec.counts[2]),
            _fmt(rec.integration_s),
        ]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_fringes(path: str) -> FringeDataset:
    meta, body = _split_preamble(_read_lines(path))
    if "source_rate_per_s" not in meta:
        raise ValidationError(f"{path}: missing '#source_rate_per_s=' preamble line")
    source_rate = _parse_float(meta["source_rate_per_s"], "source_rate_per_s", 1)
    if not body:
        raise ValidationError(f"{path}: no header line")
    header_no, header = body[0]
    _check_header(header, FRINGE_COLUMNS, header_no)
    records = []
    for line_no, line in body[1:]:
        cells = _split_row(line, len(FRINGE_COLUMNS), line_no)
        voltage = _parse_float(cells[0], "voltage_V", line_no)
        current = _parse_float(cells[1], "current_A", line_no)
        try:
            port = int(cells[2])
        except ValueError:
            raise ValidationError(f"line {line_no}: input_port is not an integer: {cells[2]!r}") from None
        if not (1 <= port <= 3):
            raise ValidationError(f"line {line_no}: input_port must be 1..3, got {port}")
        counts = tuple(_parse_float(cells[3 + j], f"counts_out{j + 1}", line_no)
                       for j in range(3))
        if any(c < 0 for c in counts):
            raise ValidationError(f"line {line_no}: negative count")
        integration = _parse_float(cells[6], "integration_s", line_no)
        try:
            records.append(FringeRecord(voltage, current, port - 1, counts, integration))
        except ValidationError as exc:
            raise ValidationError(f"line {line_no}: {exc}") from None
    return FringeDataset(records, source_rate)


# ---------------------------------------------------------------------------
# delay scans
# ---------------------------------------------------------------------------

def write_hom_scan(scan: HomScanDataset, path: str) -> None:
    if scan.singles_m is None or scan.singles_n is None:
        raise ValidationError("scan files require singles columns")
    lines = [
        f"#input_pair={pair_to_text(scan.input_pair)}",
        f"#output_pair={pair_to_text(scan.output_pair)}",
        f"#voltage_V={_fmt(scan.voltage)}",
        f"#current_A={_fmt(scan.current)}",
        f"#window_ns={_fmt(scan.window_ns)}",
        f"#integration_s={_fmt(scan.integration_s)}",
        ",".join(HOM_COLUMNS),
    ]
    for row in zip(scan.delays_ps, scan.coincidences, scan.singles_m, scan.singles_n):
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_hom_scan(path: str) -> HomScanDataset:
    meta, body = _split_preamble(_read_lines(path))
    missing = [k for k in HOM_META_KEYS if k not in meta]
    if missing:
        raise ValidationError(f"{path}: missing preamble key(s) {missing}")
    unknown = [k for k in meta if k not in HOM_META_KEYS]
    if unknown:
        raise ValidationError(f"{path}: unknown preamble key(s) {unknown}")
    if not body:
        raise ValidationError(f"{path}: no header line")
    header_no, header = body[0]
    _check_header(header, HOM_COLUMNS, header_no)
    rows = []
    for line_no, line in body[1:]:
        cells = _split_row(line, len(HOM_COLUMNS), line_no)
        rows.append([_parse_float(cells[c], HOM_COLUMNS[c], line_no) for c in range(4)])
    if not rows:
        raise ValidationError(f"{path}: scan has no data rows")
    data = np.array(rows)
    try:
        return HomScanDataset(
            input_pair=pair_from_text(meta["input_pair"], "input_pair"),
            output_pair=pair_from_text(meta["output_pair"], "output_pair"),
            voltage=_parse_float(meta["voltage_V"], "voltage_V", 1),
            current=_parse_float(meta["current_A"], "current_A", 1),
            integration_s=_parse_float(meta["integration_s"], "integration_s", 1),
            window_ns=_parse_float(meta["window_ns"], "window_ns", 1),
            delays_ps=data[:, 0],
            coincidences=data[:, 1],
            singles_m=data[:, 2],
            singles_n=data[:, 3],
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# device model documents
# ---------------------------------------------------------------------------

def model_to_dict(model: DeviceModel) -> dict:
    return {
        "calibration": {
            "k": model.calibration.k,
            "k_uncertainty": model.calibration.k_uncertainty,
        },
        "setpoints": [
            {
                "voltage": s.voltage,
                "current": s.current,
                "theta": s.theta,
                "g": list(s.coupling.couplings()),
                "g_lo": list(s.coupling_lo.couplings()),
                "g_hi": list(s.coupling_hi.couplings()),
            }
            for s in model.setpoints
        ],
        "loss_products": {
            f"{i + 1},{j + 1}": value
            for (i, j), value in sorted(model.loss_products.items())
        },
        "input_pair_rate": model.input_pair_rate,
    }


def model_from_dict(doc: dict) -> DeviceModel:
    required = {"calibration", "setpoints", "loss_products", "input_pair_rate"}
    if not isinstance(doc, dict) or set(doc) != required:
        raise ValidationError(
            f"model document must have exactly the keys {sorted(required)}"
        )
    cal = doc["calibration"]
    if set(cal) != {"k", "k_uncertainty"}:
        raise ValidationError("calibration must have keys k, k_uncertainty")
    setpoints = []
    for i, sp in enumerate(doc["setpoints"]):
        expected = {"voltage", "current", "theta", "g", "g_lo", "g_hi"}
        if set(sp) != expected:
            raise ValidationError(f"setpoint {i} must have keys {sorted(expected)}")
        setpoints.append(SetpointRecord(
            voltage=float(sp["voltage"]),
            current=float(sp["current"]),
            theta=float(sp["theta"]),
            coupling=CouplingMatrix.from_couplings(sp["g"]),
            coupling_lo=CouplingMatrix.from_couplings(sp["g_lo"]),
            coupling_hi=CouplingMatrix.from_couplings(sp["g_hi"]),
        ))
    losses = {}
    for key, value in doc["loss_products"].items():
        parts = key.split(",")
        if len(parts) != 2:
            raise ValidationError(f"loss product key {key!r} must look like 'i,j'")
        i, j = (int(p) - 1 for p in parts)
        losses[(i, j)] = float(value)
    return DeviceModel(
        calibration=PhaseCalibration(k=float(cal["k"]),
                                     k_uncertainty=float(cal["k_uncertainty"])),
        setpoints=setpoints,
        loss_products=losses,
        input_pair_rate=float(doc["input_pair_rate"]),
    )


def write_model(model: DeviceModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_model(path: str) -> DeviceModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from None
    return model_from_dict(doc)


# ---------------------------------------------------------------------------
# visibility tables
# ---------------------------------------------------------------------------

def write_visibilities(records: list[VisibilityRecord], path: str) -> None:
    lines = [",".join(VISIBILITY_COLUMNS)]
    for r in records:
        lines.append(",".join([
            pair_to_text(r.input_pair), pair_to_text(r.output_pair),
            _fmt(r.theta), _fmt(r.visibility), _fmt(r.visibility_sigma),
            _fmt(r.baseline), _fmt(r.extremum), _fmt(r.dip_center),
            _fmt(r.dip_width),
        ]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_visibilities(path: str) -> list[VisibilityRecord]:
    lines = [(i + 1, l) for i, l in enumerate(_read_lines(path)) if l.strip()]
    if not lines:
        raise ValidationError(f"{path}: empty file")
    header_no, header = lines[0]
    _check_header(header, VISIBILITY_COLUMNS, header_no)
    out = []
    for line_no, line in lines[1:]:
        cells = _split_row(line, len(VISIBILITY_COLUMNS), line_no)
        # theta_rad may be nan: scan-fit leaves it unset without a model
        floats = [float(cells[2]) if cells[2] == "nan" else
                  _parse_float(cells[2], "theta_rad", line_no)]
        floats += [_parse_float(cells[c], VISIBILITY_COLUMNS[c], line_no)
                   for c in range(3, len(VISIBILITY_COLUMNS))]
        out.append(VisibilityRecord(
            input_pair=pair_from_text(cells[0], "input_pair"),
            output_pair=pair_from_text(cells[1], "output_pair"),
            theta=floats[0], visibility=floats[1], visibility_sigma=floats[2],
            baseline=floats[3], extremum=floats[4], dip_center=floats[5],
            dip_width=floats[6],
        ))
    return out


# ---------------------------------------------------------------------------
# fisher curves, fit reports, predictions, comparisons
# ---------------------------------------------------------------------------

def write_fisher_curve(curve: FisherCurve, path: str) -> None:
    lines = [",".join(FISHER_COLUMNS)]
    for row in zip(curve.thetas, curve.values, curve.lower, curve.upper):
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def fisher_summary(curve: FisherCurve, level: float = 2.0) -> dict:
    argmax, peak = curve.max_point()
    interval = curve.interval_above(level)
    return {
        "max_F": peak,
        "argmax_theta": argmax,
        "theta_interval_where_F_exceeds_2": list(interval) if interval else None,
    }


def write_fisher_summary(curve: FisherCurve, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(fisher_summary(curve), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_fit_report(fits: list[SetpointFit], thetas: list[float], path: str) -> None:
    if len(fits) != len(thetas):
        raise ValidationError("one theta per setpoint fit is required")
    lines = [",".join(REPORT_COLUMNS)]
    for fit, theta in zip(fits, thetas):
        g = fit.coupling.couplings()
        lo = fit.coupling_lo.couplings()
        hi = fit.coupling_hi.couplings()
        lines.append(",".join(
            [_fmt(fit.voltage), _fmt(theta), _fmt(g[0]), _fmt(g[1]), _fmt(g[2]),
             _fmt(lo[0]), _fmt(hi[0]), _fmt(lo[1]), _fmt(hi[1]), _fmt(lo[2]),
             _fmt(hi[2]), _fmt(fit.likelihood), str(fit.n_evals), fit.status]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_predictions(rows: list[dict], input_state, path: str) -> None:
    lines = [f"#input={input_state}", ",".join(PREDICTION_COLUMNS)]
    for row in rows:
        lines.append(",".join([
            _fmt(row["theta"]), pair_to_text(row["output_pair"]),
            _fmt(row["indistinguishable"].value), _fmt(row["indistinguishable"].lo),
            _fmt(row["indistinguishable"].hi), _fmt(row["distinguishable"].value),
            _fmt(row["distinguishable"].lo), _fmt(row["distinguishable"].hi),
        ]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_comparison(rows: list[dict], path: str) -> None:
    lines = [",".join(COMPARISON_COLUMNS)]
    for row in rows:
        lines.append(",".join([
            pair_to_text(row["input_pair"]), pair_to_text(row["output_pair"]),
            _fmt(row["theta"]), _fmt(row["measured"]), _fmt(row["measured_sigma"]),
            _fmt(row["predicted"]), _fmt(row["predicted_lo"]),
            _fmt(row["predicted_hi"]), _fmt(row["deviation_sigma"]),
        ]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# synthetic specs and run configs
# ---------------------------------------------------------------------------

def _require_keys(doc: dict, required: set[str], optional: set[str], what: str) -> None:
    if not isinstance(doc, dict):
        raise ValidationError(f"{what} must be a JSON object")
    missing = required - set(doc)
    unknown = set(doc) - required - optional
    if missing:
        raise ValidationError(f"{what}: missing key(s) {sorted(missing)}")
    if unknown:
        raise ValidationError(f"{what}: unknown key(s) {sorted(unknown)}")


def device_spec_from_dict(doc: dict) -> SyntheticDeviceSpec:
    _require_keys(doc, {"coupling_laws", "k_true", "heater_resistance", "eta_in",
                        "eta_out", "source_rate", "pair_rate"},
                  {"kappa", "coincidence_window_ns", "rng_seed"}, "device spec")
    laws = []
    for i, law in enumerate(doc["coupling_laws"]):
        _require_keys(law, {"c0"}, {"c1", "c2"}, f"coupling law {i}")
        laws.append(CouplingLaw(float(law["c0"]), float(law.get("c1", 0.0)),
                                float(law.get("c2", 0.0))))
    if len(laws) != 3:
        raise ValidationError("device spec needs exactly 3 coupling laws")
    kwargs = {}
    if "kappa" in doc:
        kwargs["kappa"] = float(doc["kappa"])
    if "coincidence_window_ns" in doc:
        kwargs["coincidence_window_ns"] = float(doc["coincidence_window_ns"])
    if "rng_seed" in doc:
        kwargs["rng_seed"] = int(doc["rng_seed"])
    return SyntheticDeviceSpec(
        coupling_laws=tuple(laws),
        k_true=float(doc["k_true"]),
        heater_resistance=float(doc["heater_resistance"]),
        eta_in=tuple(float(v) for v in doc["eta_in"]),
        eta_out=tuple(float(v) for v in doc["eta_out"]),
        source_rate=float(doc["source_rate"]),
        pair_rate=float(doc["pair_rate"]),
        **kwargs,
    )


def run_config_from_dict(doc: dict) -> RunConfig:
    _require_keys(doc, {"voltages"},
                  {"delays_ps", "fringe_integration_s", "scan_integration_s", "scans"},
                  "run config")
    scans = []
    for i, job in enumerate(doc.get("scans", [])):
        _require_keys(job, {"voltage", "input_pair", "output_pair"}, set(), f"scan job {i}")
        scans.append(ScanJob(
            voltage=float(job["voltage"]),
            input_pair=pair_from_text(str(job["input_pair"]), "input_pair"),
            output_pair=pair_from_text(str(job["output_pair"]), "output_pair"),
        ))
    return RunConfig(
        voltages=tuple(float(v) for v in doc["voltages"]),
        delays_ps=tuple(float(v) for v in doc.get("delays_ps", [])),
        fringe_integration_s=float(doc.get("fringe_integration_s", 1.0)),
        scan_integration_s=float(doc.get("scan_integration_s", 1.0)),
        scans=tuple(scans),
    )


def _read_json(path: str, what: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid {what} JSON: {exc}") from None


def read_device_spec(path: str) -> SyntheticDeviceSpec:
    return device_spec_from_dict(_read_json(path, "device spec"))


def read_run_config(path: str) -> RunConfig:
    return run_config_from_dict(_read_json(path, "run config"))


def scan_paths(directory: str) -> list[str]:
    """All scan CSV files under a directory, name-sorted."""
    try:
        names = sorted(os.listdir(directory))
    except OSError as exc:
        raise ValidationError(f"cannot list {directory}: {exc}") from None
    paths = [os.path.join(directory, n) for n in names
             if n.endswith(".csv") and n.startswith("scan")]
    if not paths:
        raise ValidationError(f"no scan_*.csv files found in {directory}")
    return paths
