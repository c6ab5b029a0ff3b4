"""Text, JSON and CSV renderings of tables and accuracy results."""

import io
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Union

import numpy as np
import orjson
import pandas as pd

from .common import dumps, log
from .config import JSON_SCHEMA_VERSION, TEXT_DIGITS
from .data.dataset import VerificationTable
from .estimators.closed import MEASURES, AccuracyResult

HEADLINES = {
    "CCA": "Uncorrected: complete case analysis",
    "BG": "Corrected: Begg-Greenes",
    "EBG": "Corrected: extended Begg-Greenes",
    "MI": "Corrected: multiple imputation",
    "EM": "Corrected: EM with three logistic models",
}

STATISTICS = ("estimate", "se", "ci_low", "ci_high")


def _fmt(value: Optional[float], digits: int = TEXT_DIGITS) -> str:
    if value is None or not np.isfinite(value):
        return "NA"
    return f"{value:#.{digits}g}"


def _json_float(value: Optional[float]) -> Optional[float]:
    if value is None or not np.isfinite(value):
        return None
    return float(value)


# ============================================================================
# CROSS-TABLE
# ============================================================================

def table_frame(table: VerificationTable, show_unverified: bool = True, show_total: bool = True) -> pd.DataFrame:
    frame = pd.DataFrame(
        {"yes": [table.s1, table.s0], "no": [table.r1, table.r0]},
        index=["yes", "no"],
    )
    if show_unverified:
        frame["unverified"] = [table.u1, table.u0]
    if show_total:
        frame["Total"] = frame.sum(axis=1)
    return frame


def format_table(table: VerificationTable, show_unverified: bool = True, show_total: bool = True) -> str:
    """Test result by disease status, optionally with unverified and total columns."""
    body = table_frame(table, show_unverified, show_total).to_string()
    return "Test by Disease\n" + body


def render_table(table: VerificationTable, fmt: str = "text",
                 show_unverified: bool = True, show_total: bool = True) -> str:
    if fmt == "json":
        return dumps(table.as_dict()).decode("utf-8")
    if fmt == "csv":
        frame = table_frame(table, show_unverified, show_total)
        return frame.rename_axis("test").to_csv()
    return format_table(table, show_unverified, show_total)


# ============================================================================
# SINGLE RESULT
# ============================================================================

def format_result_text(result: AccuracyResult) -> str:
    rows = {
        name: [
            _fmt(result[name].estimate),
            _fmt(result[name].se),
            _fmt(result[name].ci_low),
            _fmt(result[name].ci_high),
        ]
        for name in MEASURES
    }
    frame = pd.DataFrame.from_dict(rows, orient="index", columns=["Est", "SE", "LowCI", "UppCI"])
    if result.ci_kind == "none":
        frame = frame[["Est", "SE"]] if any(result[m].se is not None for m in MEASURES) else frame[["Est"]]

    lines = ["Estimates of accuracy measures", HEADLINES.get(result.method, result.method)]
    lines.append(frame.to_string())

    meta = result.metadata
    notes = []
    if result.ci_kind != "none":
        notes.append(f"{int(round((1 - result.alpha) * 100))}% CI: {result.ci_kind}")
    for key in ("covariates", "m", "replicates", "failed_replicates", "seed", "iterations", "converged"):
        if key in meta and meta[key] not in (None, []):
            notes.append(f"{key}={meta[key]}")
    if notes:
        lines.append("(" + ", ".join(notes) + ")")
    for warning in meta.get("warnings", []):
        lines.append(f"warning: {warning}")
    return "\n".join(lines)


def result_to_json(result: AccuracyResult) -> dict:
    """Schema-versioned plain dict; non-finite numbers become null."""
    measures = {}
    for name in MEASURES:
        m = result[name]
        clipped = m.ci_clipped
        measures[name] = {
            "estimate": _json_float(m.estimate),
            "se": _json_float(m.se),
            "ci_low": _json_float(m.ci_low),
            "ci_high": _json_float(m.ci_high),
            "ci_clipped": None if clipped is None else [_json_float(v) for v in clipped],
        }
    return {
        "schema_version": JSON_SCHEMA_VERSION,
        "method": result.method,
        "ci_kind": result.ci_kind,
        "alpha": result.alpha,
        "measures": measures,
        "metadata": _plain(result.metadata),
    }


def _plain(value):
    """Recursively converts numpy scalars and non-finite floats for JSON."""
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return _json_float(value)
    return value


def result_to_csv_rows(result: AccuracyResult) -> List[dict]:
    rows = []
    for name in MEASURES:
        m = result[name]
        for stat in STATISTICS:
            rows.append({
                "method": result.method,
                "measure": name,
                "statistic": stat,
                "value": _json_float(getattr(m, stat)),
            })
    return rows


def csv_text(rows: List[dict]) -> str:
    buffer = io.StringIO()
    pd.DataFrame(rows, columns=["method", "measure", "statistic", "value"]).to_csv(
        buffer, index=False, na_rep="NA", float_format="%.10g"
    )
    return buffer.getvalue()


def render(result: AccuracyResult, fmt: str = "text") -> str:
    if fmt == "json":
        return dumps(result_to_json(result)).decode("utf-8")
    if fmt == "csv":
        return csv_text(result_to_csv_rows(result))
    return format_result_text(result)


# ============================================================================
# COMPARISON
# ============================================================================

def comparison_frame(results: Dict[str, AccuracyResult]) -> pd.DataFrame:
    """Measures as rows, one column per labelled result."""
    return pd.DataFrame(
        {label: result.estimates() for label, result in results.items()},
        index=pd.Index(MEASURES, name="Measure"),
    )


def format_comparison(frame: pd.DataFrame) -> str:
    return frame.round(3).to_string(float_format=lambda v: f"{v:.3f}")


def render_comparison(results: Dict[str, AccuracyResult], fmt: str = "text") -> str:
    if fmt == "json":
        payload = {
            "schema_version": JSON_SCHEMA_VERSION,
            "comparison": {label: result_to_json(r) for label, r in results.items()},
        }
        return dumps(payload).decode("utf-8")
    if fmt == "csv":
        rows = []
        for label, result in results.items():
            for row in result_to_csv_rows(result):
                row["method"] = label
                rows.append(row)
        return csv_text(rows)
    return format_comparison(comparison_frame(results))


def parse_json(text: Union[str, bytes]) -> dict:
    return orjson.loads(text)


def write_output(text: str, path: Optional[Union[str, Path]] = None) -> None:
    """Writes to `path`, or stdout when None."""
    if path is None:
        print(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    log(f"Wrote {path}")
