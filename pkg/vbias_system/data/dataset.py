"""
Patient-level data model and the verification cross-table.

A Dataset holds the index test result T, the (possibly missing) disease
status D and any covariates X for every patient, in input order. Verification
V is derived: a record is verified exactly when its D is present.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..common import as_name_tuple, log
from ..errors import EmptyDataset, MalformedInput

CAD_SPECT_PATH = Path(__file__).parent / "cad_spect.csv"

MISSING_MARKERS = ("", "na")


@dataclass(frozen=True)
class Record:
    t: int
    d: Optional[int] = None
    x: Tuple[float, ...] = ()

    @property
    def verified(self) -> bool:
        return self.d is not None


@dataclass(frozen=True)
class VerificationTable:
    """Counts of a partially verified 2x2 table.

    s = verified diseased, r = verified non-diseased, u = unverified;
    the suffix is the index test result.
    """
    s1: int
    s0: int
    r1: int
    r0: int
    u1: int
    u0: int

    def __post_init__(self):
        for name in ("s1", "s0", "r1", "r0", "u1", "u0"):
            if getattr(self, name) < 0:
                raise MalformedInput(f"count {name} must be >= 0")

    @property
    def n1(self) -> int:
        return self.s1 + self.r1 + self.u1

    @property
    def n0(self) -> int:
        return self.s0 + self.r0 + self.u0

    @property
    def u(self) -> int:
        return self.u1 + self.u0

    @property
    def n(self) -> int:
        return self.n1 + self.n0

    @property
    def n_verified(self) -> int:
        return self.s1 + self.s0 + self.r1 + self.r0

    def as_dict(self) -> dict:
        return {
            "s1": self.s1, "s0": self.s0, "r1": self.r1, "r0": self.r0,
            "u1": self.u1, "u0": self.u0, "n1": self.n1, "n0": self.n0,
            "u": self.u, "n": self.n,
        }


class Dataset:
    """Immutable, index-aligned arrays of T, D (NaN = unverified) and X."""

    __slots__ = ("_t", "_d", "_x", "_names")

    def __init__(
        self,
        t: Sequence[int],
        d: Sequence[float],
        x: Optional[np.ndarray] = None,
        covariate_names: Sequence[str] = (),
    ):
        t_arr = np.asarray(t, dtype=float)
        d_arr = np.asarray(d, dtype=float)
        names = tuple(covariate_names)

        if t_arr.ndim != 1 or d_arr.shape != t_arr.shape:
            raise MalformedInput("T and D must be 1-D and of equal length")
        if t_arr.size == 0:
            raise EmptyDataset("dataset has no records")
        if not np.isin(t_arr, (0.0, 1.0)).all():
            raise MalformedInput("test result T must be 0 or 1")
        present = ~np.isnan(d_arr)
        if not np.isin(d_arr[present], (0.0, 1.0)).all():
            raise MalformedInput("disease status D must be 0, 1 or missing")

        if x is None:
            x_arr = np.empty((t_arr.size, 0))
        else:
            x_arr = np.asarray(x, dtype=float).reshape(t_arr.size, -1)
        if x_arr.shape[1] != len(names):
            raise MalformedInput(
                f"{x_arr.shape[1]} covariate columns but {len(names)} covariate names"
            )
        if len(set(names)) != len(names):
            raise MalformedInput(f"duplicate covariate names: {names}")
        if not np.isfinite(x_arr).all():
            raise MalformedInput("covariate values must be finite numbers")

        t_arr = t_arr.astype(np.int8)
        for arr in (t_arr, d_arr, x_arr):
            arr.flags.writeable = False
        self._t, self._d, self._x, self._names = t_arr, d_arr, x_arr, names

    # --- construction -------------------------------------------------------

    @classmethod
    def from_records(cls, records: Iterable[Record], covariate_names: Sequence[str] = ()) -> "Dataset":
        records = list(records)
        names = tuple(covariate_names)
        for rec in records:
            if len(rec.x) != len(names):
                raise MalformedInput(
                    f"record has {len(rec.x)} covariates, expected {len(names)}"
                )
        t = [rec.t for rec in records]
        d = [np.nan if rec.d is None else rec.d for rec in records]
        x = np.array([rec.x for rec in records], dtype=float).reshape(len(records), len(names))
        return cls(t, d, x, names)

    def take(self, indices: Sequence[int]) -> "Dataset":
        """Rows at `indices` (repeats allowed), in that order."""
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self._t[idx], self._d[idx], self._x[idx], self._names)

    def with_disease(self, d: Sequence[float]) -> "Dataset":
        """Same records with the disease column replaced."""
        return Dataset(self._t, d, self._x, self._names)

    # --- accessors ----------------------------------------------------------

    @property
    def t(self) -> np.ndarray:
        return self._t

    @property
    def d(self) -> np.ndarray:
        return self._d

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def covariate_names(self) -> Tuple[str, ...]:
        return self._names

    @property
    def n(self) -> int:
        return int(self._t.size)

    def __len__(self) -> int:
        return self.n

    @property
    def verified(self) -> np.ndarray:
        return ~np.isnan(self._d)

    @property
    def n_unverified(self) -> int:
        return int(np.isnan(self._d).sum())

    @property
    def records(self) -> Tuple[Record, ...]:
        return tuple(
            Record(
                t=int(t),
                d=None if np.isnan(d) else int(d),
                x=tuple(float(v) for v in x),
            )
            for t, d, x in zip(self._t, self._d, self._x)
        )

    def covariates(self, names: Union[str, Sequence[str], None] = None) -> np.ndarray:
        """Covariate matrix for `names` (all covariates when None)."""
        if names is None:
            return self._x
        cols = []
        for name in as_name_tuple(names):
            if name not in self._names:
                raise MalformedInput(
                    f"unknown covariate {name!r}; available: {list(self._names)}"
                )
            cols.append(self._names.index(name))
        return self._x[:, cols]

    def to_frame(self, test_col: str = "T", disease_col: str = "D") -> pd.DataFrame:
        frame = pd.DataFrame({
            test_col: self._t.astype(int),
            disease_col: pd.array(
                [pd.NA if np.isnan(v) else int(v) for v in self._d], dtype="Int64"
            ),
        })
        for j, name in enumerate(self._names):
            col = self._x[:, j]
            frame[name] = col.astype(int) if np.all(col == np.round(col)) else col
        return frame

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self._names == other._names
            and np.array_equal(self._t, other._t)
            and np.array_equal(self._d, other._d, equal_nan=True)
            and np.array_equal(self._x, other._x)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return (
            f"Dataset(n={self.n}, unverified={self.n_unverified}, "
            f"covariates={list(self._names)})"
        )


# ============================================================================
# LOADING / SAVING
# ============================================================================

def _binary_column(values: pd.Series, name: str, allow_missing: bool) -> np.ndarray:
    cleaned = values.str.strip()
    missing = cleaned.str.lower().isin(MISSING_MARKERS)
    if missing.any() and not allow_missing:
        row = int(missing.idxmax()) + 2
        raise MalformedInput(f"column {name!r} has a missing value at line {row}")
    bad = ~missing & ~cleaned.isin(("0", "1"))
    if bad.any():
        row = int(bad.idxmax()) + 2
        raise MalformedInput(
            f"column {name!r} must be 0 or 1, got {cleaned[bad.idxmax()]!r} at line {row}"
        )
    out = np.where(missing, np.nan, cleaned.where(~missing, "0").astype(float))
    return out.astype(float)


def load_dataset(
    source: Union[str, Path, IO[str]],
    test_col: str = "T",
    disease_col: str = "D",
    covariate_cols: Union[str, Sequence[str], None] = None,
) -> Dataset:
    """Reads a comma-delimited file with a header row into a Dataset.

    D may be empty, "NA" or "na" (any case) for unverified patients.
    Covariates must be numeric.
    """
    covariate_cols = as_name_tuple(covariate_cols)
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as e:
        raise EmptyDataset(f"no data in input: {e}") from e
    except pd.errors.ParserError as e:
        raise MalformedInput(f"ragged or unparsable input: {e}") from e

    if len(frame) == 0:
        raise EmptyDataset("input has a header but no records")
    if not isinstance(frame.index, pd.RangeIndex) or frame.isna().any().any():
        raise MalformedInput("ragged rows: field count differs from the header")

    frame.columns = [str(c).strip() for c in frame.columns]
    for col in (test_col, disease_col, *covariate_cols):
        if col not in frame.columns:
            raise MalformedInput(f"unknown column {col!r}; header has {list(frame.columns)}")

    t = _binary_column(frame[test_col], test_col, allow_missing=False)
    d = _binary_column(frame[disease_col], disease_col, allow_missing=True)

    x_cols = []
    for col in covariate_cols:
        try:
            x_cols.append(pd.to_numeric(frame[col].str.strip(), errors="raise").to_numpy(float))
        except (ValueError, TypeError) as e:
            raise MalformedInput(f"covariate {col!r} must be numeric: {e}") from e
    x = np.column_stack(x_cols) if x_cols else None

    data = Dataset(t, d, x, covariate_cols)
    log(f"Loaded {data.n} records ({data.n_unverified} unverified)")
    return data


def dump_dataset(
    data: Dataset,
    target: Union[str, Path, IO[str]],
    test_col: str = "T",
    disease_col: str = "D",
) -> None:
    """Writes a Dataset as CSV; unverified D is written as NA."""
    data.to_frame(test_col, disease_col).to_csv(target, index=False, na_rep="NA")


def load_cad_spect(covariates: Union[str, Sequence[str], None] = ("X3",)) -> Dataset:
    """The bundled SPECT/CAD example (2688 patients, 2217 unverified)."""
    return load_dataset(CAD_SPECT_PATH, covariate_cols=covariates)


# ============================================================================
# SUMMARIES
# ============================================================================

def cross_table(data: Dataset) -> VerificationTable:
    t = data.t == 1
    verified = data.verified
    d1 = verified & (data.d == 1)
    d0 = verified & (data.d == 0)
    return VerificationTable(
        s1=int(np.sum(t & d1)),
        s0=int(np.sum(~t & d1)),
        r1=int(np.sum(t & d0)),
        r0=int(np.sum(~t & d0)),
        u1=int(np.sum(t & ~verified)),
        u0=int(np.sum(~t & ~verified)),
    )


def missing_percentage(data: Dataset) -> float:
    if data.n == 0:
        raise EmptyDataset("missing percentage of an empty dataset")
    return 100.0 * data.n_unverified / data.n
