"""Balanced panel datasets: construction, CSV ingestion and stacking."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import (
    DuplicateRow,
    MissingCell,
    NonNumericValue,
    TooSmall,
    UnknownSample,
    UnknownVariable,
    UsageError,
)

SAMPLES = {
    "romania_broadband": ("romania_broadband.csv", {"broadband": "% of households"}),
    "romania_ecommerce": ("romania_ecommerce.csv", {"ecommerce": "% of individuals"}),
}


def _period_sort_key(labels: Iterable[str]):
    labels = list(labels)
    try:
        numeric = {lab: float(lab) for lab in labels}
    except ValueError:
        return sorted(labels)
    return sorted(labels, key=lambda lab: numeric[lab])


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PanelDataset:
    """Balanced entity x period table of named numeric variables.

    Each variable is stored as an ``(n_entities, n_periods)`` read-only
    array. Construction validates balance, label uniqueness and size.
    """

    entities: tuple
    periods: tuple
    variables: Mapping[str, np.ndarray]
    units: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        entities = tuple(str(e) for e in self.entities)
        periods = tuple(str(p) for p in self.periods)
        if len(set(entities)) != len(entities):
            raise DuplicateRow("entity labels must be unique")
        if len(set(periods)) != len(periods):
            raise DuplicateRow("period labels must be unique")
        if len(entities) < 2 or len(periods) < 2:
            raise TooSmall(
                f"panel needs at least 2 entities and 2 periods, "
                f"got {len(entities)} x {len(periods)}"
            )
        if list(periods) != _period_sort_key(periods):
            raise UsageError("period labels must be in ascending order")
        if not self.variables:
            raise UsageError("panel has no variables")
        frozen = {}
        for name, values in self.variables.items():
            arr = _frozen(values)
            if arr.shape != (len(entities), len(periods)):
                raise MissingCell(
                    f"variable {name!r} has shape {arr.shape}, "
                    f"expected {(len(entities), len(periods))}"
                )
            if not np.all(np.isfinite(arr)):
                raise NonNumericValue(f"variable {name!r} contains non-finite values")
            frozen[str(name)] = arr
        object.__setattr__(self, "entities", entities)
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "variables", MappingProxyType(frozen))
        object.__setattr__(self, "units", MappingProxyType(dict(self.units)))

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_periods(self) -> int:
        return len(self.periods)

    @property
    def n_obs(self) -> int:
        return self.n_entities * self.n_periods

    def __getitem__(self, key):
        """``ds["var"]`` gives the matrix; ``ds["var", entity, period]`` a cell."""
        if isinstance(key, tuple):
            name, entity, period = key
            self._check_names([name])
            i = self.entities.index(str(entity))
            t = self.periods.index(str(period))
            return float(self.variables[name][i, t])
        self._check_names([key])
        return self.variables[key]

    def _check_names(self, names):
        missing = [n for n in names if n not in self.variables]
        if missing:
            raise UnknownVariable(
                f"unknown variable(s) {', '.join(missing)}; "
                f"available: {', '.join(self.variables)}"
            )

    def merge(self, other: "PanelDataset") -> "PanelDataset":
        """Combine variables of two panels over their shared periods."""
        if set(self.entities) != set(other.entities):
            raise UsageError("cannot merge panels with different entities")
        common = [p for p in self.periods if p in other.periods]
        clash = set(self.variables) & set(other.variables)
        if clash:
            raise UsageError(f"variables present in both panels: {sorted(clash)}")
        cols_a = [self.periods.index(p) for p in common]
        cols_b = [other.periods.index(p) for p in common]
        rows_b = [other.entities.index(e) for e in self.entities]
        variables = {n: v[:, cols_a] for n, v in self.variables.items()}
        variables.update({n: v[np.ix_(rows_b, cols_b)] for n, v in other.variables.items()})
        return PanelDataset(self.entities, tuple(common), variables, {**self.units, **other.units})


@dataclass(frozen=True)
class VariableSelection:
    dependent: str
    regressors: tuple

    def __post_init__(self):
        regressors = (self.regressors,) if isinstance(self.regressors, str) else tuple(self.regressors)
        object.__setattr__(self, "regressors", regressors)
        if not regressors:
            raise UsageError("at least one regressor is required")
        if self.dependent in regressors:
            raise UsageError(f"dependent variable {self.dependent!r} also listed as a regressor")
        if len(set(regressors)) != len(regressors):
            raise UsageError("regressors must be distinct")

    def validate(self, dataset: PanelDataset) -> None:
        dataset._check_names([self.dependent, *self.regressors])


def stack(dataset: PanelDataset, sel: VariableSelection, add_constant: bool = False,
          constant_position: str = "first"):
    """Stack a panel into regression arrays.

    Rows are ordered entity-major, periods ascending within each entity.

    Parameters
    ----------
    dataset : PanelDataset
    sel : VariableSelection
    add_constant : bool
        Append a column of ones to ``X``.
    constant_position : {"first", "last"}
        Where the constant column goes when ``add_constant`` is set.

    Returns
    -------
    y : ndarray, shape (N*T,)
    X : ndarray, shape (N*T, k)
    index : list of (entity, period) tuples aligned with the rows
    """
    sel.validate(dataset)
    y = np.asarray(dataset.variables[sel.dependent]).reshape(-1).copy()
    cols = [np.asarray(dataset.variables[r]).reshape(-1) for r in sel.regressors]
    if add_constant:
        ones = np.ones(dataset.n_obs)
        if constant_position == "first":
            cols.insert(0, ones)
        elif constant_position == "last":
            cols.append(ones)
        else:
            raise UsageError(f"constant_position must be 'first' or 'last', got {constant_position!r}")
    X = np.column_stack(cols)
    index = [(e, p) for e in dataset.entities for p in dataset.periods]
    return y, X, index


def unstack(values, dataset: PanelDataset) -> np.ndarray:
    """Inverse of the stacking order: vector of length N*T -> (N, T) matrix."""
    return np.asarray(values, dtype=float).reshape(dataset.n_entities, dataset.n_periods)


def _parse_float(text, row, column):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise NonNumericValue(f"row {row}, column {column!r}: {text!r} is not a number") from None
    if not math.isfinite(value):
        raise NonNumericValue(f"row {row}, column {column!r}: {text!r} is not finite")
    return value


def load_long_csv(path, entity_col: str = "entity", time_col: str = "period",
                  units: Mapping[str, str] | None = None) -> PanelDataset:
    """Read a long-format CSV (one row per entity/period pair) into a panel."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise TooSmall(f"{path}: file is empty") from None
        for col in (entity_col, time_col):
            if col not in header:
                raise UsageError(f"{path}: column {col!r} not in header {header}")
        ie, it = header.index(entity_col), header.index(time_col)
        var_cols = [(j, h) for j, h in enumerate(header) if j not in (ie, it)]
        if not var_cols:
            raise UsageError(f"{path}: no value columns besides {entity_col!r} and {time_col!r}")

        cells = {}
        entities = []
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise NonNumericValue(f"{path}: row {rownum} has {len(row)} fields, expected {len(header)}")
            e, t = row[ie].strip(), row[it].strip()
            if (e, t) in cells:
                raise DuplicateRow(f"{path}: duplicate row for entity {e!r}, period {t!r} (row {rownum})")
            cells[(e, t)] = [_parse_float(row[j].strip(), rownum, h) for j, h in var_cols]
            if e not in entities:
                entities.append(e)

    periods = _period_sort_key({t for _, t in cells})
    if len(entities) < 2 or len(periods) < 2:
        raise TooSmall(
            f"{path}: panel needs at least 2 entities and 2 periods, "
            f"got {len(entities)} x {len(periods)}"
        )
    data = np.empty((len(var_cols), len(entities), len(periods)))
    for i, e in enumerate(entities):
        for t_idx, t in enumerate(periods):
            try:
                data[:, i, t_idx] = cells[(e, t)]
            except KeyError:
                raise MissingCell(f"{path}: no row for entity {e!r}, period {t!r}") from None
    variables = {h: data[v] for v, (_, h) in enumerate(var_cols)}
    return PanelDataset(tuple(entities), tuple(periods), variables, units or {})


def load_wide_csv(path, varname: str, units: str | None = None) -> PanelDataset:
    """Read a wide CSV: first column entity labels, remaining columns periods."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise TooSmall(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    periods = header[1:]
    if len(set(periods)) != len(periods):
        raise DuplicateRow(f"{path}: duplicate period columns")
    order = _period_sort_key(periods)
    perm = [periods.index(p) for p in order]
    entities, values = [], []
    for rownum, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise MissingCell(f"{path}: row {rownum} has {len(row)} fields, expected {len(header)}")
        e = row[0].strip()
        if e in entities:
            raise DuplicateRow(f"{path}: duplicate entity {e!r} (row {rownum})")
        entities.append(e)
        parsed = []
        for j, p in enumerate(periods, start=1):
            if not row[j].strip():
                raise MissingCell(f"{path}: no value for entity {e!r}, period {p!r}")
            parsed.append(_parse_float(row[j].strip(), rownum, p))
        values.append([parsed[k] for k in perm])
    if len(entities) < 2 or len(periods) < 2:
        raise TooSmall(f"{path}: panel needs at least 2 entities and 2 periods")
    return PanelDataset(tuple(entities), tuple(order), {varname: np.array(values)},
                        {varname: units} if units else {})


def write_long_csv(dataset: PanelDataset, path, entity_col: str = "entity",
                   time_col: str = "period") -> None:
    """Write a panel in long format (to a path or text stream) with values
    at 17 significant digits."""
    if hasattr(path, "write"):
        _write_long(dataset, path, entity_col, time_col)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_long(dataset, fh, entity_col, time_col)


def _write_long(dataset, fh, entity_col, time_col):
    names = list(dataset.variables)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow([entity_col, time_col, *names])
    for i, e in enumerate(dataset.entities):
        for t, p in enumerate(dataset.periods):
            writer.writerow([e, p, *(format(float(dataset.variables[n][i, t]), ".17g") for n in names)])


def embedded_sample(name: str) -> PanelDataset:
    """Return one of the bundled regional tables (published years only)."""
    if name not in SAMPLES:
        raise UnknownSample(f"unknown sample {name!r}; available: {', '.join(SAMPLES)}")
    fname, units = SAMPLES[name]
    with resources.as_file(resources.files("panelkit") / "data" / fname) as p:
        return load_long_csv(Path(p), units=units)


def load_table_csv(path, columns: Sequence[str] | None = None):
    """Read a cross-sectional CSV into ``(names, matrix)``.

    Without ``columns``, every column whose cells all parse as numbers is
    kept and the rest (identifiers, labels) are skipped.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise TooSmall(f"{path}: need a header and at least one data row")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if columns is None:
        keep = []
        for j, h in enumerate(header):
            try:
                [float(r[j]) for r in body]
            except (ValueError, IndexError):
                continue
            keep.append(h)
    else:
        missing = [c for c in columns if c not in header]
        if missing:
            raise UnknownVariable(
                f"unknown variable(s) {', '.join(missing)}; available: {', '.join(header)}"
            )
        keep = list(columns)
    idx = [header.index(c) for c in keep]
    matrix = np.array(
        [[_parse_float(r[j].strip() if j < len(r) else "", rownum, header[j]) for j in idx]
         for rownum, r in enumerate(body, start=2)]
    )
    return keep, matrix
