"""Region x year panel container and the transformations applied before estimation.

A :class:`PanelDataset` is a long-format table: one row per (entity, year)
pair and one float column per variable.  Instances are immutable; every
operation returns a new dataset and leaves its input untouched.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .errors import (
    DuplicateObservation,
    EmptySubset,
    NonPositiveValue,
    ParseError,
    SchemaError,
    UnknownVariable,
)

__all__ = [
    "PanelDataset",
    "BalanceReport",
    "ColumnRoles",
    "ZeroPolicy",
    "load_panel",
    "dump_panel",
    "log_transform",
    "subset_period",
    "balance_check",
    "log_name",
]


class ZeroPolicy(str, Enum):
    ERROR = "error"
    DROP = "drop"


def log_name(variable: str) -> str:
    return f"ln_{variable}"


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PanelDataset:
    """Immutable long-format panel.

    Rows are ordered by entity (in ``entities`` order) and then by year.
    ``dropped`` lists the (entity, year) pairs removed by earlier
    transformations so run reports can show them.
    """

    entities: tuple[str, ...]
    row_entities: tuple[str, ...]
    row_years: tuple[int, ...]
    columns: Mapping[str, np.ndarray]
    entity_name: str = "region"
    year_name: str = "year"
    dropped: tuple[tuple[str, int], ...] = field(default=())

    def __post_init__(self):
        n = len(self.row_entities)
        if len(self.row_years) != n:
            raise ValueError("row_entities and row_years differ in length")
        cols = {}
        for name, values in self.columns.items():
            arr = values if (isinstance(values, np.ndarray) and not values.flags.writeable
                             and values.dtype == float) else _frozen(values)
            if arr.ndim != 1 or arr.shape[0] != n:
                raise ValueError(f"column {name!r} has length {arr.shape} but panel has {n} rows")
            cols[name] = arr
        object.__setattr__(self, "columns", MappingProxyType(cols))

        position = {e: i for i, e in enumerate(self.entities)}
        if len(position) != len(self.entities):
            raise ValueError("entity identifiers must be unique")
        last = (-1, None)
        for e, y in zip(self.row_entities, self.row_years):
            if e not in position:
                raise ValueError(f"row entity {e!r} not in entity list")
            key = (position[e], y)
            if key == last:
                raise DuplicateObservation(f"duplicate observation ({e}, {y})")
            if last[1] is not None and key < last:
                raise ValueError("rows must be sorted by entity then strictly increasing year")
            last = key

    # structure ---------------------------------------------------------

    @property
    def n_rows(self) -> int:
        return len(self.row_years)

    def __len__(self) -> int:
        return self.n_rows

    @cached_property
    def periods(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.row_years)))

    @cached_property
    def index(self) -> Mapping[tuple[str, int], int]:
        return MappingProxyType(
            {(e, y): i for i, (e, y) in enumerate(zip(self.row_entities, self.row_years))}
        )

    @cached_property
    def entity_codes(self) -> np.ndarray:
        """Integer position of each row's entity in ``entities``."""
        position = {e: i for i, e in enumerate(self.entities)}
        codes = np.array([position[e] for e in self.row_entities], dtype=int)
        codes.setflags(write=False)
        return codes

    @cached_property
    def years(self) -> np.ndarray:
        arr = np.array(self.row_years, dtype=int)
        arr.setflags(write=False)
        return arr

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(self.columns)

    @property
    def is_balanced(self) -> bool:
        return self.n_rows == len(self.entities) * len(self.periods)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise UnknownVariable(f"unknown variable {name!r}") from None

    # construction helpers ---------------------------------------------

    @classmethod
    def from_records(
        cls,
        records: Iterable[tuple[str, int, Mapping[str, float]]],
        *,
        entity_name: str = "region",
        year_name: str = "year",
        variables: Sequence[str] | None = None,
    ) -> "PanelDataset":
        """Build a dataset from ``(entity, year, {variable: value})`` records.

        Entity order follows first appearance; rows are sorted by
        (entity, year).  Missing variables in a record become NaN.
        """
        records = list(records)
        entities: list[str] = []
        seen_entities = set()
        seen_pairs = set()
        for e, y, _ in records:
            if (e, y) in seen_pairs:
                raise DuplicateObservation(f"duplicate observation ({e}, {y})")
            seen_pairs.add((e, y))
            if e not in seen_entities:
                seen_entities.add(e)
                entities.append(e)
        if variables is None:
            names: list[str] = []
            for _, _, values in records:
                for name in values:
                    if name not in names:
                        names.append(name)
        else:
            names = list(variables)
        position = {e: i for i, e in enumerate(entities)}
        order = sorted(range(len(records)), key=lambda i: (position[records[i][0]], records[i][1]))
        cols = {
            name: [float(records[i][2].get(name, math.nan)) for i in order] for name in names
        }
        return cls(
            entities=tuple(entities),
            row_entities=tuple(records[i][0] for i in order),
            row_years=tuple(int(records[i][1]) for i in order),
            columns=cols,
            entity_name=entity_name,
            year_name=year_name,
        )

    def take(self, rows: np.ndarray | Sequence[int], *, dropped=()) -> "PanelDataset":
        """New dataset restricted to ``rows`` (positions, kept in order)."""
        rows = np.asarray(rows, dtype=int)
        row_entities = tuple(self.row_entities[i] for i in rows)
        present = set(row_entities)
        return PanelDataset(
            entities=tuple(e for e in self.entities if e in present),
            row_entities=row_entities,
            row_years=tuple(self.row_years[i] for i in rows),
            columns={k: v[rows] for k, v in self.columns.items()},
            entity_name=self.entity_name,
            year_name=self.year_name,
            dropped=self.dropped + tuple(dropped),
        )

    def with_columns(self, new: Mapping[str, np.ndarray]) -> "PanelDataset":
        cols = dict(self.columns)
        cols.update(new)
        return PanelDataset(
            entities=self.entities,
            row_entities=self.row_entities,
            row_years=self.row_years,
            columns=cols,
            entity_name=self.entity_name,
            year_name=self.year_name,
            dropped=self.dropped,
        )

    def equals(self, other: "PanelDataset") -> bool:
        """Structural equality; NaN cells compare equal to NaN."""
        if not isinstance(other, PanelDataset):
            return False
        if (self.entities, self.row_entities, self.row_years, tuple(self.columns)) != (
            other.entities, other.row_entities, other.row_years, tuple(other.columns)
        ):
            return False
        return all(
            np.array_equal(self.columns[k], other.columns[k], equal_nan=True) for k in self.columns
        )

    __eq__ = equals
    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return (
            f"PanelDataset(entities={len(self.entities)}, periods={len(self.periods)}, "
            f"rows={self.n_rows}, variables={list(self.columns)})"
        )


@dataclass(frozen=True)
class BalanceReport:
    balanced: bool
    missing_pairs: tuple[tuple[str, int], ...]
    per_entity_span: Mapping[str, tuple[int, int, int]]
    incomplete_rows: tuple[tuple[str, int], ...] = ()


@dataclass(frozen=True)
class ColumnRoles:
    """Which header columns hold the entity and year keys.

    ``None`` selects the first (entity) or second (year) header column.
    ``variables=None`` keeps every remaining column.
    """

    entity: str | None = None
    year: str | None = None
    variables: tuple[str, ...] | None = None


def _open_source(source) -> tuple[TextIO, bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8"), True
    return source, False


def load_panel(source, schema: ColumnRoles | None = None) -> PanelDataset:
    """Read a comma-separated long-format panel.

    ``source`` is a path or an open text stream.  Blank cells are missing
    observations (NaN); any other non-numeric cell raises
    :class:`ParseError` with the 1-based file line and the column name.
    """
    schema = schema or ColumnRoles()
    stream, owned = _open_source(source)
    try:
        reader = csv.reader(stream)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError("input has no header row") from None
        if header and header[0].startswith("﻿"):
            header[0] = header[0][1:]
        if len(set(header)) != len(header):
            raise SchemaError(f"duplicate header names in {header}")

        entity_col = schema.entity if schema.entity is not None else (header[0] if header else None)
        year_col = schema.year if schema.year is not None else (header[1] if len(header) > 1 else None)
        for role, name in (("entity", entity_col), ("year", year_col)):
            if name is None or name not in header:
                raise SchemaError(f"designated {role} column {name!r} not found in header {header}")
        if entity_col == year_col:
            raise SchemaError("entity and year columns must differ")
        rest = [h for h in header if h not in (entity_col, year_col)]
        if schema.variables is None:
            variables = rest
        else:
            for name in schema.variables:
                if name not in rest:
                    raise SchemaError(f"designated variable column {name!r} not found")
            variables = list(schema.variables)
        ei, yi = header.index(entity_col), header.index(year_col)
        vi = [header.index(v) for v in variables]

        records = []
        seen = {}
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, found {len(row)}", row=line_no)
            entity = row[ei].strip()
            if not entity:
                raise ParseError("empty entity identifier", row=line_no, column=entity_col)
            try:
                year = int(row[yi].strip())
            except ValueError:
                raise ParseError(f"year {row[yi]!r} is not an integer", row=line_no,
                                 column=year_col) from None
            if (entity, year) in seen:
                raise DuplicateObservation(
                    f"duplicate observation ({entity}, {year}) on lines {seen[(entity, year)]} and {line_no}"
                )
            seen[(entity, year)] = line_no
            values = {}
            for name, j in zip(variables, vi):
                cell = row[j].strip()
                if not cell:
                    values[name] = math.nan
                    continue
                try:
                    values[name] = float(cell)
                except ValueError:
                    raise ParseError(f"non-numeric value {cell!r}", row=line_no, column=name) from None
                if not math.isfinite(values[name]):
                    raise ParseError(f"non-finite value {cell!r}", row=line_no, column=name)
            records.append((entity, year, values))
    finally:
        if owned:
            stream.close()
    return PanelDataset.from_records(
        records, entity_name=entity_col, year_name=year_col, variables=variables
    )


def _fmt(value: float) -> str:
    return "" if math.isnan(value) else repr(float(value))


def dump_panel(ds: PanelDataset, target=None) -> str | None:
    """Write ``ds`` in the format :func:`load_panel` reads.

    Floats are written with ``repr`` so a reload is bit-identical.  With
    ``target=None`` the CSV text is returned.
    """
    buf = io.StringIO() if target is None else None
    stream, owned = (buf, False) if buf is not None else _open_source_w(target)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow([ds.entity_name, ds.year_name, *ds.columns])
        cols = list(ds.columns.values())
        for i, (e, y) in enumerate(zip(ds.row_entities, ds.row_years)):
            writer.writerow([e, y, *(_fmt(c[i]) for c in cols)])
    finally:
        if owned:
            stream.close()
    return buf.getvalue() if buf is not None else None


def _open_source_w(target):
    if isinstance(target, (str, os.PathLike)):
        return open(target, "w", newline="", encoding="utf-8"), True
    return target, False


def log_transform(
    ds: PanelDataset,
    variables: Sequence[str],
    zero_policy: ZeroPolicy | str = ZeroPolicy.ERROR,
) -> PanelDataset:
    """Add ``ln_<name>`` columns holding natural logs of the named levels.

    Under ``ZeroPolicy.DROP`` rows where any selected level is <= 0 are
    removed and appended to ``dropped``.  Missing cells stay missing.
    """
    policy = ZeroPolicy(zero_policy)
    levels = {v: ds.column(v) for v in variables}
    bad = np.zeros(ds.n_rows, dtype=bool)
    for name, arr in levels.items():
        with np.errstate(invalid="ignore"):
            nonpos = arr <= 0
        if nonpos.any() and policy is ZeroPolicy.ERROR:
            i = int(np.flatnonzero(nonpos)[0])
            raise NonPositiveValue(
                f"{name} = {arr[i]!r} at ({ds.row_entities[i]}, {ds.row_years[i]}) cannot be logged"
            )
        bad |= nonpos
    with np.errstate(divide="ignore", invalid="ignore"):
        logged = {log_name(name): np.log(arr) for name, arr in levels.items()}
    out = ds.with_columns(logged)
    if bad.any():
        dropped = [(ds.row_entities[i], ds.row_years[i]) for i in np.flatnonzero(bad)]
        out = out.take(np.flatnonzero(~bad), dropped=dropped)
    return out


def subset_period(ds: PanelDataset, start_year: int, end_year: int) -> PanelDataset:
    if start_year > end_year:
        raise ValueError(f"start_year {start_year} is after end_year {end_year}")
    years = ds.years
    keep = np.flatnonzero((years >= start_year) & (years <= end_year))
    if keep.size == 0:
        raise EmptySubset(f"no observations between {start_year} and {end_year}")
    return ds.take(keep)


def balance_check(ds: PanelDataset) -> BalanceReport:
    periods = ds.periods
    present = set(ds.index)
    missing = tuple((e, y) for e in ds.entities for y in periods if (e, y) not in present)
    span = {}
    for e in ds.entities:
        ys = [y for ent, y in zip(ds.row_entities, ds.row_years) if ent == e]
        span[e] = (ys[0], ys[-1], len(ys))
    if ds.columns and ds.n_rows:
        block = np.column_stack(list(ds.columns.values()))
        holes = np.flatnonzero(np.isnan(block).any(axis=1))
    else:
        holes = ()
    incomplete = tuple((ds.row_entities[i], ds.row_years[i]) for i in holes)
    return BalanceReport(
        balanced=not missing,
        missing_pairs=missing,
        per_entity_span=MappingProxyType(span),
        incomplete_rows=incomplete,
    )
