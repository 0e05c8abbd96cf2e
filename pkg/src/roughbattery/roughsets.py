"""Rough-set feature reduction.

Indiscernibility partitions, lower/upper approximations, the approximation
accuracy, the dependency degree of a decision on a set of conditional
attributes, attribute significance, and a greedy reduct search.

Objects are identified by their position in the universe; block ordering and
every tie-break are deterministic so repeated runs select identical
attributes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Approximation",
    "Definability",
    "InformationTable",
    "Partition",
    "ReductResult",
    "RoughSetError",
    "approximations",
    "attribute_significance",
    "dependency_degree",
    "indiscernibility_partition",
    "quick_reduct",
    "significance_filter",
]


class RoughSetError(ValueError):
    pass


def _factorize(values: Sequence[Hashable]) -> np.ndarray:
    # codes in order of first appearance; labels only need equality
    lookup: dict[Hashable, int] = {}
    return np.fromiter(
        (lookup.setdefault(v, len(lookup)) for v in values), dtype=np.int64, count=len(values)
    )


@dataclass(frozen=True)
class InformationTable:
    """Universe of objects described by discrete conditional attributes and one decision.

    ``values`` holds the raw labels row by row, decision last. ``codes`` is the
    same matrix with every column factorized to integers.
    """

    objects: tuple[str, ...]
    attributes: tuple[str, ...]
    decision: str
    values: tuple[tuple[Hashable, ...], ...]
    codes: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def from_columns(
        cls,
        columns: Mapping[str, Sequence[Hashable]],
        decision: str,
        objects: Sequence[str] | None = None,
    ) -> "InformationTable":
        if decision not in columns:
            raise RoughSetError(f"decision attribute {decision!r} not among columns")
        attributes = tuple(name for name in columns if name != decision)
        lengths = {len(col) for col in columns.values()}
        if len(lengths) > 1:
            raise RoughSetError("columns have different lengths")
        n = lengths.pop() if lengths else 0
        if objects is None:
            objects = [f"o{i + 1}" for i in range(n)]
        if len(objects) != n:
            raise RoughSetError("object id count does not match column length")
        if len(set(objects)) != n:
            raise RoughSetError("object ids must be unique")
        order = [*attributes, decision]
        values = tuple(tuple(columns[name][i] for name in order) for i in range(n))
        codes = np.empty((n, len(order)), dtype=np.int64)
        for j, name in enumerate(order):
            codes[:, j] = _factorize(list(columns[name]))
        codes.setflags(write=False)
        return cls(tuple(objects), attributes, decision, values, codes)

    @classmethod
    def from_table(cls, table, decision: str) -> "InformationTable":
        """Build from a discretized :class:`~roughbattery.tabular.DataTable`."""
        cols = {name: table.column(name).tolist() for name in table.names}
        return cls.from_columns(cols, decision)

    @property
    def universe(self) -> frozenset[str]:
        return frozenset(self.objects)

    def __len__(self) -> int:
        return len(self.objects)

    def column_index(self, attr: str) -> int:
        if attr == self.decision:
            return len(self.attributes)
        try:
            return self.attributes.index(attr)
        except ValueError:
            raise RoughSetError(f"unknown attribute {attr!r}") from None

    def permuted(self, order: Sequence[int]) -> "InformationTable":
        cols = {
            name: [self.values[i][j] for i in order]
            for j, name in enumerate([*self.attributes, self.decision])
        }
        return InformationTable.from_columns(cols, self.decision, [self.objects[i] for i in order])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["object", *self.attributes, self.decision])
            for obj, row in zip(self.objects, self.values):
                writer.writerow([obj, *row])

    @classmethod
    def read_csv(cls, path: str | Path) -> "InformationTable":
        """Read a table written by :meth:`to_csv`; the last column is the decision."""
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise RoughSetError(f"{path}: empty file")
        header, body = rows[0], rows[1:]
        has_ids = header[0] == "object"
        names = header[1:] if has_ids else header
        for lineno, row in enumerate(body, start=2):
            if len(row) != len(header):
                raise RoughSetError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        offset = 1 if has_ids else 0
        cols = {name: [row[j + offset] for row in body] for j, name in enumerate(names)}
        objects = [row[0] for row in body] if has_ids else None
        return cls.from_columns(cols, names[-1], objects)


@dataclass(frozen=True)
class Partition:
    """Equivalence classes of the universe, ordered by their first object."""

    blocks: tuple[frozenset[str], ...]

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)


class Definability(str, Enum):
    ROUGHLY_DEFINABLE = "roughly-definable"
    INTERNALLY_UNDEFINABLE = "internally-undefinable"
    EXTERNALLY_UNDEFINABLE = "externally-undefinable"
    TOTALLY_UNDEFINABLE = "totally-undefinable"


@dataclass(frozen=True)
class Approximation:
    lower: frozenset[str]
    upper: frozenset[str]
    accuracy: float
    definability: Definability


@dataclass(frozen=True)
class ReductResult:
    selected: tuple[str, ...]
    gamma_trace: tuple[tuple[str, float], ...]
    gamma_full: float
    gamma_selected: float

    def to_dict(self) -> dict:
        return {
            "gamma_full": self.gamma_full,
            "gamma_selected": self.gamma_selected,
            "gamma_trace": [{"attribute": a, "gamma": g} for a, g in self.gamma_trace],
            "selected": list(self.selected),
        }

    def to_json(self, **extra) -> str:
        doc = self.to_dict()
        doc.update(extra)
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ReductResult":
        return cls(
            selected=tuple(doc["selected"]),
            gamma_trace=tuple((t["attribute"], float(t["gamma"])) for t in doc["gamma_trace"]),
            gamma_full=float(doc["gamma_full"]),
            gamma_selected=float(doc["gamma_selected"]),
        )


def _columns(it: InformationTable, attrs: Iterable[str]) -> list[int]:
    return [it.column_index(a) for a in attrs]


def _block_ids(it: InformationTable, attrs: Iterable[str]) -> np.ndarray:
    """Block index per object; blocks numbered in order of first appearance."""
    cols = _columns(it, attrs)
    n = len(it)
    if not cols or n == 0:
        return np.zeros(n, dtype=np.int64)
    _, first, inverse = np.unique(
        it.codes[:, cols], axis=0, return_index=True, return_inverse=True
    )
    inverse = inverse.reshape(-1)
    # renumber so block k is the k-th block met when scanning objects in order
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inverse]


def indiscernibility_partition(it: InformationTable, attrs: Iterable[str]) -> Partition:
    """Group objects that agree on every attribute in ``attrs``.

    An empty attribute set yields the single block U. Blocks are ordered by
    the position of their earliest object in the universe.
    """
    ids = _block_ids(it, list(attrs))
    if len(it) == 0:
        return Partition(())
    blocks: list[set[str]] = [set() for _ in range(int(ids.max()) + 1)]
    for obj, b in zip(it.objects, ids):
        blocks[b].add(obj)
    return Partition(tuple(frozenset(b) for b in blocks))


def approximations(
    it: InformationTable, attrs: Iterable[str], target: Iterable[str]
) -> Approximation:
    target = frozenset(target)
    unknown = target - it.universe
    if unknown:
        raise RoughSetError(f"target contains unknown objects: {sorted(unknown)}")
    lower: set[str] = set()
    upper: set[str] = set()
    for block in indiscernibility_partition(it, attrs):
        if block <= target:
            lower |= block
        if block & target:
            upper |= block
    lower_f, upper_f = frozenset(lower), frozenset(upper)
    # empty target: both approximations empty, accuracy taken as 1
    accuracy = len(lower_f) / len(upper_f) if upper_f else 1.0
    whole = upper_f == it.universe
    if lower_f:
        kind = Definability.EXTERNALLY_UNDEFINABLE if whole else Definability.ROUGHLY_DEFINABLE
    else:
        kind = Definability.TOTALLY_UNDEFINABLE if whole else Definability.INTERNALLY_UNDEFINABLE
    return Approximation(lower_f, upper_f, accuracy, kind)


def _positive_count(it: InformationTable, attrs: Sequence[str]) -> int:
    """Size of the positive region: objects in decision-pure blocks of ``attrs``."""
    ids = _block_ids(it, attrs)
    dec = it.codes[:, -1]
    n_blocks = int(ids.max()) + 1
    lo = np.full(n_blocks, np.iinfo(np.int64).max)
    hi = np.full(n_blocks, np.iinfo(np.int64).min)
    np.minimum.at(lo, ids, dec)
    np.maximum.at(hi, ids, dec)
    pure = lo == hi
    return int(pure[ids].sum())


def dependency_degree(it: InformationTable, attrs: Iterable[str]) -> float:
    """Fraction of objects whose decision class is fixed by ``attrs``.

    Equals the summed sizes of the lower approximations of every decision
    class, divided by |U|.
    """
    if len(it) == 0:
        raise RoughSetError("dependency degree of an empty universe is undefined")
    attrs = list(attrs)
    if it.decision in attrs:
        raise RoughSetError("decision attribute cannot condition itself")
    return _positive_count(it, attrs) / len(it)


def attribute_significance(it: InformationTable, base: Iterable[str], a: str) -> float:
    """Gain in dependency degree from adding ``a`` to ``base``."""
    base = list(base)
    if a in base:
        raise RoughSetError(f"attribute {a!r} already in base set")
    it.column_index(a)
    return dependency_degree(it, [*base, a]) - dependency_degree(it, base)


def quick_reduct(it: InformationTable) -> ReductResult:
    """Greedy forward selection on dependency degree, then backward pruning.

    Each round adds the attribute with the highest resulting degree (ties go
    to the lexicographically smallest name) until the degree of the full
    attribute set is reached. A round where no candidate raises the degree
    still adds the best one, since single attributes often leave every block
    impure while their combination does not. The backward pass walks
    the selection in reverse insertion order and drops every attribute whose
    removal leaves the degree unchanged.
    """
    if not it.attributes:
        raise RoughSetError("reduct search needs at least one conditional attribute")
    n = len(it)
    full = _positive_count(it, it.attributes)
    selected: list[str] = []
    trace: list[tuple[str, float]] = []
    current = _positive_count(it, [])
    candidates = sorted(it.attributes)
    while current < full:
        best, best_count = None, -1
        for a in candidates:
            if a in selected:
                continue
            count = _positive_count(it, [*selected, a])
            if count > best_count:
                best, best_count = a, count
        selected.append(best)
        current = best_count
        trace.append((best, current / n))

    for a in reversed(list(selected)):
        rest = [s for s in selected if s != a]
        if _positive_count(it, rest) == current:
            selected = rest

    return ReductResult(
        selected=tuple(selected),
        gamma_trace=tuple(trace),
        gamma_full=full / n,
        gamma_selected=current / n,
    )


def significance_filter(it: InformationTable, threshold: float = 0.0) -> tuple[str, ...]:
    """Attributes whose removal from the full set costs more than ``threshold``.

    The reduct is always included, so the result preserves the full
    dependency degree. Returned in the table's attribute order.
    """
    if threshold < 0:
        raise RoughSetError("threshold must be non-negative")
    n = len(it)
    full = _positive_count(it, it.attributes)
    keep = set(quick_reduct(it).selected)
    for a in it.attributes:
        rest = [b for b in it.attributes if b != a]
        if (full - _positive_count(it, rest)) / n > threshold:
            keep.add(a)
    return tuple(a for a in it.attributes if a in keep)
