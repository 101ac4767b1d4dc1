"""
Replicated accuracy observations: CSV ingest, aggregation and weight vectors.

CSV schema (UTF-8, comma separated, header required)::

    size,accuracy[,class][,repetition]

``size`` is a positive integer training-set size per class, ``accuracy`` a
decimal percent in [0, 100], ``class`` an optional label and ``repetition`` an
optional positive integer.
"""

import csv
import io
import logging
import math
import statistics
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from curvecast.exceptions import ContractError, ObservationParseError

logger = logging.getLogger(__name__)

AVERAGE_TOTAL = "AverageTotal"

REQUIRED_COLUMNS = ("size", "accuracy")
OPTIONAL_COLUMNS = ("class", "repetition")


@dataclass(frozen=True)
class ObservationGroup:
    """Replicated accuracies measured at one training size of one class."""

    size: int
    replicates: tuple[float, ...]
    class_label: str | None = None

    def __post_init__(self):
        if isinstance(self.size, bool) or not isinstance(self.size, int):
            raise ContractError(f"Training size must be an integer, got {self.size!r}.")
        if self.size <= 0:
            raise ContractError(f"Training size must be positive, got {self.size}.")
        replicates = tuple(float(v) for v in self.replicates)
        if not replicates:
            raise ContractError(f"Size {self.size} has no replicates.")
        for value in replicates:
            if not (math.isfinite(value) and 0 <= value <= 100):
                raise ContractError(
                    f"Accuracy {value} at size {self.size} is outside [0, 100]."
                )
        object.__setattr__(self, "replicates", replicates)

    @property
    def mean(self):
        return statistics.fmean(self.replicates)

    @property
    def variance(self):
        """Sample variance (n - 1 denominator); 0 for a single replicate."""
        if len(self.replicates) < 2:
            return 0.0
        return statistics.variance(self.replicates)

    @property
    def std(self):
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class ObservationSet:
    """Replicated accuracy measurements keyed by class and training size.

    A set holding a single class (or unlabeled rows) is a *series* and can be
    fitted directly. Multi-class sets are narrowed with :meth:`series`.
    """

    groups: tuple[ObservationGroup, ...]

    def __post_init__(self):
        groups = tuple(self.groups)
        if not groups:
            raise ContractError("An observation set needs at least one group.")
        seen = set()
        for group in groups:
            key = (group.class_label, group.size)
            if key in seen:
                label = group.class_label or "(unlabeled)"
                raise ContractError(
                    f"Duplicate group for class {label} at size {group.size}."
                )
            seen.add(key)
        object.__setattr__(self, "groups", groups)

    @property
    def classes(self):
        """Class labels in order of first appearance (``None`` if unlabeled)."""
        return list(dict.fromkeys(group.class_label for group in self.groups))

    @property
    def is_series(self):
        return len(self.classes) == 1

    @property
    def sizes(self):
        return sorted({group.size for group in self.groups})

    @property
    def has_replicates(self):
        return any(len(group.replicates) > 1 for group in self.groups)

    def ordered_groups(self):
        """Groups of a single series in ascending size order."""
        self._require_series()
        return sorted(self.groups, key=lambda group: group.size)

    def series(self, label=AVERAGE_TOTAL):
        """Return the single-series view for *label*.

        ``AverageTotal`` pools the classes: at each size, when every class has
        the same replicate count n, replicate i is the mean across classes of
        replicate i; otherwise the replicates are the per-class means.

        Raises:
            ContractError: If *label* names no class in this set.
        """
        labels = self.classes
        if self.is_series and label in (AVERAGE_TOTAL, labels[0]):
            return self
        if label == AVERAGE_TOTAL:
            return self._pooled()
        if label not in labels:
            available = [str(v) for v in labels if v is not None]
            raise ContractError(
                f"Unknown class label: '{label}'. "
                f"Available classes: {', '.join(available + [AVERAGE_TOTAL])}"
            )
        return ObservationSet(
            tuple(group for group in self.groups if group.class_label == label)
        )

    def _pooled(self):
        by_size = defaultdict(list)
        for group in self.groups:
            by_size[group.size].append(group)

        pooled = []
        for size in sorted(by_size):
            groups = by_size[size]
            counts = {len(group.replicates) for group in groups}
            if len(counts) == 1:
                replicates = tuple(
                    statistics.fmean(values)
                    for values in zip(*(g.replicates for g in groups), strict=True)
                )
            else:
                replicates = tuple(group.mean for group in groups)
            pooled.append(ObservationGroup(size, replicates, AVERAGE_TOTAL))
        return ObservationSet(tuple(pooled))

    def pairs(self, per_replicate=False):
        """Flatten a series into ``(x, t)`` arrays for fitting.

        Args:
            per_replicate: Emit one pair per replicate instead of one pair per
                size holding the replicate mean.
        """
        x = []
        t = []
        for group in self.ordered_groups():
            if per_replicate:
                x.extend([float(group.size)] * len(group.replicates))
                t.extend(group.replicates)
            else:
                x.append(float(group.size))
                t.append(group.mean)
        return np.array(x), np.array(t)

    def _require_series(self):
        if not self.is_series:
            raise ContractError(
                "Observations hold several classes "
                f"({', '.join(str(v) for v in self.classes)}); select one class "
                f"or '{AVERAGE_TOTAL}' first."
            )


@dataclass(frozen=True)
class AggregateRow:
    """One training size of an :class:`AggregateTable`.

    ``std`` and ``replicate_count`` describe every replicate measured at the
    size, pooled across classes.
    """

    size: int
    class_means: dict[str, float] = field(default_factory=dict)
    overall_mean: float = 0.0
    std: float = 0.0
    replicate_count: int = 0


@dataclass(frozen=True)
class AggregateTable:
    rows: tuple[AggregateRow, ...]

    def as_dict(self):
        return {
            "rows": [
                {
                    "size": row.size,
                    "class_means": dict(row.class_means),
                    "overall_mean": row.overall_mean,
                    "std": row.std,
                    "replicate_count": row.replicate_count,
                }
                for row in self.rows
            ]
        }


def _parse_int(value, column, line_number):
    try:
        number = int(value)
    except ValueError:
        raise ObservationParseError(
            f"{column} must be a positive integer, got {value!r}.", line_number
        ) from None
    if number <= 0:
        raise ObservationParseError(
            f"{column} must be a positive integer, got {number}.", line_number
        )
    return number


def _parse_accuracy(value, line_number):
    try:
        accuracy = float(value)
    except ValueError:
        raise ObservationParseError(
            f"accuracy must be a number, got {value!r}.", line_number
        ) from None
    if not math.isfinite(accuracy) or not 0 <= accuracy <= 100:
        raise ObservationParseError(
            f"accuracy must lie in [0, 100], got {value}.", line_number
        )
    return accuracy


def _read_header(reader):
    try:
        header = next(reader)
    except StopIteration:
        raise ObservationParseError("missing header row.", 1) from None

    columns = [name.strip().lower() for name in header]
    allowed = REQUIRED_COLUMNS + OPTIONAL_COLUMNS
    unknown = [name for name in columns if name not in allowed]
    if unknown:
        raise ObservationParseError(
            f"unknown column(s) {', '.join(unknown)}; "
            f"expected {', '.join(REQUIRED_COLUMNS)} and optionally "
            f"{', '.join(OPTIONAL_COLUMNS)}.",
            1,
        )
    if len(set(columns)) != len(columns):
        raise ObservationParseError("duplicate column names in header.", 1)
    missing = [name for name in REQUIRED_COLUMNS if name not in columns]
    if missing:
        raise ObservationParseError(
            f"missing required column(s): {', '.join(missing)}.", 1
        )
    return columns


def parse_observations(text):
    """Parse observations CSV text into an :class:`ObservationSet`.

    Rows are grouped by (class, size) with replicates kept in file order.
    Multi-class files keep every class; use :meth:`ObservationSet.series` for a
    single class or the pooled ``AverageTotal`` view.

    Raises:
        ObservationParseError: With the offending line number.
    """
    reader = csv.reader(io.StringIO(text.lstrip("\ufeff")))
    columns = _read_header(reader)

    replicates = defaultdict(list)
    seen_keys = set()
    for row in reader:
        line_number = reader.line_num
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(columns):
            raise ObservationParseError(
                f"expected {len(columns)} fields, got {len(row)}.", line_number
            )
        record = {name: cell.strip() for name, cell in zip(columns, row, strict=True)}

        size = _parse_int(record["size"], "size", line_number)
        accuracy = _parse_accuracy(record["accuracy"], line_number)
        label = None
        if "class" in record:
            label = record["class"]
            if not label:
                raise ObservationParseError("class label is empty.", line_number)
        if "repetition" in record:
            repetition = _parse_int(record["repetition"], "repetition", line_number)
            key = (label, size, repetition)
            if key in seen_keys:
                raise ObservationParseError(
                    f"duplicate observation for class {label or '(unlabeled)'}, "
                    f"size {size}, repetition {repetition}.",
                    line_number,
                )
            seen_keys.add(key)
        replicates[(label, size)].append(accuracy)

    if not replicates:
        raise ObservationParseError("no observation rows after the header.", 1)

    class_order = list(dict.fromkeys(label for label, _ in replicates))
    keys = sorted(replicates, key=lambda key: (class_order.index(key[0]), key[1]))
    logger.debug(
        "Parsed %d observation groups in %d class(es)", len(keys), len(class_order)
    )
    return ObservationSet(
        tuple(
            ObservationGroup(size, tuple(replicates[(label, size)]), label)
            for label, size in keys
        )
    )


def to_csv(observations):
    """Serialise observations to the CSV schema read by :func:`parse_observations`.

    A ``repetition`` column numbers replicates from 1 in their stored order;
    ``class`` is written only for labeled sets.
    """
    labeled = any(group.class_label is not None for group in observations.groups)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    header = ["size", "accuracy", "repetition"]
    if labeled:
        header.insert(2, "class")
    writer.writerow(header)
    for group in observations.groups:
        for index, accuracy in enumerate(group.replicates, 1):
            row = [group.size, repr(accuracy)]
            if labeled:
                row.append(group.class_label)
            row.append(index)
            writer.writerow(row)
    return buffer.getvalue()


def aggregate(observations):
    """Summarise observations per training size, Table-1 style.

    The overall mean is the unweighted mean of the per-class means; for an
    unlabeled series it is the replicate mean. ``std`` is the sample standard
    deviation (n - 1) of every replicate at the size, 0 for a single one.
    """
    by_size = defaultdict(list)
    for group in observations.groups:
        by_size[group.size].append(group)

    rows = []
    for size in sorted(by_size):
        groups = by_size[size]
        class_means = {
            group.class_label: group.mean
            for group in groups
            if group.class_label is not None
        }
        values = [value for group in groups for value in group.replicates]
        if class_means:
            overall = statistics.fmean(class_means.values())
        else:
            overall = statistics.fmean(values)
        rows.append(
            AggregateRow(
                size=size,
                class_means=class_means,
                overall_mean=overall,
                std=statistics.stdev(values) if len(values) > 1 else 0.0,
                replicate_count=len(values),
            )
        )
    return AggregateTable(tuple(rows))


def materialize_weights(observations, scheme, per_replicate=False, warn=True):
    """Turn a weight scheme into the weight vector of a series.

    Weights bind to sizes in ascending order. With *per_replicate*, every
    replicate of a size receives that size's weight, matching
    ``observations.pairs(per_replicate=True)``.

    Args:
        observations: A single-series :class:`ObservationSet`.
        scheme: A :class:`curvecast.weights.WeightScheme`.
        per_replicate: Expand to one weight per replicate.
        warn: Log a warning when a scheme falls back to a default for a group.

    Raises:
        ContractError: On a multi-class set or a scheme/size count mismatch.
    """
    groups = observations.ordered_groups()
    weights = np.asarray(scheme.size_weights(groups, warn=warn), dtype=float)
    if weights.shape != (len(groups),):
        raise ContractError(
            f"Weight scheme {scheme.name} produced {weights.size} weights for "
            f"{len(groups)} sizes."
        )
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
        raise ContractError(
            f"Weight scheme {scheme.name} produced non-positive or non-finite weights."
        )
    if per_replicate:
        counts = [len(group.replicates) for group in groups]
        weights = np.repeat(weights, counts)
    return weights
