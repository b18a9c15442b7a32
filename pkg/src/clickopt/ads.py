"""Advertisement records, feature vectors, and the clicks-per-ruble influence analysis."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from datetime import date
from typing import IO, Iterable, Sequence

import numpy as np

CSV_COLUMNS = ("id", "clicks", "spend", "start_date", "end_date", "interests")


class AdFormatError(ValueError):
    """The input table header does not match the documented format."""


class AdRowError(ValueError):
    """A data row violates the advertisement invariants."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class MissingDatesError(ValueError):
    """Case C needs both dates; callers catch this to drop the row."""


class EmptyReportError(ValueError):
    """No ads with positive spend, so the influence report is undefined."""


@dataclass(frozen=True)
class Advertisement:
    """One ad record: click count, spend in rubles, optional run dates, targeted interests."""

    id: str
    clicks: int
    spend: float
    start_date: date | None = None
    end_date: date | None = None
    interests: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.id:
            raise ValueError("id must be non-empty")
        if self.clicks < 0:
            raise ValueError(f"clicks must be >= 0, got {self.clicks}")
        if not math.isfinite(self.spend) or self.spend < 0:
            raise ValueError(f"spend must be a finite value >= 0, got {self.spend}")
        if (
            self.start_date is not None
            and self.end_date is not None
            and self.end_date < self.start_date
        ):
            raise ValueError("end_date precedes start_date")
        cleaned = tuple(s.strip() for s in self.interests)
        if any(not s for s in cleaned):
            raise ValueError("interests must be non-empty strings")
        if any(";" in s for s in cleaned):
            raise ValueError("interests must not contain ';' (the list separator)")
        object.__setattr__(self, "interests", cleaned)


def days_online(ad: Advertisement) -> int | None:
    """Whole days between the start and end dates; None when either is missing."""
    if ad.start_date is None or ad.end_date is None:
        return None
    return (ad.end_date - ad.start_date).days


def _parse_date(cell: str, row: int, column: str) -> date | None:
    if not cell:
        return None
    try:
        return date.fromisoformat(cell)
    except ValueError:
        raise AdRowError(row, f"{column} is not an ISO date: {cell!r}") from None


def parse_ads(source: IO[bytes] | IO[str] | bytes | str) -> list[Advertisement]:
    """Parse the comma-delimited ad table into Advertisement records.

    The header must be exactly ``id,clicks,spend,start_date,end_date,interests``;
    dates are ISO ``YYYY-MM-DD`` or empty, interests are a semicolon-joined list.
    Raises AdFormatError for a bad header and AdRowError (with the 1-based data
    row index) for malformed rows.
    """
    raw = source.read() if hasattr(source, "read") else source
    if isinstance(raw, (bytes, bytearray)):
        raw = raw.decode("utf-8")
    reader = csv.reader(io.StringIO(raw))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise AdFormatError("empty input: missing header") from None
    if header != list(CSV_COLUMNS):
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise AdFormatError(f"header missing column(s): {', '.join(missing)}")
        raise AdFormatError(f"unexpected header {header!r}, want {','.join(CSV_COLUMNS)}")

    ads = []
    for i, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != len(CSV_COLUMNS):
            raise AdRowError(i, f"expected {len(CSV_COLUMNS)} fields, got {len(row)}")
        ad_id, clicks_s, spend_s, start_s, end_s, interests_s = (v.strip() for v in row)
        try:
            clicks = int(clicks_s)
        except ValueError:
            raise AdRowError(i, f"clicks is not an integer: {clicks_s!r}") from None
        try:
            spend = float(spend_s)
        except ValueError:
            raise AdRowError(i, f"spend is not a number: {spend_s!r}") from None
        start = _parse_date(start_s, i, "start_date")
        end = _parse_date(end_s, i, "end_date")
        interests = tuple(p.strip() for p in interests_s.split(";") if p.strip())
        try:
            ads.append(Advertisement(ad_id, clicks, spend, start, end, interests))
        except ValueError as exc:
            raise AdRowError(i, str(exc)) from None
    return ads


def serialize_ads(ads: Iterable[Advertisement], stream: IO[str]) -> None:
    """Write ads in the documented CSV format; inverse of parse_ads."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for ad in ads:
        writer.writerow(
            [
                ad.id,
                str(ad.clicks),
                repr(ad.spend),
                ad.start_date.isoformat() if ad.start_date else "",
                ad.end_date.isoformat() if ad.end_date else "",
                ";".join(ad.interests),
            ]
        )


def dumps_ads(ads: Iterable[Advertisement]) -> str:
    buf = io.StringIO()
    serialize_ads(ads, buf)
    return buf.getvalue()


_CASE_CONTEXT = {"A": 0, "B": 1, "C": 2}


@dataclass(frozen=True)
class FeatureCase:
    """Input case: A = node counts, B = spend + counts, C = spend + days online + counts."""

    tag: str
    n_nodes: int = 6

    def __post_init__(self):
        if self.tag not in _CASE_CONTEXT:
            raise ValueError(f"case tag must be A, B or C, got {self.tag!r}")
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")

    @property
    def n_context(self) -> int:
        return _CASE_CONTEXT[self.tag]

    @property
    def dimension(self) -> int:
        return self.n_nodes + self.n_context


CASE_A = FeatureCase("A")
CASE_B = FeatureCase("B")
CASE_C = FeatureCase("C")


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """A model input row: [spend][days_online][node counts...] per the case."""

    case: FeatureCase
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.case.dimension,):
            raise ValueError(
                f"case {self.case.tag} needs {self.case.dimension} values, got {values.shape}"
            )
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("feature values must be finite and >= 0")
        counts = values[self.case.n_context :]
        if np.any(counts != np.floor(counts)):
            raise ValueError("node-count slots must be integers")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def as_counts(counts, n_nodes: int = 6) -> np.ndarray:
    """Normalize a count container (NodeCounts, sequence, array) to an int vector."""
    arr = np.asarray(getattr(counts, "counts", counts))
    if arr.shape != (n_nodes,):
        raise ValueError(f"expected {n_nodes} node counts, got shape {arr.shape}")
    if np.any(arr < 0) or not np.issubdtype(arr.dtype, np.number) or np.any(arr != np.floor(arr)):
        raise ValueError("node counts must be non-negative integers")
    return arr.astype(int)


def vectorize(ad: Advertisement, counts, case: FeatureCase) -> FeatureVector:
    """Build the case's feature vector for one ad from its node counts.

    Case C requires both dates; raises MissingDatesError otherwise so the
    caller can drop the row.
    """
    count_vec = as_counts(counts, case.n_nodes).astype(float)
    if case.tag == "A":
        values = count_vec
    elif case.tag == "B":
        values = np.concatenate(([ad.spend], count_vec))
    else:
        days = days_online(ad)
        if days is None:
            raise MissingDatesError(f"ad {ad.id!r} lacks dates required for Case C")
        values = np.concatenate(([ad.spend, float(days)], count_vec))
    return FeatureVector(case, values)


@dataclass(frozen=True, eq=False)
class InfluenceReport:
    """Mean node allocation over the top clicks-per-ruble decile."""

    mean_allocation: np.ndarray
    decile_size: int
    selected_ids: tuple[str, ...]


def influence_analysis(ads: Sequence[Advertisement], counts: Sequence) -> InfluenceReport:
    """Average node counts over the top 10% of ads by clicks per ruble.

    Ads with zero spend are discarded; the remainder are ordered by
    (clicks/spend descending, id ascending) and the first ceil(10%) kept.
    """
    if len(ads) != len(counts):
        raise ValueError("need one count vector per ad")
    n_nodes = np.asarray(getattr(counts[0], "counts", counts[0])).shape[0] if counts else 6
    eligible = [
        (ad, as_counts(c, n_nodes)) for ad, c in zip(ads, counts) if ad.spend > 0
    ]
    if not eligible:
        raise EmptyReportError("no ads with spend > 0")
    eligible.sort(key=lambda pair: (-(pair[0].clicks / pair[0].spend), pair[0].id))
    take = math.ceil(0.1 * len(eligible))
    top = eligible[:take]
    means = np.mean([c for _, c in top], axis=0, dtype=float)
    means.setflags(write=False)
    return InfluenceReport(means, take, tuple(ad.id for ad, _ in top))
