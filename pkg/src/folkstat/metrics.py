"""Distribution statistics, usage tables and relation reciprocity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .dataset import ACTIVITY_FIELDS, Dataset, UserId, activity_table
from .errors import DataError


class EmptyDistribution(DataError):
    pass


class EmptyDataset(DataError):
    pass


class TooFewIds(DataError):
    pass


class InvalidKind(DataError, ValueError):
    pass


class EmptyRelation(DataError):
    pass


def _values(values: Iterable[float]) -> np.ndarray:
    x = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise EmptyDistribution("distribution needs at least one value")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise DataError("distribution values must be finite and nonnegative")
    return x


@dataclass(frozen=True)
class LorenzCurve:
    """Points ``(population_fraction, cumulative_share)`` from (0, 0) to (1, 1)."""

    points: tuple[tuple[float, float], ...]

    def xs(self) -> list[float]:
        return [p[0] for p in self.points]

    def ys(self) -> list[float]:
        return [p[1] for p in self.points]

    def area_below(self) -> float:
        """Trapezoid area under the curve."""
        return math.fsum((x1 - x0) * (y0 + y1) / 2
                         for (x0, y0), (x1, y1) in zip(self.points, self.points[1:]))


def lorenz(values: Iterable[float]) -> LorenzCurve:
    """Lorenz curve of a nonnegative distribution.

    Point k is (k/n, share held by the k smallest values).  An all-zero
    distribution gives the diagonal.
    """
    x = np.sort(_values(values))
    n = x.size
    total = x.sum()
    fractions = np.arange(n + 1) / n
    if total == 0:
        shares = fractions.copy()
    else:
        shares = np.concatenate([[0.0], np.cumsum(x) / total])
        shares[-1] = 1.0
    return LorenzCurve(tuple(zip(fractions.tolist(), shares.tolist())))


def gini(values: Iterable[float]) -> float:
    """Gini coefficient, sum |x_i - x_j| / (2 n^2 mean), in [0, 1).

    Evaluated in O(n log n) through the sorted-rank identity
    sum_i (2i - n - 1) x_(i) / (n * sum x).  All-zero input gives 0.
    """
    x = np.sort(_values(values))
    n = x.size
    total = x.sum()
    if total == 0:
        return 0.0
    ranks = np.arange(1, n + 1, dtype=float)
    g = float(np.dot(2 * ranks - n - 1, x) / (n * total))
    return min(max(g, 0.0), 1.0)


# --- usage table ----------------------------------------------------------

# (row label, activity field); the order of the usage table.
FUNCTIONALITY_ROWS: tuple[tuple[str, str], ...] = (
    ("photos", "photos"),
    ("contacts of a user", "contacts_out"),
    ("contacts incoming", "contacts_in"),
    ("comments given", "comments_posted"),
    ("comments received", "comments_received"),
    ("favorites given", "favorites_given"),
    ("favorites received", "favorites_received"),
    ("groups", "groups"),
)


class FunctionalityRow(NamedTuple):
    label: str
    total: int
    # mean count among users with at least one; None when nobody qualifies
    mean_all: float | None
    mean_nonpro: float | None
    mean_pro: float | None
    # percentage of users with a zero count; None for an empty population
    pct_zero_all: float | None
    pct_zero_nonpro: float | None
    pct_zero_pro: float | None


@dataclass(frozen=True)
class FunctionalityStats:
    rows: tuple[FunctionalityRow, ...]

    def row(self, label: str) -> FunctionalityRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)


def _mean_of_havers(counts: np.ndarray) -> float | None:
    havers = counts[counts > 0]
    return float(havers.mean()) if havers.size else None


def _pct_zero(counts: np.ndarray) -> float | None:
    return float(100.0 * np.count_nonzero(counts == 0) / counts.size) if counts.size else None


def functionality_stats(d: Dataset) -> FunctionalityStats:
    table = activity_table(d)
    pro = np.fromiter((u.is_pro for u in d.users), dtype=bool, count=len(d.users))
    rows = []
    for label, key in FUNCTIONALITY_ROWS:
        c = table[key]
        rows.append(FunctionalityRow(
            label, int(c.sum()),
            _mean_of_havers(c), _mean_of_havers(c[~pro]), _mean_of_havers(c[pro]),
            _pct_zero(c), _pct_zero(c[~pro]), _pct_zero(c[pro]),
        ))
    return FunctionalityStats(tuple(rows))


# --- segmentation -------------------------------------------------------

SEGMENTS = ("inactive", "communication_only", "photos_only", "photos_and_communication")


@dataclass(frozen=True)
class Segmentation:
    counts: dict[str, int]
    n_users: int

    @property
    def fractions(self) -> dict[str, float]:
        return {k: self.counts[k] / self.n_users for k in SEGMENTS}


def segment_users(d: Dataset) -> Segmentation:
    """Split users by (has a photo) x (has an outgoing communication act).

    Outgoing acts are contacts made, comments posted, favorites given and
    group memberships; attention received does not count.
    """
    if not d.users:
        raise EmptyDataset("segmentation needs at least one user")
    t = activity_table(d)
    has_photo = t["photos"] > 0
    communicates = (t["contacts_out"] + t["comments_posted"] + t["favorites_given"] + t["groups"]) > 0
    counts = {
        "inactive": int(np.count_nonzero(~has_photo & ~communicates)),
        "communication_only": int(np.count_nonzero(~has_photo & communicates)),
        "photos_only": int(np.count_nonzero(has_photo & ~communicates)),
        "photos_and_communication": int(np.count_nonzero(has_photo & communicates)),
    }
    return Segmentation(counts, len(d.users))


# --- private photo bound from id gaps -------------------------------------

def id_coverage_bound(photo_ids: Iterable[int]) -> tuple[float, float]:
    """Share of the id range that is observed, and the complement.

    Ids are assigned in upload order, so unobserved ids inside the range are
    photos that are private or deleted: the complement bounds the private
    share from above.
    """
    ids = set(photo_ids)
    if len(ids) < 2:
        raise TooFewIds("need at least 2 distinct photo ids")
    coverage = len(ids) / (max(ids) - min(ids) + 1)
    return coverage, 1.0 - coverage


# --- top sample -------------------------------------------------------------

def intensity_scores(d: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Per-user intensity: sum over functionalities of 1 - rank/N.

    Ranks are descending competition ranks (ties share the best rank).
    Returns (user ids, scores) aligned with ``d.users``.
    """
    n = len(d.users)
    ids = np.fromiter((u.id for u in d.users), dtype=np.int64, count=n)
    score = np.zeros(n)
    if n == 0:
        return ids, score
    table = activity_table(d)
    for key in ACTIVITY_FIELDS:
        v = table[key]
        ascending = np.sort(v)
        greater = n - np.searchsorted(ascending, v, side="right")
        score += 1.0 - (greater + 1) / n
    return ids, score


def top_sample(d: Dataset, k: int) -> list[UserId]:
    """The k most intensive users, ties broken by ascending id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ids, score = intensity_scores(d)
    order = np.lexsort((ids, -score))
    return [int(u) for u in ids[order[:k]]]


# --- relations and reciprocity ---------------------------------------------

RELATION_KINDS = ("contacts", "commented", "favorited")


@dataclass(frozen=True)
class DirectedRelation:
    kind: str
    pairs: frozenset[tuple[UserId, UserId]]

    def __len__(self) -> int:
        return len(self.pairs)


def derive_relation(d: Dataset, kind: str) -> DirectedRelation:
    """Directed user pairs linked at least once by ``kind``.

    ``commented`` and ``favorited`` map each act to (actor, photo owner) and
    drop acts on one's own photos.
    """
    if kind == "contacts":
        pairs = {(c.src, c.dst) for c in d.contacts}
    elif kind == "commented":
        owner = {p.id: p.owner for p in d.photos}
        pairs = {(c.author, owner[c.photo]) for c in d.comments}
    elif kind == "favorited":
        owner = {p.id: p.owner for p in d.photos}
        pairs = {(f.user, owner[f.photo]) for f in d.favorites}
    else:
        raise InvalidKind(f"unknown relation kind {kind!r}; expected one of {RELATION_KINDS}")
    return DirectedRelation(kind, frozenset((u, v) for u, v in pairs if u != v))


def reciprocity_rate(r: DirectedRelation | Sequence[tuple[UserId, UserId]]) -> float:
    pairs = r.pairs if isinstance(r, DirectedRelation) else frozenset(r)
    if not pairs:
        raise EmptyRelation("reciprocity of an empty relation is undefined")
    mutual = sum(1 for u, v in pairs if (v, u) in pairs)
    return mutual / len(pairs)
