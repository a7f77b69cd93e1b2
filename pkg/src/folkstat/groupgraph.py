"""Thematic and social graphs of groups, and the two group indicators.

For a group, the vertices are its members having at least one tagged photo.
Two vertices are thematically linked when they share a tag, with weight

    w(u, v) = sum_t rarity(t) * min(w(u, t), w(v, t))
    rarity(t) = log(1 + n_max / n_t)
    w(u, t) = 1 + log n_t(u)   (0 when u never used t)

where n_t counts photos tagged t over the whole corpus and n_t(u) those of u.
They are socially linked when either one lists the other as a contact.  A
group is then placed by its social density (edge density of the social
graph) and tag dispersion (Gini coefficient of thematic edge weights).
"""

from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .dataset import Dataset, GroupId, UserId
from .errors import DataError
from .metrics import gini

DEFAULT_LOG_BASE = 2.0


class NoTags(DataError):
    pass


class UnknownTag(DataError, KeyError):
    def __str__(self) -> str:
        return f"unknown tag {self.args[0]!r}"


class UnknownGroup(DataError, KeyError):
    def __str__(self) -> str:
        return f"unknown group {self.args[0]}"


class SameUser(DataError, ValueError):
    pass


class TooFewVertices(DataError):
    pass


class NoEdges(DataError):
    pass


@dataclass(frozen=True)
class TagCorpusStats:
    photos_per_tag: Mapping[str, int]                      # n_t
    n_max: int
    user_tag_counts: Mapping[UserId, Mapping[str, int]]    # n_t(u)

    def n_t(self, tag: str) -> int:
        try:
            return self.photos_per_tag[tag]
        except KeyError:
            raise UnknownTag(tag) from None

    def n_tu(self, user: UserId, tag: str) -> int:
        return self.user_tag_counts.get(user, {}).get(tag, 0)


def tag_corpus_stats(d: Dataset) -> TagCorpusStats:
    if not d.tags:
        raise NoTags("the dataset has no tag assignments")
    owner = {p.id: p.owner for p in d.photos}
    per_tag: dict[str, int] = defaultdict(int)
    per_user: dict[UserId, dict[str, int]] = defaultdict(lambda: defaultdict(int))
    for t in d.tags:
        per_tag[t.tag] += 1
        per_user[owner[t.photo]][t.tag] += 1
    return TagCorpusStats(
        dict(per_tag),
        max(per_tag.values()),
        {u: dict(c) for u, c in per_user.items()},
    )


def _log(x: float, base: float) -> float:
    if base == 2.0:
        return math.log2(x)
    return math.log(x) / math.log(base)


def rarity(stats: TagCorpusStats, tag: str, base: float = DEFAULT_LOG_BASE) -> float:
    """log(1 + n_max / n_t); exactly 1 in base 2 for the most used tag."""
    return _log(1.0 + stats.n_max / stats.n_t(tag), base)


def tag_weight(stats: TagCorpusStats, user: UserId, tag: str, base: float = DEFAULT_LOG_BASE) -> float:
    stats.n_t(tag)
    count = stats.n_tu(user, tag)
    return 0.0 if count == 0 else 1.0 + _log(count, base)


def edge_weight(stats: TagCorpusStats, u: UserId, v: UserId, base: float = DEFAULT_LOG_BASE) -> float:
    if u == v:
        raise SameUser(f"edge weight needs two distinct users, got {u} twice")
    tu = stats.user_tag_counts.get(u, {})
    tv = stats.user_tag_counts.get(v, {})
    if len(tv) < len(tu):
        tu, tv = tv, tu
    shared = sorted(t for t in tu if t in tv)
    return math.fsum(rarity(stats, t, base) * min(tag_weight(stats, u, t, base), tag_weight(stats, v, t, base))
                     for t in shared)


@dataclass(frozen=True)
class ThematicGraph:
    group: GroupId
    vertices: tuple[UserId, ...]
    edges: Mapping[tuple[UserId, UserId], float]    # keys (u, v) with u < v

    def weight(self, u: UserId, v: UserId) -> float:
        return self.edges.get((min(u, v), max(u, v)), 0.0)


@dataclass(frozen=True)
class SocialGraph:
    group: GroupId
    vertices: tuple[UserId, ...]
    edges: frozenset[tuple[UserId, UserId]]          # (u, v) with u < v


def _vertices(d: Dataset, stats: TagCorpusStats, g: GroupId) -> tuple[UserId, ...]:
    if g not in d.group_index:
        raise UnknownGroup(g)
    return tuple(sorted(u for u in d.members_by_group.get(g, ()) if stats.user_tag_counts.get(u)))


def thematic_graph(d: Dataset, stats: TagCorpusStats, g: GroupId, base: float = DEFAULT_LOG_BASE) -> ThematicGraph:
    """Weighted graph over tagging members; edges via a tag -> users index."""
    vertices = _vertices(d, stats, g)
    k = len(vertices)
    users_by_tag: dict[str, list[int]] = defaultdict(list)
    for i, u in enumerate(vertices):
        for tag in stats.user_tag_counts[u]:
            users_by_tag[tag].append(i)
    acc = np.zeros((k, k))
    for tag in sorted(users_by_tag):
        idx = users_by_tag[tag]
        if len(idx) < 2:
            continue
        w = np.array([tag_weight(stats, vertices[i], tag, base) for i in idx])
        acc[np.ix_(idx, idx)] += rarity(stats, tag, base) * np.minimum.outer(w, w)
    rows, cols = np.nonzero(np.triu(acc, 1))
    edges = {(vertices[i], vertices[j]): float(acc[i, j]) for i, j in zip(rows.tolist(), cols.tolist())}
    return ThematicGraph(g, vertices, edges)


def social_graph(d: Dataset, g: GroupId, stats: TagCorpusStats | None = None) -> SocialGraph:
    """Contact graph (either direction) over the thematic vertex set."""
    if stats is None:
        stats = tag_corpus_stats(d)
    vertices = _vertices(d, stats, g)
    inside = set(vertices)
    edges = set()
    for u in vertices:
        for v in d.contacts_out.get(u, ()):
            if v in inside:
                edges.add((min(u, v), max(u, v)))
    return SocialGraph(g, vertices, frozenset(edges))


def social_density(sg: SocialGraph) -> float:
    n = len(sg.vertices)
    if n < 2:
        raise TooFewVertices(f"density needs at least 2 vertices, group {sg.group} has {n}")
    return len(sg.edges) / (n * (n - 1) / 2)


def tag_dispersion(tg: ThematicGraph, include_nonedges: bool = False) -> float:
    """Gini coefficient of thematic edge weights.

    With ``include_nonedges`` every non-adjacent vertex pair contributes a
    zero weight.
    """
    if not tg.edges:
        raise NoEdges(f"group {tg.group} has no thematic edges")
    weights = sorted(tg.edges.values())
    if include_nonedges:
        n = len(tg.vertices)
        weights = [0.0] * (n * (n - 1) // 2 - len(weights)) + weights
    return gini(weights)


@dataclass(frozen=True)
class GroupIndicators:
    group: GroupId
    members: int
    vertices: int
    social_density: float | None      # None when undefined
    tag_dispersion: float | None


def group_indicators(
    d: Dataset,
    stats: TagCorpusStats,
    g: GroupId,
    base: float = DEFAULT_LOG_BASE,
    include_nonedges: bool = False,
) -> GroupIndicators:
    """Both indicators for one group; undefined ones are reported as None."""
    tg = thematic_graph(d, stats, g, base)
    sg = social_graph(d, g, stats)
    try:
        density = social_density(sg)
    except TooFewVertices:
        density = None
    try:
        dispersion = tag_dispersion(tg, include_nonedges) if density is not None else None
    except NoEdges:
        dispersion = None
    return GroupIndicators(g, len(d.members_by_group.get(g, ())), len(tg.vertices), density, dispersion)


def map_groups(
    d: Dataset,
    stats: TagCorpusStats,
    min_members: int = 433,
    max_members: int = 500,
    base: float = DEFAULT_LOG_BASE,
    include_nonedges: bool = False,
    workers: int = 1,
) -> list[GroupIndicators]:
    """Indicators of every group with a member count in [min, max].

    Sorted by tag dispersion ascending (undefined last), then group id.
    """
    if min_members > max_members:
        raise ValueError("min_members must not exceed max_members")
    selected = [g.id for g in d.groups
                if min_members <= len(d.members_by_group.get(g.id, ())) <= max_members]

    def one(g: GroupId) -> GroupIndicators:
        return group_indicators(d, stats, g, base, include_nonedges)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, selected))
    else:
        results = [one(g) for g in selected]
    return sorted(results, key=lambda r: (r.tag_dispersion is None, r.tag_dispersion or 0.0, r.group))
