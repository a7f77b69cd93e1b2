"""Immutable domain model for a photo-sharing corpus.

A :class:`Dataset` holds users, photos and the five social functionalities
built around them (tags, groups, comments, favorites, contacts).  Records are
plain named tuples; :func:`build_dataset` validates referential integrity,
puts every collection in canonical order and builds the lookup indices.
"""

from __future__ import annotations

import gc
import logging
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)


@contextmanager
def gc_paused():
    """Suspend the cyclic collector while building millions of small tuples.

    Records hold no reference cycles, and the collector's repeated full
    scans would otherwise double the cost of a bulk load.
    """
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()

UserId = int
PhotoId = int
GroupId = int
CommentId = int


class User(NamedTuple):
    id: UserId
    is_pro: bool = False


class Photo(NamedTuple):
    id: PhotoId
    owner: UserId
    title: str = ""


class TagAssignment(NamedTuple):
    photo: PhotoId
    tag: str


class ContactEdge(NamedTuple):
    src: UserId
    dst: UserId


class Comment(NamedTuple):
    id: CommentId
    author: UserId
    photo: PhotoId


class Favorite(NamedTuple):
    user: UserId
    photo: PhotoId


class Group(NamedTuple):
    id: GroupId
    name: str = ""


class Membership(NamedTuple):
    user: UserId
    group: GroupId


class PoolEntry(NamedTuple):
    photo: PhotoId
    group: GroupId


# Table name -> record type, in dependency order.
TABLES: dict[str, type] = {
    "users": User,
    "groups": Group,
    "photos": Photo,
    "tags": TagAssignment,
    "contacts": ContactEdge,
    "comments": Comment,
    "favorites": Favorite,
    "memberships": Membership,
    "pool": PoolEntry,
}


class IntegrityError(DataError):
    """Referential-integrity or uniqueness violations found in strict mode."""

    def __init__(self, problems: list[tuple[str, int, tuple, str]]):
        self.problems = problems
        shown = "; ".join(f"{t} {r}: {m}" for t, _, r, m in problems[:5])
        more = f" (+{len(problems) - 5} more)" if len(problems) > 5 else ""
        super().__init__(f"{len(problems)} integrity violation(s): {shown}{more}")


class UnknownUser(DataError, KeyError):
    def __str__(self) -> str:
        return f"unknown user {self.args[0]}"


@dataclass
class BuildReport:
    """Records dropped by a lenient build.

    Each entry is ``(table, index, record, message)`` where ``index`` is the
    record's position in the input sequence for that table.
    """

    entries: list[tuple[str, int, tuple, str]] = field(default_factory=list)

    def add(self, table: str, index: int, record: tuple, message: str) -> None:
        self.entries.append((table, index, tuple(record), message))

    @property
    def dropped(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for table, *_ in self.entries:
            out[table] = out.get(table, 0) + 1
        return out


def normalize_tag(label: str) -> str:
    return label.strip().casefold()


def _group_by(pairs: Iterable[tuple[int, object]]) -> Mapping[int, tuple]:
    out: dict[int, list] = defaultdict(list)
    for key, value in pairs:
        out[key].append(value)
    return MappingProxyType({k: tuple(v) for k, v in out.items()})


@dataclass(frozen=True)
class Dataset:
    """Canonically ordered, validated corpus with lookup indices.

    Build instances with :func:`build_dataset`; the constructor trusts its
    input to be valid and already sorted.  Equality compares the record
    collections only.
    """

    users: tuple[User, ...] = ()
    groups: tuple[Group, ...] = ()
    photos: tuple[Photo, ...] = ()
    tags: tuple[TagAssignment, ...] = ()
    contacts: tuple[ContactEdge, ...] = ()
    comments: tuple[Comment, ...] = ()
    favorites: tuple[Favorite, ...] = ()
    memberships: tuple[Membership, ...] = ()
    pool: tuple[PoolEntry, ...] = ()

    # Lookup indices are built on first access and cached on the instance.
    @cached_property
    def user_index(self) -> Mapping[UserId, User]:
        return MappingProxyType({u.id: u for u in self.users})

    @cached_property
    def photo_index(self) -> Mapping[PhotoId, Photo]:
        return MappingProxyType({p.id: p for p in self.photos})

    @cached_property
    def group_index(self) -> Mapping[GroupId, Group]:
        return MappingProxyType({g.id: g for g in self.groups})

    @cached_property
    def photos_by_owner(self) -> Mapping[UserId, tuple[PhotoId, ...]]:
        return _group_by((p.owner, p.id) for p in self.photos)

    @cached_property
    def tags_by_photo(self) -> Mapping[PhotoId, tuple[str, ...]]:
        return _group_by(self.tags)

    @cached_property
    def photo_count_by_tag(self) -> Mapping[str, int]:
        counts: dict[str, int] = defaultdict(int)
        for t in self.tags:
            counts[t.tag] += 1
        return MappingProxyType(dict(counts))

    @cached_property
    def members_by_group(self) -> Mapping[GroupId, tuple[UserId, ...]]:
        return _group_by((m.group, m.user) for m in self.memberships)

    @cached_property
    def groups_by_user(self) -> Mapping[UserId, tuple[GroupId, ...]]:
        return _group_by(self.memberships)

    @cached_property
    def pool_by_group(self) -> Mapping[GroupId, tuple[PhotoId, ...]]:
        return _group_by((e.group, e.photo) for e in self.pool)

    @cached_property
    def contacts_out(self) -> Mapping[UserId, tuple[UserId, ...]]:
        return _group_by(self.contacts)

    @cached_property
    def contacts_in(self) -> Mapping[UserId, tuple[UserId, ...]]:
        return _group_by((c.dst, c.src) for c in self.contacts)

    @cached_property
    def comments_by_photo(self) -> Mapping[PhotoId, tuple[Comment, ...]]:
        return _group_by((c.photo, c) for c in self.comments)

    @cached_property
    def comments_by_author(self) -> Mapping[UserId, tuple[Comment, ...]]:
        return _group_by((c.author, c) for c in self.comments)

    @cached_property
    def favorites_by_photo(self) -> Mapping[PhotoId, tuple[UserId, ...]]:
        return _group_by((f.photo, f.user) for f in self.favorites)

    @cached_property
    def favorites_by_user(self) -> Mapping[UserId, tuple[PhotoId, ...]]:
        return _group_by(self.favorites)

    def records(self) -> dict[str, tuple]:
        """All collections keyed by table name, in dependency order."""
        return {name: getattr(self, name) for name in TABLES}

    def counts(self) -> dict[str, int]:
        return {name: len(getattr(self, name)) for name in TABLES}

    @property
    def user_ids(self) -> tuple[UserId, ...]:
        return tuple(u.id for u in self.users)


def build_dataset(
    users: Iterable = (),
    groups: Iterable = (),
    photos: Iterable = (),
    tags: Iterable = (),
    contacts: Iterable = (),
    comments: Iterable = (),
    favorites: Iterable = (),
    memberships: Iterable = (),
    pool: Iterable = (),
    *,
    strict: bool = True,
    report: BuildReport | None = None,
) -> Dataset:
    """Validate records and assemble a :class:`Dataset`.

    Records may be the named tuples of this module or plain tuples with the
    same field order.  In strict mode any violation raises
    :class:`IntegrityError` listing all of them; otherwise offending records
    are dropped (cascading to records that depend on them) and noted in
    ``report``.  Tags are case-folded and trimmed, and duplicate
    (photo, tag) pairs collapse silently.
    """
    with gc_paused():
        return _build(users, groups, photos, tags, contacts, comments, favorites,
                      memberships, pool, strict, report)


def _build(users, groups, photos, tags, contacts, comments, favorites, memberships, pool,
           strict: bool, report: BuildReport | None) -> Dataset:
    problems: list[tuple[str, int, tuple, str]] = []

    def reject(table: str, index: int, record: tuple, message: str) -> None:
        problems.append((table, index, tuple(record), message))
        if report is not None:
            report.add(table, index, record, message)

    kept_users: dict[int, User] = {}
    for i, r in enumerate(users):
        u = User(int(r[0]), bool(int(r[1])) if len(r) > 1 else False)
        if u.id in kept_users:
            reject("users", i, u, "duplicate user id")
            continue
        kept_users[u.id] = u

    kept_groups: dict[int, Group] = {}
    for i, r in enumerate(groups):
        g = Group(int(r[0]), str(r[1]) if len(r) > 1 else "")
        if g.id in kept_groups:
            reject("groups", i, g, "duplicate group id")
            continue
        kept_groups[g.id] = g

    kept_photos: dict[int, Photo] = {}
    for i, r in enumerate(photos):
        p = Photo(int(r[0]), int(r[1]), str(r[2]) if len(r) > 2 else "")
        if p.id in kept_photos:
            reject("photos", i, p, "duplicate photo id")
        elif p.owner not in kept_users:
            reject("photos", i, p, f"photo {p.id} owned by unknown user {p.owner}")
        else:
            kept_photos[p.id] = p

    kept_tags: set[TagAssignment] = set()
    for i, r in enumerate(tags):
        t = TagAssignment(int(r[0]), normalize_tag(str(r[1])))
        if not t.tag:
            reject("tags", i, t, "empty tag")
        elif t.photo not in kept_photos:
            reject("tags", i, t, f"tag on unknown photo {t.photo}")
        else:
            kept_tags.add(t)

    kept_contacts: set[ContactEdge] = set()
    for i, r in enumerate(contacts):
        c = ContactEdge(int(r[0]), int(r[1]))
        if c.src == c.dst:
            reject("contacts", i, c, "self-contact")
        elif c.src not in kept_users or c.dst not in kept_users:
            reject("contacts", i, c, "contact with unknown user")
        elif c in kept_contacts:
            reject("contacts", i, c, "duplicate contact")
        else:
            kept_contacts.add(c)

    kept_comments: dict[int, Comment] = {}
    for i, r in enumerate(comments):
        c = Comment(int(r[0]), int(r[1]), int(r[2]))
        if c.id in kept_comments:
            reject("comments", i, c, "duplicate comment id")
        elif c.author not in kept_users:
            reject("comments", i, c, f"comment by unknown user {c.author}")
        elif c.photo not in kept_photos:
            reject("comments", i, c, f"comment on unknown photo {c.photo}")
        else:
            kept_comments[c.id] = c

    kept_favorites: set[Favorite] = set()
    for i, r in enumerate(favorites):
        f = Favorite(int(r[0]), int(r[1]))
        if f.user not in kept_users or f.photo not in kept_photos:
            reject("favorites", i, f, "favorite with unknown user or photo")
        elif f in kept_favorites:
            reject("favorites", i, f, "duplicate favorite")
        else:
            kept_favorites.add(f)

    kept_members: set[Membership] = set()
    for i, r in enumerate(memberships):
        m = Membership(int(r[0]), int(r[1]))
        if m.user not in kept_users or m.group not in kept_groups:
            reject("memberships", i, m, "membership with unknown user or group")
        elif m in kept_members:
            reject("memberships", i, m, "duplicate membership")
        else:
            kept_members.add(m)

    kept_pool: set[PoolEntry] = set()
    for i, r in enumerate(pool):
        e = PoolEntry(int(r[0]), int(r[1]))
        photo = kept_photos.get(e.photo)
        if photo is None or e.group not in kept_groups:
            reject("pool", i, e, "pool entry with unknown photo or group")
        elif e in kept_pool:
            reject("pool", i, e, "duplicate pool entry")
        elif Membership(photo.owner, e.group) not in kept_members:
            reject("pool", i, e, f"owner {photo.owner} is not a member of group {e.group}")
        else:
            kept_pool.add(e)

    if problems:
        if strict:
            raise IntegrityError(problems)
        logger.warning("lenient build dropped %d record(s)", len(problems))

    return Dataset(
        users=tuple(sorted(kept_users.values())),
        groups=tuple(sorted(kept_groups.values())),
        photos=tuple(sorted(kept_photos.values())),
        tags=tuple(sorted(kept_tags)),
        contacts=tuple(sorted(kept_contacts)),
        comments=tuple(sorted(kept_comments.values())),
        favorites=tuple(sorted(kept_favorites)),
        memberships=tuple(sorted(kept_members)),
        pool=tuple(sorted(kept_pool)),
    )


# Per-user functionality counts, in the column order used for correlations.
ACTIVITY_FIELDS = (
    "photos",
    "groups",
    "contacts_out",
    "contacts_in",
    "favorites_given",
    "favorites_received",
    "comments_posted",
    "comments_received",
)


class ActivityVector(NamedTuple):
    photos: int = 0
    groups: int = 0
    contacts_out: int = 0
    contacts_in: int = 0
    favorites_given: int = 0
    favorites_received: int = 0
    comments_posted: int = 0
    comments_received: int = 0


def activity_vector(d: Dataset, u: UserId) -> ActivityVector:
    if u not in d.user_index:
        raise UnknownUser(u)
    own = d.photos_by_owner.get(u, ())
    return ActivityVector(
        photos=len(own),
        groups=len(d.groups_by_user.get(u, ())),
        contacts_out=len(d.contacts_out.get(u, ())),
        contacts_in=len(d.contacts_in.get(u, ())),
        favorites_given=len(d.favorites_by_user.get(u, ())),
        favorites_received=sum(len(d.favorites_by_photo.get(p, ())) for p in own),
        comments_posted=len(d.comments_by_author.get(u, ())),
        comments_received=sum(len(d.comments_by_photo.get(p, ())) for p in own),
    )


def activity_table(d: Dataset) -> dict[str, np.ndarray]:
    """Activity counts for every user at once, aligned with ``d.users``."""
    n = len(d.users)
    pos = {u.id: i for i, u in enumerate(d.users)}
    owner_pos = {p.id: pos[p.owner] for p in d.photos}

    def count(indices: Iterable[int]) -> np.ndarray:
        idx = np.fromiter(indices, dtype=np.int64)
        return np.bincount(idx, minlength=n).astype(np.int64)

    return {
        "photos": count(pos[p.owner] for p in d.photos),
        "groups": count(pos[m.user] for m in d.memberships),
        "contacts_out": count(pos[c.src] for c in d.contacts),
        "contacts_in": count(pos[c.dst] for c in d.contacts),
        "favorites_given": count(pos[f.user] for f in d.favorites),
        "favorites_received": count(owner_pos[f.photo] for f in d.favorites),
        "comments_posted": count(pos[c.author] for c in d.comments),
        "comments_received": count(owner_pos[c.photo] for c in d.comments),
    }
