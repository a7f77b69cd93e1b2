"""Resumable crawl of a paged social-data source.

The crawl lists users and groups, then visits each user in ascending id
order (contacts, group memberships, photos; for each photo its comments,
tags and favorites), then each group (its photo pool).  Progress is
checkpointed after every completed user and every completed group, and the
partial corpus lives in append-only table files next to the checkpoint, so
an interrupted crawl resumes where it stopped without fetching a completed
entity again.

The transport is abstract: anything implementing :class:`PagedSource` can be
crawled.  :class:`DatasetSource` serves an in-memory dataset and is what the
tests and the ``harvest`` command use.
"""

from __future__ import annotations

import logging
import os
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterator, Protocol, Sequence, TypeVar

from .dataset import Comment, Dataset, Group, Photo, User
from .errors import DataError
from .ingest import SCHEMAS, TableSchema, load

logger = logging.getLogger(__name__)

DEFAULT_PAGE_SIZE = 500
CHECKPOINT_FILE = "checkpoint.tsv"

T = TypeVar("T")
Page = tuple[Sequence[T], bool]


class SourceError(DataError):
    """Raised by a source when a fetch fails.

    When raised out of :func:`harvest`, ``checkpoint`` holds the last valid
    checkpoint to resume from.
    """

    checkpoint: "Checkpoint | None" = None


class PagedSource(Protocol):
    """Paged read access to a photo-sharing site.

    Every method returns ``(items, has_next)`` for a 0-based page index.
    Pages must be stable, disjoint and exhaustive during a crawl.
    """

    def list_users(self, page: int) -> Page[User]: ...
    def list_groups(self, page: int) -> Page[Group]: ...
    def contacts_of(self, user: int, page: int) -> Page[int]: ...
    def groups_of(self, user: int, page: int) -> Page[int]: ...
    def photos_of(self, user: int, page: int) -> Page[Photo]: ...
    def comments_of(self, photo: int, page: int) -> Page[Comment]: ...
    def tags_of(self, photo: int, page: int) -> Page[str]: ...
    def favorites_of(self, photo: int, page: int) -> Page[int]: ...
    def pool_of(self, group: int, page: int) -> Page[int]: ...
    def members_of(self, group: int, page: int) -> Page[int]: ...


class DatasetSource:
    """A :class:`PagedSource` backed by a :class:`Dataset`.

    ``calls`` counts fetches per method, for checking crawl cost.
    """

    def __init__(self, d: Dataset, page_size: int = DEFAULT_PAGE_SIZE):
        if page_size < 1:
            raise ValueError("page_size must be >= 1")
        self.d = d
        self.page_size = page_size
        self.calls: dict[str, int] = {}

    def _page(self, name: str, items: Sequence[T], page: int) -> Page[T]:
        self.calls[name] = self.calls.get(name, 0) + 1
        start = page * self.page_size
        return tuple(items[start:start + self.page_size]), start + self.page_size < len(items)

    def list_users(self, page):
        return self._page("list_users", self.d.users, page)

    def list_groups(self, page):
        return self._page("list_groups", self.d.groups, page)

    def contacts_of(self, user, page):
        return self._page("contacts_of", self.d.contacts_out.get(user, ()), page)

    def groups_of(self, user, page):
        return self._page("groups_of", self.d.groups_by_user.get(user, ()), page)

    def photos_of(self, user, page):
        photos = [self.d.photo_index[p] for p in self.d.photos_by_owner.get(user, ())]
        return self._page("photos_of", photos, page)

    def comments_of(self, photo, page):
        return self._page("comments_of", self.d.comments_by_photo.get(photo, ()), page)

    def tags_of(self, photo, page):
        return self._page("tags_of", self.d.tags_by_photo.get(photo, ()), page)

    def favorites_of(self, photo, page):
        return self._page("favorites_of", self.d.favorites_by_photo.get(photo, ()), page)

    def pool_of(self, group, page):
        return self._page("pool_of", self.d.pool_by_group.get(group, ()), page)

    def members_of(self, group, page):
        return self._page("members_of", self.d.members_by_group.get(group, ()), page)


def _all_pages(fetch: Callable[[int], Page[T]]) -> Iterator[T]:
    page = 0
    while True:
        items, has_next = fetch(page)
        yield from items
        if not has_next:
            return
        page += 1


# --- checkpoint ---------------------------------------------------------------

PHASES = ("listing", "users", "groups", "done")


@dataclass(frozen=True)
class Checkpoint:
    """Crawl position.

    ``cursor`` is the last completed user id (phase ``users``) or group id
    (phase ``groups``), None when nothing in the phase is complete yet.
    ``offsets`` are the byte sizes of the partial table files at that point.
    """

    phase: str
    cursor: int | None
    location: Path
    offsets: dict[str, int] = field(default_factory=dict)

    def save(self) -> None:
        lines = [f"phase\t{self.phase}", f"cursor\t{'' if self.cursor is None else self.cursor}"]
        lines += [f"{name}\t{self.offsets.get(name, 0)}" for name in sorted(self.offsets)]
        path = self.location / CHECKPOINT_FILE
        tmp = path.with_suffix(".tmp")
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        os.replace(tmp, path)

    @classmethod
    def read(cls, location: str | os.PathLike) -> "Checkpoint":
        root = Path(location)
        fields_: dict[str, str] = {}
        path = root / CHECKPOINT_FILE
        for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            key, sep, value = line.partition("\t")
            if not sep:
                raise DataError(f"{path}:{n}: expected key<TAB>value")
            fields_[key] = value
        phase = fields_.pop("phase", "")
        if phase not in PHASES:
            raise DataError(f"{path}: unknown phase {phase!r}")
        cursor = fields_.pop("cursor", "")
        try:
            offsets = {k: int(v) for k, v in fields_.items()}
            return cls(phase, int(cursor) if cursor else None, root, offsets)
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None


class _PartialStore:
    """Append-only table files holding the records harvested so far."""

    def __init__(self, root: Path, offsets: dict[str, int]):
        self.root = root
        root.mkdir(parents=True, exist_ok=True)
        for schema in SCHEMAS:
            path = root / schema.filename
            size = offsets.get(schema.filename)
            if size is None:
                path.write_bytes(("\t".join(schema.columns) + "\n").encode("utf-8"))
            else:
                # drop anything written after the checkpoint
                with open(path, "r+b") as fh:
                    fh.truncate(size)
        self.schemas = {s.table: s for s in SCHEMAS}
        self.buffers: dict[str, list[str]] = {s.table: [] for s in SCHEMAS}

    def add(self, table: str, *cells: object) -> None:
        for c in cells:
            if isinstance(c, str) and ("\t" in c or "\n" in c or "\r" in c):
                raise DataError(f"{table}: tab or newline in {c!r}")
        self.buffers[table].append("\t".join(str(int(c) if isinstance(c, bool) else c) for c in cells))

    def flush(self) -> dict[str, int]:
        offsets = {}
        for table, rows in self.buffers.items():
            schema: TableSchema = self.schemas[table]
            path = self.root / schema.filename
            if rows:
                with open(path, "ab") as fh:
                    fh.write(("\n".join(rows) + "\n").encode("utf-8"))
                rows.clear()
            offsets[schema.filename] = path.stat().st_size
        return offsets


# --- crawl --------------------------------------------------------------------

def harvest(
    src: PagedSource,
    checkpoint: Checkpoint | None = None,
    *,
    workdir: str | os.PathLike | None = None,
    max_users: int | None = None,
) -> tuple[Dataset, Checkpoint]:
    """Crawl ``src`` into a dataset, resuming from ``checkpoint`` if given.

    Partial state is kept under ``workdir`` (a fresh temporary directory when
    neither it nor a checkpoint is given).  ``max_users`` stops the crawl
    after that many users complete in this call and returns the partial
    dataset with a resumable checkpoint.  Entities that vanish mid-crawl
    leave dangling records, which are dropped with a logged warning.
    """
    if checkpoint is None:
        root = Path(workdir) if workdir is not None else Path(tempfile.mkdtemp(prefix="folkstat-harvest-"))
        checkpoint = Checkpoint("listing", None, root, {})
    store = _PartialStore(checkpoint.location, checkpoint.offsets)
    state = checkpoint
    if state.phase == "listing":
        state.save()

    def commit(phase: str, cursor: int | None) -> None:
        nonlocal state
        state = replace(state, phase=phase, cursor=cursor, offsets=store.flush())
        state.save()

    try:
        if state.phase == "listing":
            for u in _all_pages(src.list_users):
                store.add("users", u.id, bool(u.is_pro))
            for g in _all_pages(src.list_groups):
                store.add("groups", g.id, g.name)
            commit("users", None)

        if state.phase == "users":
            user_ids = sorted(_read_ids(state.location, "users.tsv"))
            done = 0
            for uid in user_ids:
                if state.cursor is not None and uid <= state.cursor:
                    continue
                if max_users is not None and done >= max_users:
                    return _finish(state), state
                _crawl_user(src, store, uid)
                commit("users", uid)
                done += 1
            commit("groups", None)

        if state.phase == "groups":
            for gid in sorted(_read_ids(state.location, "groups.tsv")):
                if state.cursor is not None and gid <= state.cursor:
                    continue
                for pid in _all_pages(lambda p: src.pool_of(gid, p)):
                    store.add("pool", pid, gid)
                commit("groups", gid)
            commit("done", None)
    except SourceError as exc:
        exc.checkpoint = state
        raise
    return _finish(state), state


def _crawl_user(src: PagedSource, store: _PartialStore, uid: int) -> None:
    for v in _all_pages(lambda p: src.contacts_of(uid, p)):
        store.add("contacts", uid, v)
    for g in _all_pages(lambda p: src.groups_of(uid, p)):
        store.add("memberships", uid, g)
    for photo in _all_pages(lambda p: src.photos_of(uid, p)):
        pid = photo.id
        store.add("photos", pid, photo.owner, photo.title)
        for c in _all_pages(lambda p: src.comments_of(pid, p)):
            store.add("comments", c.id, c.author, c.photo)
        for tag in _all_pages(lambda p: src.tags_of(pid, p)):
            store.add("tags", pid, tag)
        for user in _all_pages(lambda p: src.favorites_of(pid, p)):
            store.add("favorites", user, pid)


def _read_ids(root: Path, filename: str) -> list[int]:
    lines = (root / filename).read_text(encoding="utf-8").split("\n")[1:]
    return [int(line.split("\t", 1)[0]) for line in lines if line]


def _finish(state: Checkpoint) -> Dataset:
    """Load the partial store, dropping records left dangling by the source."""
    d, report = load(state.location, mode="lenient")
    for file, line, message in report.warnings:
        logger.warning("harvest: %s:%s: %s", file, line, message)
    return d

