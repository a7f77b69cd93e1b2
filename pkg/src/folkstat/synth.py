"""Seeded generator of heavy-tailed synthetic corpora.

Every per-user activity count follows a truncated Zipf law with a separate
share of zero-activity users for pro and non-pro accounts, loosely tuned to
the proportions of a large photo-sharing site.  The goal is realistic shape
(strong concentration, pro users far more active), not calibration.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .dataset import Dataset, build_dataset
from .errors import DataError


class InvalidConfig(DataError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 1000
    pro_fraction: float = 0.037
    seed: int = 0

    # photos per user
    photo_exponent: float = 1.8
    photo_cap: int = 5000
    photo_zero_nonpro: float = 0.65
    photo_zero_pro: float = 0.06
    photo_scale_nonpro: float = 1.0
    photo_scale_pro: float = 8.0

    # upload-order ids; each id slot is skipped (private/deleted) with this probability
    first_photo_id: int = 74
    photo_id_skip: float = 0.33

    # tags
    tag_vocab: int = 2000
    tag_popularity_exponent: float = 1.1
    untagged_fraction: float = 0.3
    tags_per_photo_exponent: float = 2.0
    tags_per_photo_cap: int = 10
    tag_palette_size: int = 5
    tag_palette_probability: float = 0.5

    # contacts
    contact_zero_nonpro: float = 0.67
    contact_zero_pro: float = 0.2
    contact_exponent: float = 1.9
    contact_cap: int = 1000
    contact_mutual: float = 0.6
    contact_in_group_probability: float = 0.3
    popularity_exponent: float = 0.8

    # comments and favorites
    comment_zero_nonpro: float = 0.9
    comment_zero_pro: float = 0.25
    comment_exponent: float = 1.7
    comment_cap: int = 2000
    favorite_zero_nonpro: float = 0.95
    favorite_zero_pro: float = 0.56
    favorite_exponent: float = 1.8
    favorite_cap: int = 1000

    # groups; n_groups < 0 means one group per 100 users
    n_groups: int = -1
    group_zero_nonpro: float = 0.94
    group_zero_pro: float = 0.51
    group_exponent: float = 1.8
    group_cap: int = 200
    group_popularity_exponent: float = 0.7
    pool_probability: float = 0.3
    pool_cap: int = 50
    theme_tag_probability: float = 0.5

    def validate(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in ("n_groups", "seed"):
                continue
            if value < 0:
                raise InvalidConfig(f"{f.name} must be >= 0, got {value}")
            is_probability = f.name.endswith(("_fraction", "_probability", "_mutual", "_skip")) or "_zero_" in f.name
            if is_probability and value > 1:
                raise InvalidConfig(f"{f.name} must lie in [0, 1], got {value}")
        if self.photo_id_skip >= 1:
            raise InvalidConfig("photo_id_skip must be < 1")
        for name in ("photo", "contact", "comment", "favorite", "group", "tags_per_photo"):
            if getattr(self, f"{name}_exponent") <= 0:
                raise InvalidConfig(f"{name}_exponent must be > 0")
            if getattr(self, f"{name}_cap") < 1:
                raise InvalidConfig(f"{name}_cap must be >= 1")
        if self.tag_vocab < 1 or self.tag_palette_size < 1:
            raise InvalidConfig("tag_vocab and tag_palette_size must be >= 1")

    def as_dict(self) -> dict:
        return asdict(self)


def _zipf_sampler(exponent: float, cap: int):
    weights = np.arange(1, cap + 1, dtype=float) ** -exponent
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        return np.searchsorted(cdf, rng.random(size), side="right") + 1

    return draw


def _popularity(rng: np.random.Generator, n: int, exponent: float) -> np.ndarray:
    """Cumulative selection weights: Zipf over a random ranking of n items."""
    ranks = rng.permutation(n) + 1
    cdf = np.cumsum(ranks.astype(float) ** -exponent)
    return cdf / cdf[-1]


def _pick(rng: np.random.Generator, cdf: np.ndarray, size: int) -> np.ndarray:
    return np.minimum(np.searchsorted(cdf, rng.random(size), side="right"), len(cdf) - 1)


def _counts(rng, is_pro, zero_nonpro, zero_pro, exponent, cap, scale_nonpro=1.0, scale_pro=1.0):
    n = len(is_pro)
    zero = rng.random(n) < np.where(is_pro, zero_pro, zero_nonpro)
    raw = _zipf_sampler(exponent, cap)(rng, n)
    scaled = np.rint(raw * np.where(is_pro, scale_pro, scale_nonpro))
    counts = np.clip(scaled, 1, cap).astype(np.int64)
    counts[zero] = 0
    return counts


def _unique_pairs(a: np.ndarray, b: np.ndarray, base: int) -> tuple[np.ndarray, np.ndarray]:
    base = max(base, 1)
    keys = np.unique(a.astype(np.int64) * base + b.astype(np.int64))
    return keys // base, keys % base


_EMPTY = np.zeros(0, np.int64)


def generate(cfg: SynthConfig) -> Dataset:
    """Draw a strictly valid :class:`Dataset`; identical for identical ``cfg``."""
    cfg.validate()
    n = cfg.n_users
    if n == 0:
        return Dataset()
    rng = np.random.default_rng(cfg.seed)

    user_ids = np.arange(1, n + 1, dtype=np.int64)
    is_pro = np.zeros(n, dtype=bool)
    is_pro[rng.choice(n, size=int(round(cfg.pro_fraction * n)), replace=False)] = True

    # photos, with ids in a random global upload order
    n_photos = _counts(rng, is_pro, cfg.photo_zero_nonpro, cfg.photo_zero_pro,
                       cfg.photo_exponent, cfg.photo_cap,
                       cfg.photo_scale_nonpro, cfg.photo_scale_pro)
    owner_idx = rng.permutation(np.repeat(np.arange(n), n_photos))
    total = len(owner_idx)
    gaps = rng.geometric(1.0 - cfg.photo_id_skip, size=total).astype(np.int64)
    if total:
        gaps[0] = 0
    photo_ids = cfg.first_photo_id + np.cumsum(gaps)
    photos_of: list[list[int]] = [[] for _ in range(n)]
    for k, u in enumerate(owner_idx.tolist()):
        photos_of[u].append(k)

    # tags: a mix of globally popular tags and a per-user palette
    tag_cdf = _popularity(rng, cfg.tag_vocab, cfg.tag_popularity_exponent)
    palette = _pick(rng, tag_cdf, n * cfg.tag_palette_size).reshape(n, cfg.tag_palette_size)
    n_tags = _zipf_sampler(cfg.tags_per_photo_exponent, cfg.tags_per_photo_cap)(rng, total)
    n_tags[rng.random(total) < cfg.untagged_fraction] = 0
    slot_photo = np.repeat(np.arange(total), n_tags)
    slots = len(slot_photo)
    from_palette = rng.random(slots) < cfg.tag_palette_probability
    slot_tag = _pick(rng, tag_cdf, slots)
    pal_choice = palette[owner_idx[slot_photo], rng.integers(0, cfg.tag_palette_size, size=slots)]
    slot_tag = np.where(from_palette, pal_choice, slot_tag)

    # groups and memberships, group popularity Zipf-distributed
    n_groups = cfg.n_groups if cfg.n_groups >= 0 else max(1, n // 100)
    group_ids = np.arange(1, n_groups + 1, dtype=np.int64)
    memberships = (_EMPTY, _EMPTY)
    theme = _EMPTY
    if n_groups:
        group_cdf = _popularity(rng, n_groups, cfg.group_popularity_exponent)
        theme = _pick(rng, tag_cdf, n_groups)
        n_member = _counts(rng, is_pro, cfg.group_zero_nonpro, cfg.group_zero_pro,
                           cfg.group_exponent, min(cfg.group_cap, n_groups))
        mem_user = np.repeat(np.arange(n), n_member)
        memberships = _unique_pairs(mem_user, _pick(rng, group_cdf, len(mem_user)), n_groups)
    groups_of: list[list[int]] = [[] for _ in range(n)]
    members_of: list[list[int]] = [[] for _ in range(n_groups)]
    for u, g in zip(*(a.tolist() for a in memberships)):
        groups_of[u].append(g)
        members_of[g].append(u)

    # contacts: targets chosen by popularity or among fellow group members,
    # partly reciprocated
    user_cdf = _popularity(rng, n, cfg.popularity_exponent)
    n_contacts = _counts(rng, is_pro, cfg.contact_zero_nonpro, cfg.contact_zero_pro,
                         cfg.contact_exponent, min(cfg.contact_cap, max(n - 1, 1)))
    src = np.repeat(np.arange(n), n_contacts)
    dst = _pick(rng, user_cdf, len(src))
    in_group = np.flatnonzero(rng.random(len(src)) < cfg.contact_in_group_probability)
    r1 = rng.random(len(in_group)).tolist()
    r2 = rng.random(len(in_group)).tolist()
    for slot, a, b in zip(in_group.tolist(), r1, r2):
        mine = groups_of[src[slot]]
        if mine:
            fellows = members_of[mine[int(a * len(mine))]]
            dst[slot] = fellows[int(b * len(fellows))]
    back = rng.random(len(src)) < cfg.contact_mutual
    src, dst = np.concatenate([src, dst[back]]), np.concatenate([dst, src[back]])
    keep = src != dst
    c_src, c_dst = _unique_pairs(src[keep], dst[keep], n)

    # comments and favorites on uniformly chosen photos
    comments: list[tuple[int, int, int]] = []
    favorites = (_EMPTY, _EMPTY)
    if total:
        n_comments = _counts(rng, is_pro, cfg.comment_zero_nonpro, cfg.comment_zero_pro,
                             cfg.comment_exponent, cfg.comment_cap)
        authors = np.repeat(user_ids, n_comments)
        targets = photo_ids[rng.integers(0, total, size=len(authors))]
        comments = [(i + 1, a, t) for i, (a, t) in enumerate(zip(authors.tolist(), targets.tolist()))]
        n_faves = _counts(rng, is_pro, cfg.favorite_zero_nonpro, cfg.favorite_zero_pro,
                          cfg.favorite_exponent, cfg.favorite_cap)
        fav_user = np.repeat(np.arange(n), n_faves)
        favorites = _unique_pairs(fav_user, rng.integers(0, total, size=len(fav_user)), total)

    # pools: members post some of their photos, often with the group theme tag
    pool: list[tuple[int, int]] = []
    tag_pairs = set(zip(slot_photo.tolist(), slot_tag.tolist()))
    for u, g in zip(*(a.tolist() for a in memberships)):
        own = photos_of[u]
        if not own:
            continue
        k = int(rng.binomial(min(len(own), cfg.pool_cap), cfg.pool_probability))
        if not k:
            continue
        chosen = sorted(rng.choice(len(own), size=k, replace=False).tolist())
        themed = (rng.random(k) < cfg.theme_tag_probability).tolist()
        for j, t in zip(chosen, themed):
            pool.append((int(photo_ids[own[j]]), int(group_ids[g])))
            if t:
                tag_pairs.add((own[j], int(theme[g])))

    photo_owner = user_ids[owner_idx].tolist()
    return build_dataset(
        users=list(zip(user_ids.tolist(), is_pro.tolist())),
        groups=[(g, f"group {g}") for g in group_ids.tolist()],
        photos=[(pid, o, f"IMG_{k:06d}") for k, (pid, o) in enumerate(zip(photo_ids.tolist(), photo_owner))],
        tags=[(int(photo_ids[p]), f"t{t}") for p, t in tag_pairs],
        contacts=list(zip(user_ids[c_src].tolist(), user_ids[c_dst].tolist())),
        comments=comments,
        favorites=list(zip(user_ids[favorites[0]].tolist(), photo_ids[favorites[1]].tolist())),
        memberships=list(zip(user_ids[memberships[0]].tolist(), group_ids[memberships[1]].tolist())),
        pool=pool,
    )
