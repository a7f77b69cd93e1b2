from __future__ import annotations

import random

import pytest

from folkstat.dataset import build_dataset
from folkstat.synth import SynthConfig, generate


def random_dataset(seed: int, n_users: int = 12, n_tags: int = 6, n_groups: int = 3, lenient: bool = True):
    """A small, densely connected random corpus with awkward text values."""
    rng = random.Random(seed)
    users = [(u, rng.random() < 0.3) for u in rng.sample(range(1, 10 * n_users), n_users)]
    ids = [u for u, _ in users]
    photos = []
    next_photo = rng.randrange(1, 50)
    for u in ids:
        for _ in range(rng.randrange(0, 4)):
            next_photo += rng.randrange(1, 3)
            photos.append((next_photo, u, rng.choice(["", "sunset", "Ünïcode ☃", "a,b \"q\""])))
    vocab = [f"tag{i}" for i in range(n_tags)] + ["Beach", " beach "]
    tags = [(p, rng.choice(vocab)) for p, _, _ in photos for _ in range(rng.randrange(0, 4))]
    contacts = {(a, b) for a in ids for b in ids if a != b and rng.random() < 0.15}
    photo_ids = [p for p, _, _ in photos]
    comments = [(i + 1, rng.choice(ids), rng.choice(photo_ids)) for i in range(rng.randrange(0, 20))] if photos else []
    favorites = {(rng.choice(ids), rng.choice(photo_ids)) for _ in range(rng.randrange(0, 15))} if photos else set()
    groups = [(g, f"group {g}") for g in range(1, n_groups + 1)]
    memberships = {(u, g) for u in ids for g, _ in groups if rng.random() < 0.5}
    pool = {(p, g) for p, o, _ in photos for g, _ in groups if (o, g) in memberships and rng.random() < 0.4}
    return build_dataset(users, groups, photos, tags, sorted(contacts), comments, sorted(favorites),
                         sorted(memberships), sorted(pool), strict=not lenient)


@pytest.fixture(scope="session")
def small_synth():
    return generate(SynthConfig(n_users=400, seed=7))


@pytest.fixture(scope="session")
def medium_synth():
    return generate(SynthConfig(n_users=3000, seed=1))


_verdicts: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by a test")


def pytest_runtest_logreport(report):
    tagged = dict(report.user_properties).get("criterion")
    if tagged is None or report.when == "teardown" or (report.when == "setup" and report.passed):
        return
    number, title = tagged
    _verdicts[number] = (title, "PASS" if report.passed else "FAIL")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", tuple(m.args)))


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_verdicts):
        title, verdict = _verdicts[number]
        terminalreporter.write_line(f"criterion {number} ({title}): {verdict}")
