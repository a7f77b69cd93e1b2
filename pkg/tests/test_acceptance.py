"""Acceptance suite: one test per criterion, at the stated tolerance.

A one-line PASS/FAIL verdict per criterion is printed in the terminal
summary (see ``pytest_terminal_summary`` in conftest.py).
"""

import io
import math
import random
import time

import numpy as np
import pytest

from conftest import random_dataset
from malformed import MALFORMED, write_malformed
from oracles import gini_pairwise_np, group_indicators_bruteforce, lorenz_area, pearson, power_eigenvalues
from folkstat.cli import run
from folkstat.dataset import build_dataset
from folkstat.groupgraph import edge_weight, group_indicators, rarity, tag_corpus_stats, thematic_graph
from folkstat.harvest import Checkpoint, DatasetSource, harvest
from folkstat.ingest import canonical_bytes, load, save
from folkstat.metrics import derive_relation, gini, id_coverage_bound, lorenz, reciprocity_rate
from folkstat.synth import SynthConfig, generate
from folkstat.typology import SingularDesign, VariableMatrix, correlation_matrix, ols, pca

criterion = pytest.mark.criterion


@criterion(1, "Gini oracle equivalence")
def test_c1_gini_oracle_equivalence():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for k in range(1000):
        n = int(rng.integers(1, 201))
        kind = k % 4
        if kind == 0:
            x = rng.integers(0, 50, n).astype(float)
        elif kind == 1:
            x = rng.pareto(1.2, n)
        elif kind == 2:
            x = np.where(rng.random(n) < 0.7, 0.0, rng.exponential(10, n))
        else:
            x = rng.random(n)
        if x.sum() == 0:
            x[0] = 1.0
        g = gini_pairwise_np(x)
        # twice the area between the diagonal and the trapezoid curve
        worst = max(worst, abs(g - 2 * (0.5 - lorenz_area(x))), abs(g - 2 * (0.5 - lorenz(x).area_below())),
                    abs(g - gini(x)))
    elapsed = time.perf_counter() - start
    print(f"criterion 1: max deviation {worst:.3g}, {elapsed:.2f} s")
    assert worst <= 1e-9
    assert elapsed < 5


@criterion(2, "group-scheme oracle")
def test_c2_group_scheme_oracle():
    worst = 0.0
    checked = 0
    for seed in range(50):
        rng = random.Random(seed)
        d = random_dataset(seed, n_users=rng.randint(2, 20), n_tags=rng.randint(1, 6), n_groups=rng.randint(1, 3))
        assert len(d.users) <= 20 and len({t.tag for t in d.tags}) <= 8 and len(d.groups) <= 3
        if not d.tags:
            continue
        stats = tag_corpus_stats(d)
        photos = [(p.id, p.owner) for p in d.photos]
        tags = [(t.photo, t.tag) for t in d.tags]
        contacts = {(c.src, c.dst) for c in d.contacts}
        for g in d.groups:
            members = d.members_by_group.get(g.id, ())
            vertices, weights, density, dispersion = group_indicators_bruteforce(photos, tags, contacts, members)
            tg = thematic_graph(d, stats, g.id)
            assert tg.vertices == tuple(vertices)
            for (u, v), w in weights.items():
                worst = max(worst, abs(tg.weight(u, v) - w))
            gi = group_indicators(d, stats, g.id)
            assert (gi.social_density is None) == (density is None)
            assert (gi.tag_dispersion is None) == (dispersion is None)
            if density is not None:
                worst = max(worst, abs(gi.social_density - density))
            if dispersion is not None:
                worst = max(worst, abs(gi.tag_dispersion - dispersion))
            checked += 1
    # worked example: n_a = 4 = n_max, n_b = 2; u has a twice and b once, v has a once
    d = build_dataset(users=[(1, 0), (2, 0), (3, 0)],
                      photos=[(10, 1), (11, 1), (12, 1), (20, 2), (30, 3), (31, 3)],
                      tags=[(10, "a"), (11, "a"), (12, "b"), (20, "a"), (30, "a"), (31, "b")])
    worked = edge_weight(tag_corpus_stats(d), 1, 2)
    print(f"criterion 2: {checked} groups, max deviation {worst:.3g}, worked example {worked!r}")
    assert checked >= 50
    assert worst <= 1e-12
    assert worked == 1.0


@criterion(3, "rarity anchor")
def test_c3_rarity_anchor():
    corpora = [generate(SynthConfig(n_users=n, seed=s)) for n, s in [(200, 1), (1000, 2), (3000, 3)]]
    corpora += [random_dataset(s) for s in range(20)]
    anchored = 0
    for d in corpora:
        if not d.tags:
            continue
        stats = tag_corpus_stats(d)
        for tag, n in stats.photos_per_tag.items():
            if n == stats.n_max:
                assert rarity(stats, tag) == 1.0
                anchored += 1
            else:
                assert rarity(stats, tag) > 1.0
    print(f"criterion 3: {anchored} most-used tags, all with rarity exactly 1")
    assert anchored >= len(corpora) - 1


@criterion(4, "PCA checks")
def test_c4_pca():
    start = time.perf_counter()
    worst_sum = worst_orth = worst_oracle = 0.0
    for seed in range(30):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((500, 8))
        if seed % 2:
            x = x @ rng.standard_normal((8, 8))
        m = VariableMatrix(x, tuple(f"v{i}" for i in range(8)))
        r = pca(m, 8)
        worst_sum = max(worst_sum, abs(r.eigenvalues.sum() - 8))
        worst_orth = max(worst_orth, float(np.max(np.abs(r.eigenvectors.T @ r.eigenvectors - np.eye(8)))))
        oracle = sorted(power_eigenvalues(correlation_matrix(m).values), reverse=True)
        worst_oracle = max(worst_oracle, float(np.max(np.abs(r.eigenvalues - oracle))))
    worst_two = 0.0
    for seed in range(20):
        rng = np.random.default_rng(100 + seed)
        a = rng.standard_normal(300)
        b = rng.uniform(-1, 1) * a + rng.standard_normal(300)
        rho = pearson(a.tolist(), b.tolist())
        r = pca(VariableMatrix(np.column_stack([a, b]), ("a", "b")), 2)
        worst_two = max(worst_two, abs(r.eigenvalues[0] - (1 + abs(rho))), abs(r.eigenvalues[1] - (1 - abs(rho))))
    elapsed = time.perf_counter() - start
    print(f"criterion 4: sum {worst_sum:.2g}, orthonormality {worst_orth:.2g}, 2x2 {worst_two:.2g}, "
          f"power iteration {worst_oracle:.2g}, {elapsed:.2f} s")
    assert worst_sum <= 1e-9 and worst_orth <= 1e-9 and worst_two <= 1e-9
    assert worst_oracle <= 1e-6
    assert elapsed < 10


@criterion(5, "OLS checks")
def test_c5_ols():
    worst_coef = worst_r2 = worst_orth = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 6))
        x = rng.standard_normal((200, k)) * rng.uniform(0.1, 10, k)
        beta = rng.uniform(-5, 5, k)
        names = tuple(f"x{i}" for i in range(k))
        exact = ols(VariableMatrix(np.column_stack([x, x @ beta + 2.5]), names + ("y",)), "y", names)
        worst_coef = max(worst_coef, float(np.max(np.abs(exact.coefficients - beta))), abs(exact.intercept - 2.5))
        worst_r2 = max(worst_r2, abs(exact.r_squared - 1.0))
        y = x @ beta + rng.standard_normal(200) * 3
        noisy = ols(VariableMatrix(np.column_stack([x, y]), names + ("y",)), "y", names)
        resid = y - noisy.predict(x)
        worst_orth = max(worst_orth, float(np.max(np.abs(x.T @ resid))), abs(resid.sum()))
    x = np.random.default_rng(0).standard_normal(50)
    with pytest.raises(SingularDesign):
        ols(VariableMatrix(np.column_stack([x, x, 3 * x + 1]), ("a", "b", "y")), "y", ["a", "b"])
    print(f"criterion 5: coefficients {worst_coef:.2g}, R^2 {worst_r2:.2g}, orthogonality {worst_orth:.2g}, "
          "duplicated column raises SingularDesign")
    assert worst_coef <= 1e-8 and worst_r2 == 0.0 and worst_orth <= 1e-8


@criterion(6, "reciprocity")
def test_c6_reciprocity():
    symmetric = [(1, 2), (2, 1), (2, 3), (3, 2), (1, 3), (3, 1)]
    assert reciprocity_rate(symmetric) == 1.0
    assert reciprocity_rate([("a", "b"), ("b", "a"), ("a", "c")]) == 2 / 3
    d = build_dataset(users=[(1, 0), (2, 0), (3, 0)], photos=[(10, 2), (11, 2), (12, 1)],
                      comments=[(1, 1, 10), (2, 1, 10), (3, 1, 11), (4, 2, 12), (5, 3, 12), (6, 3, 12)])
    r = derive_relation(d, "commented")
    assert r.pairs == {(1, 2), (2, 1), (3, 1)}
    assert reciprocity_rate(r) == 2 / 3
    print("criterion 6: symmetric 1.0, three-edge example 2/3, repeated comments collapse to one pair")


@criterion(7, "harvest completeness")
def test_c7_harvest(tmp_path):
    start = time.perf_counter()
    boundaries = 0
    for seed in range(20):
        d = generate(SynthConfig(n_users=5 + seed, seed=seed, n_groups=3, photo_zero_nonpro=0.3,
                                 group_zero_nonpro=0.5, contact_zero_nonpro=0.3))
        expected = canonical_bytes(d)
        page = 1 + seed % 4
        full, cp = harvest(DatasetSource(d, page), workdir=tmp_path / f"{seed}-full")
        assert cp.phase == "done" and canonical_bytes(full) == expected
        for k in range(1, len(d.users) + 1):
            work = tmp_path / f"{seed}-{k}"
            _, cp = harvest(DatasetSource(d, page), workdir=work, max_users=k)
            resumed, cp = harvest(DatasetSource(d, page), Checkpoint.read(work))
            assert cp.phase == "done" and canonical_bytes(resumed) == expected
            boundaries += 1
    elapsed = time.perf_counter() - start
    print(f"criterion 7: 20 datasets byte-identical, {boundaries} interrupt points resumed, {elapsed:.2f} s")
    assert elapsed < 30


@criterion(8, "id-gap estimator")
def test_c8_id_gap():
    d = generate(SynthConfig(n_users=20_000, seed=8, photo_id_skip=0.33))
    ids = [p.id for p in d.photos]
    _, bound = id_coverage_bound(ids)
    print(f"criterion 8: {len(ids)} ids, private upper bound {bound:.4f}")
    assert len(ids) >= 100_000
    assert abs(bound - 0.33) <= 0.01


def _pipeline(root):
    outputs = {}

    def cli(*argv):
        out, err = io.StringIO(), io.StringIO()
        code = run(list(argv), out, err)
        assert code == 0, (argv, err.getvalue())
        outputs[argv] = out.getvalue()

    data = str(root / "corpus")
    start = time.perf_counter()
    cli("synth", "--out", data, "--n-users", "50000", "--seed", "42")
    cli("stats", "--data", data)
    cli("segments", "--data", data)
    cli("corr", "--data", data)
    cli("pca", "--data", data)
    cli("regress", "--data", data)
    cli("groups", "--data", data, "--min-members", "20", "--max-members", "1000",
        "--csv", str(root / "groups.csv"), "--svg", str(root / "groups.svg"))
    elapsed = time.perf_counter() - start
    cli("lorenz", "--data", data)
    files = {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
    return elapsed, outputs, files


@criterion(9, "end-to-end pipeline")
def test_c9_pipeline(tmp_path):
    elapsed, outputs, files = _pipeline(tmp_path / "one")
    _, again, files_again = _pipeline(tmp_path / "two")
    segments = [line.split(",") for line in outputs[("segments", "--data", str(tmp_path / "one" / "corpus"))]
                .splitlines()[1:]]
    total = math.fsum(int(row[1]) for row in segments) / 50_000
    fraction_sum = math.fsum(float(row[2]) for row in segments)
    lorenz_rows = dict(line.split(",", 1) for line in
                       outputs[("lorenz", "--data", str(tmp_path / "one" / "corpus"))].splitlines()[1:])
    g_all, g_pro = (float(lorenz_rows[k].split(",")[-1]) for k in ("all", "pro"))
    reproducible = list(outputs.values()) == list(again.values()) and \
        list(files.values()) == list(files_again.values())
    print(f"criterion 9: {elapsed:.1f} s, gini all {g_all:.4f} > pro {g_pro:.4f}, "
          f"segments sum {fraction_sum:.6f}, reproducible {reproducible}")
    assert elapsed < 60
    assert g_all > g_pro
    assert total == 1.0 and abs(fraction_sum - 1) < 1e-5
    assert reproducible


@criterion(10, "ingest round-trip")
def test_c10_ingest(tmp_path):
    for seed in range(20):
        d = random_dataset(1000 + seed, n_users=random.Random(seed).randint(1, 40))
        first, second = tmp_path / f"{seed}a", tmp_path / f"{seed}b"
        save(d, first)
        loaded, _ = load(first)
        save(loaded, second)
        for f in sorted(first.iterdir()):
            assert (second / f.name).read_bytes() == f.read_bytes()
        assert canonical_bytes(loaded) == canonical_bytes(d)
    located = 0
    for i, (filename, body, line) in enumerate(MALFORMED):
        root = tmp_path / f"bad{i}"
        root.mkdir()
        write_malformed(root, filename, body)
        err = io.StringIO()
        assert run(["ingest", "--data", str(root)], io.StringIO(), err) == 2
        assert f"{filename}:{line}:" in err.getvalue()
        located += 1
    print(f"criterion 10: 20 round trips byte-identical, {located} malformed fixtures exit 2 with file:line")
