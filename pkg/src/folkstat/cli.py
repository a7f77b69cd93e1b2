"""Command-line front end.

Every analysis verb reads a dataset directory (``--data``) and writes CSV to
standard output or to ``--csv``; diagnostics go to standard error.  Exit
codes: 0 success, 1 usage, 2 data or validation error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import logging
import sys
from pathlib import Path
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

from . import __version__
from .dataset import ACTIVITY_FIELDS, Dataset, IntegrityError, activity_table
from .errors import DataError, NumericError
from .groupgraph import DEFAULT_LOG_BASE, map_groups, tag_corpus_stats
from .harvest import Checkpoint, DatasetSource, DEFAULT_PAGE_SIZE, harvest
from .ingest import ParseError, load, save
from .metrics import (
    RELATION_KINDS, SEGMENTS, derive_relation, functionality_stats, gini,
    id_coverage_bound, intensity_scores, lorenz, reciprocity_rate, segment_users, top_sample,
)
from .svg import SvgLines, SvgScatter, emit_svg
from .synth import SynthConfig, generate
from .typology import activity_matrix, correlation_matrix, ols, pca, pca_project

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULT_REGRESSORS = ("photos", "comments_posted", "favorites_given", "groups", "contacts_out")
SVG_MAX_POINTS = 2000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def fmt(value: object) -> str:
    """Cell text: integers verbatim, reals to 6 significant digits, None empty."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".6g")
    return str(value)


def write_csv(rows: Iterable[Sequence[object]], header: Sequence[str], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])


class _Output:
    """CSV sink: the ``--csv`` file if given, else standard output."""

    def __init__(self, path: str | None, stdout: TextIO):
        self.path = path
        self.stdout = stdout

    def write(self, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
        if self.path is None:
            write_csv(rows, header, self.stdout)
            return
        buf = io.StringIO()
        write_csv(rows, header, buf)
        Path(self.path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def _load(args, stderr: TextIO) -> Dataset:
    d, report = load(args.data, mode=args.mode)
    for line in report.lines():
        print(line, file=stderr)
    return d


def _matrix(d: Dataset, args):
    users = top_sample(d, args.top) if args.top else None
    return activity_matrix(d, users=users, log1p=args.log1p)


def _downsample(xs: list[float], ys: list[float], limit: int = SVG_MAX_POINTS):
    if len(xs) <= limit:
        return xs, ys
    idx = np.unique(np.linspace(0, len(xs) - 1, limit).round().astype(int))
    return [xs[i] for i in idx], [ys[i] for i in idx]


# --- verbs --------------------------------------------------------------------

def cmd_ingest(args, out: _Output, stderr: TextIO) -> int:
    d = _load(args, stderr)
    if args.out:
        save(d, args.out)
    out.write(("table", "rows"), d.counts().items())
    return EXIT_OK


def cmd_stats(args, out, stderr):
    stats = functionality_stats(_load(args, stderr))
    header = ("functionality", "total", "mean_all", "mean_nonpro", "mean_pro",
              "pct_zero_all", "pct_zero_nonpro", "pct_zero_pro")
    out.write(header, stats.rows)
    return EXIT_OK


def cmd_segments(args, out, stderr):
    s = segment_users(_load(args, stderr))
    fr = s.fractions
    out.write(("segment", "users", "fraction"), [(k, s.counts[k], fr[k]) for k in SEGMENTS])
    return EXIT_OK


def cmd_lorenz(args, out, stderr):
    d = _load(args, stderr)
    values = activity_table(d)[args.of].astype(float)
    pro = np.fromiter((u.is_pro for u in d.users), dtype=bool, count=len(d.users))
    series = [("all", values), ("nonpro", values[~pro]), ("pro", values[pro])]
    summary, curves = [], []
    for name, v in series:
        if v.size == 0:
            summary.append((name, 0, 0, None))
            continue
        summary.append((name, v.size, int(v.sum()), gini(v)))
        curves.append((name, lorenz(v)))
    write_csv(summary, ("series", "n", "total", "gini"), out.stdout)
    if args.csv:
        rows = [(name, x, y) for name, c in curves for x, y in c.points]
        _Output(args.csv, out.stdout).write(("series", "population_fraction", "cumulative_share"), rows)
    if args.svg:
        chart = SvgLines([(name, *_downsample(c.xs(), c.ys())) for name, c in curves],
                         x_label="share of users", y_label=f"share of {args.of}",
                         title=f"Lorenz curve of {args.of}", diagonal=True,
                         x_range=(0.0, 1.0), y_range=(0.0, 1.0))
        emit_svg(chart, args.svg)
    return EXIT_OK


def cmd_coverage(args, out, stderr):
    d = _load(args, stderr)
    ids = [p.id for p in d.photos]
    coverage, bound = id_coverage_bound(ids)
    out.write(("photos", "min_id", "max_id", "coverage", "private_upper_bound"),
              [(len(ids), min(ids), max(ids), coverage, bound)])
    return EXIT_OK


def cmd_topsample(args, out, stderr):
    d = _load(args, stderr)
    ids, score = intensity_scores(d)
    by_id = dict(zip(ids.tolist(), score.tolist()))
    top = top_sample(d, args.k)
    out.write(("rank", "user_id", "intensity"), [(i + 1, u, by_id[u]) for i, u in enumerate(top)])
    return EXIT_OK


def cmd_reciprocity(args, out, stderr):
    d = _load(args, stderr)
    rows = []
    for kind in ([args.kind] if args.kind else RELATION_KINDS):
        r = derive_relation(d, kind)
        mutual = sum(1 for u, v in r.pairs if (v, u) in r.pairs)
        rows.append((kind, len(r), mutual, reciprocity_rate(r) if len(r) else None))
    out.write(("kind", "pairs", "reciprocated", "rate"), rows)
    return EXIT_OK


def cmd_corr(args, out, stderr):
    c = correlation_matrix(_matrix(_load(args, stderr), args))
    out.write(("variable", *c.columns), [(name, *row) for name, row in zip(c.columns, c.values.tolist())])
    return EXIT_OK


def cmd_pca(args, out, stderr):
    d = _load(args, stderr)
    users = top_sample(d, args.top) if args.top else [u.id for u in d.users]
    m = activity_matrix(d, users=users, log1p=args.log1p)
    r = pca(m, args.components)
    k = r.n_components
    comps = [f"pc{j + 1}" for j in range(k)]
    rows = [(name, *row) for name, row in zip(r.columns, r.loadings.tolist())]
    rows.append(("eigenvalue", *r.eigenvalues[:k].tolist()))
    rows.append(("variance_explained", *r.variance_explained.tolist()))
    out.write(("variable", *comps), rows)
    if args.scores or args.svg:
        scores = pca_project(r, m)
        if args.scores:
            _Output(args.scores, out.stdout).write(
                ("user_id", *comps), [(u, *s) for u, s in zip(users, scores.tolist())])
        if args.svg:
            if k < 2:
                raise UsageError("--svg needs at least 2 components")
            emit_svg(SvgScatter([(s[0], s[1], f"user {u}") for u, s in zip(users, scores.tolist())],
                                x_label="pc1", y_label="pc2", title="Principal component projection"),
                     args.svg)
    return EXIT_OK


def cmd_regress(args, out, stderr):
    m = _matrix(_load(args, stderr), args)
    regressors = tuple(s for s in args.regressors.split(",") if s)
    r = ols(m, args.response, regressors)
    rows = [("intercept", r.intercept)]
    rows += [(name, c) for name, c in zip(r.regressors, r.coefficients.tolist())]
    rows += [("r_squared", r.r_squared), ("n", m.n_rows)]
    out.write(("term", "value"), rows)
    return EXIT_OK


def cmd_groups(args, out, stderr):
    d = _load(args, stderr)
    results = map_groups(d, tag_corpus_stats(d), args.min_members, args.max_members,
                         args.log_base, args.include_nonedges, args.workers)
    out.write(("group_id", "members", "vertices", "social_density", "tag_dispersion"),
              [(r.group, r.members, r.vertices, r.social_density, r.tag_dispersion) for r in results])
    if args.svg:
        points = [(r.social_density, r.tag_dispersion, f"group {r.group}")
                  for r in results if r.social_density is not None and r.tag_dispersion is not None]
        emit_svg(SvgScatter(points, x_label="soc (social density)", y_label="thm (tag dispersion)",
                            title=f"Groups with {args.min_members}-{args.max_members} members"),
                 args.svg)
    return EXIT_OK


def cmd_synth(args, out, stderr):
    names = [f.name for f in dataclasses.fields(SynthConfig)]
    cfg = SynthConfig(**{n: getattr(args, n) for n in names})
    d = generate(cfg)
    save(d, args.out)
    out.write(("table", "rows"), d.counts().items())
    return EXIT_OK


def cmd_harvest(args, out, stderr):
    d, _ = load(args.data, mode="strict")
    src = DatasetSource(d, args.page_size)
    checkpoint = Checkpoint.read(args.workdir) if args.resume else None
    result, state = harvest(src, checkpoint, workdir=args.workdir, max_users=args.max_users)
    if args.out:
        save(result, args.out)
    if state.phase != "done":
        print(f"harvest: stopped in phase {state.phase} at {state.cursor}; resume with --resume",
              file=stderr)
    out.write(("table", "rows"), result.counts().items())
    return EXIT_OK


# --- parser ---------------------------------------------------------------------

def _data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, metavar="DIR", help="dataset directory (TSV tables)")
    p.add_argument("--mode", choices=("strict", "lenient"), default="strict",
                   help="strict rejects any malformed row; lenient skips and reports")


def _sample_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--log1p", action="store_true", help="use log(1 + count) values")
    p.add_argument("--top", type=int, default=0, metavar="K",
                   help="restrict to the K most intensive users (0: all users)")


def _csv_arg(p: argparse.ArgumentParser, what: str) -> None:
    p.add_argument("--csv", metavar="PATH", help=f"write {what} here instead of standard output")


def _synth_args(p: argparse.ArgumentParser) -> None:
    for f in dataclasses.fields(SynthConfig):
        p.add_argument("--" + f.name.replace("_", "-"), dest=f.name, type=type(f.default),
                       default=f.default, metavar=type(f.default).__name__.upper(),
                       help=f"default {f.default}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="folkstat", description="Usage analytics for photo-sharing corpora.")
    parser.add_argument("--version", action="version", version=f"folkstat {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    sub = parser.add_subparsers(dest="verb", metavar="VERB", parser_class=_Parser)
    sub.required = True

    def verb(name: str, fn: Callable, help: str, columns: str = "") -> argparse.ArgumentParser:
        epilog = f"CSV columns: {columns}" if columns else None
        p = sub.add_parser(name, help=help, description=help, epilog=epilog)
        p.set_defaults(fn=fn)
        return p

    p = verb("ingest", cmd_ingest, "validate a dataset directory and optionally rewrite it canonically",
             "table,rows")
    _data_args(p)
    p.add_argument("--out", metavar="DIR", help="write the validated dataset here")
    _csv_arg(p, "the table counts")

    p = verb("stats", cmd_stats, "per-functionality totals, means and zero shares",
             "functionality,total,mean_all,mean_nonpro,mean_pro,pct_zero_all,pct_zero_nonpro,pct_zero_pro")
    _data_args(p)
    _csv_arg(p, "the table")

    p = verb("segments", cmd_segments, "users split by photo publishing and communication",
             "segment,users,fraction")
    _data_args(p)
    _csv_arg(p, "the table")

    p = verb("lorenz", cmd_lorenz, "Lorenz curves and Gini coefficients of one activity count",
             "summary on standard output series,n,total,gini; "
             "--csv points series,population_fraction,cumulative_share")
    _data_args(p)
    p.add_argument("--of", choices=ACTIVITY_FIELDS, default="photos", help="activity count (default photos)")
    _csv_arg(p, "the curve points")
    p.add_argument("--svg", metavar="PATH", help="write the curves as SVG")

    p = verb("coverage", cmd_coverage, "photo id coverage and the private-photo upper bound",
             "photos,min_id,max_id,coverage,private_upper_bound")
    _data_args(p)
    _csv_arg(p, "the table")

    p = verb("topsample", cmd_topsample, "the most intensive users over all functionalities",
             "rank,user_id,intensity")
    _data_args(p)
    p.add_argument("--k", type=int, default=1000, help="sample size (default 1000)")
    _csv_arg(p, "the table")

    p = verb("reciprocity", cmd_reciprocity, "reciprocity of contacts, comments and favorites",
             "kind,pairs,reciprocated,rate")
    _data_args(p)
    p.add_argument("--kind", choices=RELATION_KINDS, help="one relation only (default all)")
    _csv_arg(p, "the table")

    p = verb("corr", cmd_corr, "Pearson correlations between activity counts",
             "variable,<one column per activity count>")
    _data_args(p)
    _sample_args(p)
    _csv_arg(p, "the matrix")

    p = verb("pca", cmd_pca, "principal components of the activity correlation matrix",
             "variable,pc1..pcK (loadings, then eigenvalue and variance_explained rows); "
             "--scores user_id,pc1..pcK")
    _data_args(p)
    _sample_args(p)
    p.add_argument("--components", type=int, default=3, help="retained components (default 3)")
    _csv_arg(p, "the loadings")
    p.add_argument("--scores", metavar="PATH", help="write per-user component scores as CSV")
    p.add_argument("--svg", metavar="PATH", help="write the pc1/pc2 projection as SVG")

    p = verb("regress", cmd_regress, "least-squares fit of one activity count on others",
             "term,value (intercept, one row per regressor, r_squared, n)")
    _data_args(p)
    _sample_args(p)
    p.add_argument("--response", choices=ACTIVITY_FIELDS, default="favorites_received")
    p.add_argument("--regressors", default=",".join(DEFAULT_REGRESSORS),
                   help="comma-separated activity counts (default %(default)s)")
    _csv_arg(p, "the fit")

    p = verb("groups", cmd_groups, "social density and tag dispersion of groups",
             "group_id,members,vertices,social_density,tag_dispersion")
    _data_args(p)
    p.add_argument("--min-members", type=int, default=433)
    p.add_argument("--max-members", type=int, default=500)
    p.add_argument("--include-nonedges", action="store_true",
                   help="count unlinked member pairs as zero weights in the dispersion")
    p.add_argument("--log-base", type=float, default=DEFAULT_LOG_BASE)
    p.add_argument("--workers", type=int, default=1, help="threads for per-group work")
    _csv_arg(p, "the table")
    p.add_argument("--svg", metavar="PATH", help="write the density/dispersion map as SVG")

    p = verb("synth", cmd_synth, "generate a synthetic dataset", "table,rows")
    p.add_argument("--out", required=True, metavar="DIR")
    _synth_args(p)
    _csv_arg(p, "the table counts")

    p = verb("harvest", cmd_harvest, "crawl a dataset directory through the paged mock source",
             "table,rows")
    p.add_argument("--data", required=True, metavar="DIR", help="dataset served by the mock source")
    p.add_argument("--out", metavar="DIR", help="write the harvested dataset here")
    p.add_argument("--workdir", required=True, metavar="DIR", help="checkpoint and partial tables")
    p.add_argument("--resume", action="store_true", help="continue from the checkpoint in --workdir")
    p.add_argument("--page-size", type=int, default=DEFAULT_PAGE_SIZE)
    p.add_argument("--max-users", type=int, help="stop after this many users (resumable)")
    _csv_arg(p, "the table counts")
    return parser


def run(argv: Sequence[str] | None = None, stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=stderr, end="")
        return EXIT_USAGE
    except SystemExit as exc:       # --help and --version
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    if args.verbose:
        logging.basicConfig(level=logging.INFO, stream=stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args, _Output(getattr(args, "csv", None), stdout), stderr)
    except UsageError as exc:
        print(f"folkstat {args.verb}: {exc}", file=stderr)
        return EXIT_USAGE
    except (ParseError, IntegrityError) as exc:
        report = exc.report
        for line in report.lines() if report is not None else [str(exc)]:
            print(line, file=stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"folkstat {args.verb}: numeric error: {exc}", file=stderr)
        return EXIT_NUMERIC
    except (DataError, OSError) as exc:
        print(f"folkstat {args.verb}: error: {exc}", file=stderr)
        return EXIT_DATA
    except ValueError as exc:       # out-of-range flag values
        print(f"folkstat {args.verb}: {exc}", file=stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
