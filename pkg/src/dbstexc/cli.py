"""Command-line interface: ``dbstexc {cluster,sweep,gen,bench,knn}``.

Every option can also come from a flat ``key = value`` file given with
``--config``; keys are the long flag names (``n-min`` or ``n_min``).  Flags
given on the command line win over the file.  List-valued keys are comma
separated in the file, except ``query`` which is ``|`` separated since
search terms may contain commas.

Exit codes: 0 on success, 1 when a runtime invariant check fails, 2 on
bad input (unreadable or malformed files, invalid parameters).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import _kernels
from .cluster import knn_distance_profile
from .evaluation import (
    ALGORITHMS,
    SWEEP_HEADER,
    SweepResult,
    SweepRow,
    SweepSpec,
    cluster_shapes,
    member_mask,
    run_algorithm,
    score,
    sweep,
)
from .geo import DEFAULT_RESOLUTION, Projection, disk_polygon
from .index import BackendKind, build
from .ingest import (
    DEFAULT_ETA,
    DEFAULT_R0,
    DEFAULT_STEP,
    PoiSpec,
    assemble_dataset,
    filter_consecutive_posts,
    parse_records,
    write_records,
)
from .model import NOISE, DbstexcError, InvariantViolation, TweetRecord
from .synthetic import DEFAULT_SIZES, GenSpec, generate, heterogeneity_spec, read_sizes, run_bench
from .svg import cluster_map, line_plot

log = logging.getLogger("dbstexc")

DEFAULT_ALPHAS = (0.0, 0.5, 0.75, 1.0)


def _latlon(value):
    if isinstance(value, (tuple, list)):
        lat, lon = value
    else:
        lat, lon = str(value).split(",")
    return float(lat), float(lon)


def _count(value):
    """An int, or the literal ``m`` (number of irrelevant points)."""
    return "m" if str(value).strip() == "m" else int(value)


def _bool(value):
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _split(sep, item):
    def conv(value):
        if isinstance(value, list):
            return [item(v) for v in value]
        return [item(v.strip()) for v in str(value).split(sep) if v.strip()]

    return conv


# name -> (converter, default); the converter parses both flag and file values
OPTIONS = {
    "input": (str, None),
    "format": (str, None),
    "out": (str, "."),
    "seed": (int, None),
    "poi_name": (str, "poi"),
    "poi_center": (_latlon, None),
    "query": (_split("|", str), None),
    "origin": (_latlon, None),
    "eta": (float, DEFAULT_ETA),
    "r0": (float, DEFAULT_R0),
    "step": (float, DEFAULT_STEP),
    "case_insensitive": (_bool, False),
    "filter_consecutive": (int, 0),
    "backend": (str, None),
    "tau": (float, 0.0),
    "resolution": (float, DEFAULT_RESOLUTION),
    "alpha": (_split(",", float), list(DEFAULT_ALPHAS)),
    "algorithm": (_split(",", str), None),
    "epsilon": (float, None),
    "n_min": (int, None),
    "n_max": (_count, None),
    "n_min1": (int, None),
    "n_min2": (int, None),
    "n_max1": (_count, None),
    "n_max2": (_count, None),
    "epsilons": (_split(",", float), None),
    "n_mins": (_split(",", int), None),
    "n_maxs": (_split(",", _count), None),
    "n_min1s": (_split(",", int), None),
    "n_min2s": (_split(",", int), None),
    "n_max1s": (_split(",", _count), None),
    "n_max2s": (_split(",", _count), None),
    "workers": (int, 1),
    "preset": (str, "heterogeneity"),
    "spec": (str, None),
    "keyword": (str, "Hyde Park"),
    "sizes": (str, None),
    "trials": (int, 3),
    "impl": (str, "auto"),
    "k": (int, 4),
    "relevant_only": (_bool, False),
}

PATH_OPTIONS = ("input", "spec", "sizes")


def read_config(path) -> dict:
    """Flat ``key = value`` file into a dict keyed by option name."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    with open(path, encoding="utf-8") as f:
        parser.read_string("[config]\n" + f.read(), source=str(path))
    out = {}
    for key, value in parser["config"].items():
        name = key.strip().replace("-", "_")
        if name not in OPTIONS:
            raise ValueError(f"{path}: unknown config key {key!r}")
        out[name] = value
    return out


def _flag(p, name, **kw):
    p.add_argument("--" + name.replace("_", "-"), dest=name, default=None, **kw)


def _add_common(p):
    p.add_argument("--config", default=None, help="flat key=value file")
    _flag(p, "out", help="output directory (default: current directory)")


def _add_input(p):
    _flag(p, "input", help="posts file (CSV or JSONL)")
    _flag(p, "format", choices=("csv", "jsonl"), help="input format (default: from the extension)")
    _flag(p, "poi_name")
    _flag(p, "poi_center", help="POI centre as LAT,LON")
    _flag(p, "query", action="append", help="search query; repeat for several")
    _flag(p, "origin", help="projection origin LAT,LON (default: POI centre)")
    _flag(p, "eta", help=f"query-region precision threshold (default {DEFAULT_ETA})")
    _flag(p, "r0", help=f"initial query radius in metres (default {DEFAULT_R0:g})")
    _flag(p, "step", help=f"query radius increment in metres (default {DEFAULT_STEP:g})")
    p.add_argument("--case-insensitive", dest="case_insensitive", action="store_const", const=True, default=None)
    _flag(p, "filter_consecutive", help="drop posts beyond this many consecutive ones per user (0: off)")


def _add_eval(p):
    _flag(p, "backend", help="range query backend: kd or linear (default kd)")
    _flag(p, "tau", help="fuzzy membership threshold for counting a point as clustered")
    _flag(p, "resolution", help="area raster cell size in metres")
    _flag(p, "alpha", action="append", help="area exponent; repeatable")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dbstexc", description="Text-aware density clustering of geo-tagged posts.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="cluster one parameter setting and write maps and labels")
    _add_common(p)
    _add_input(p)
    _add_eval(p)
    _flag(p, "algorithm", help="dbscan, dbstexc or f_dbstexc (default dbstexc)")
    for name in ("epsilon", "n_min", "n_max", "n_min1", "n_min2", "n_max1", "n_max2"):
        _flag(p, name)

    p = sub.add_parser("sweep", help="evaluate parameter grids")
    _add_common(p)
    _add_input(p)
    _add_eval(p)
    _flag(p, "algorithm", action="append", help="algorithm to sweep; repeatable")
    for name in ("epsilons", "n_mins", "n_maxs", "n_min1s", "n_min2s", "n_max1s", "n_max2s"):
        _flag(p, name, help="comma separated values" + (", 'm' for the irrelevant count" if "max" in name else ""))
    _flag(p, "workers", help="threads evaluating grid cells")

    p = sub.add_parser("gen", help="write a synthetic posts file")
    _add_common(p)
    _flag(p, "preset", choices=("heterogeneity", "uniform", "blob"))
    _flag(p, "spec", help="JSON generator spec (overrides --preset)")
    _flag(p, "seed")
    _flag(p, "keyword", help="text placed in every relevant post")
    _flag(p, "format", choices=("csv", "jsonl"))

    p = sub.add_parser("bench", help="time worst-case DBSTexC and fit log-log slopes")
    _add_common(p)
    _flag(p, "sizes", help="CSV with columns n,m[,regime]")
    _flag(p, "trials")
    _flag(p, "seed")
    _flag(p, "backend", help="range query backend (default linear)")
    _flag(p, "impl", choices=("auto", "compiled", "python"))

    p = sub.add_parser("knn", help="sorted k-th nearest neighbour distances")
    _add_common(p)
    _add_input(p)
    _flag(p, "k")
    p.add_argument("--relevant-only", dest="relevant_only", action="store_const", const=True, default=None)
    return parser


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Merge flags over config-file values over built-in defaults, converting types."""
    config = read_config(args.config) if args.config else {}
    out = argparse.Namespace(command=args.command, verbose=args.verbose, config=args.config)
    for name, (conv, default) in OPTIONS.items():
        flag = getattr(args, name, None)
        if flag is not None:
            value = conv(flag)
        elif name in config:
            value = conv(config[name])
            if name in PATH_OPTIONS and not os.path.isabs(value):
                # paths in a config file are relative to the file
                value = os.path.join(os.path.dirname(os.path.abspath(args.config)), value)
        else:
            value = default
        setattr(out, name, value)
    return out


# -- helpers ----------------------------------------------------------------


def _outdir(cfg) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(cfg):
    """Read, filter and classify the input; return ``(records, dataset, region)``."""
    if not cfg.input:
        raise ValueError("--input is required")
    if cfg.poi_center is None or not cfg.query:
        raise ValueError("--poi-center and at least one --query are required")
    records = parse_records(cfg.input, cfg.format)
    if cfg.filter_consecutive > 0:
        records = filter_consecutive_posts(records, cfg.filter_consecutive)
    poi = PoiSpec(cfg.poi_name, cfg.poi_center, tuple(cfg.query))
    proj = Projection.at(*(cfg.origin or poi.center))
    dataset, region = assemble_dataset(
        records, poi, cfg.eta, proj, cfg.r0, cfg.step, case_sensitive=not cfg.case_insensitive
    )
    return records, dataset, region


def _cluster_params(cfg, algorithm, m) -> dict:
    res = lambda v: m if v == "m" else v  # noqa: E731
    names = {"dbscan": ("epsilon", "n_min"), "dbstexc": ("epsilon", "n_min", "n_max")}
    names["f_dbstexc"] = ("epsilon", "n_min1", "n_min2", "n_max1", "n_max2")
    params = {}
    for name in names[algorithm]:
        value = getattr(cfg, name)
        if value is None:
            raise ValueError(f"{algorithm} needs --{name.replace('_', '-')}")
        params[name] = res(value)
    return params


def _ring_lonlat(proj, xy):
    lat, lon = proj.inverse(xy[:, 0], xy[:, 1])
    ring = [[float(a), float(b)] for a, b in zip(lon, lat)]
    ring.append(ring[0])
    return ring


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\r\n")
        w.writerow(header)
        w.writerows(rows)


def _region_xy(dataset, region):
    return tuple(map(float, Projection.at(*dataset.projection_origin).forward(*region.center)))


# -- subcommands ----------------------------------------------------------------


def cmd_cluster(cfg) -> int:
    records, dataset, region = _load(cfg)
    algorithm = (cfg.algorithm or ["dbstexc"])[0]
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    params = _cluster_params(cfg, algorithm, dataset.m)
    backend = build(dataset, cfg.backend or "kd")
    result = run_algorithm(algorithm, dataset, backend, params).check()
    if result.range_queries != dataset.n:
        raise InvariantViolation(f"{result.range_queries} range queries for {dataset.n} relevant points")
    out = _outdir(cfg)
    proj = Projection.at(*dataset.projection_origin)
    fuzzy = result.fuzzy_scores

    shapes = list(cluster_shapes(result, dataset, params["epsilon"], cfg.tau))
    features = []
    for label, kind, shape, members in shapes:
        ring = shape if kind == "hull" else disk_polygon(*shape)
        features.append({
            "type": "Feature",
            "geometry": {"type": "Polygon", "coordinates": [_ring_lonlat(proj, np.asarray(ring))]},
            "properties": {
                "cluster": label,
                "shape": kind,
                "members": int(len(members)),
                "relevant_members": int(np.count_nonzero(members < dataset.n)),
                "mean_mu": None if fuzzy is None else float(np.mean(fuzzy[members])),
            },
        })
    with open(out / "clusters.geojson", "w", encoding="utf-8") as f:
        json.dump({"type": "FeatureCollection", "features": features}, f, indent=1)
        f.write("\n")

    points = list(dataset.relevant) + list(dataset.irrelevant)
    rows = []
    for i in sorted(range(len(points)), key=lambda i: points[i].source_index):
        rec = records[points[i].source_index]
        label = int(result.labels[i])
        relevant = i < dataset.n
        rows.append([
            rec.id,
            "relevant" if relevant else "irrelevant",
            "noise" if label == NOISE else label,
            int(relevant and bool(result.core_flags[i])),
            "" if fuzzy is None else repr(float(fuzzy[i])),
        ])
    _write_csv(out / "labels.csv", ["id", "relevance", "cluster", "core", "mu"], rows)

    reports = [SweepRow(algorithm, params, score(result, dataset, region, a, params["epsilon"], cfg.resolution, cfg.tau))
               for a in cfg.alpha]
    _write_csv(out / "report.csv", SWEEP_HEADER, [r.as_csv() for r in reports])

    svg = cluster_map(
        dataset.relevant_xy, dataset.irrelevant_xy, [(k, s) for _, k, s, _ in shapes],
        _region_xy(dataset, region), region.radius, title=f"{algorithm} {cfg.poi_name}",
    )
    (out / "map.svg").write_text(svg, encoding="utf-8")
    mask = member_mask(result, cfg.tau)
    log.info("%d clusters, %d of %d points clustered", result.num_clusters, int(mask.sum()), len(mask))
    return 0


def cmd_sweep(cfg) -> int:
    _, dataset, region = _load(cfg)
    algorithms = cfg.algorithm or ["dbstexc"]
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}")
    if not cfg.epsilons:
        raise ValueError("--epsilons is required")
    spec = SweepSpec(
        epsilons=cfg.epsilons,
        n_mins=cfg.n_mins or (),
        n_maxs=cfg.n_maxs or (),
        n_min1s=cfg.n_min1s or (),
        n_min2s=cfg.n_min2s or (),
        n_max1s=cfg.n_max1s or (),
        n_max2s=cfg.n_max2s or (),
        alphas=cfg.alpha,
    )
    backend = build(dataset, cfg.backend or "kd")
    rows = []
    for a in algorithms:
        rows += sweep(dataset, backend, spec, a, region, cfg.resolution, cfg.tau, cfg.workers).rows
    result = SweepResult(rows)
    out = _outdir(cfg)
    result.write_csv(out / "sweep.csv")
    result.write_csv(out / "best.csv", result.best())
    for row in result.best():
        log.info("best %s alpha=%g: %.4f %s", row.algorithm, row.report.alpha, row.report.score, row.params)
    return 0


def _preset(name, seed) -> GenSpec:
    if name == "heterogeneity":
        return heterogeneity_spec(7 if seed is None else seed)
    seed = 0 if seed is None else seed
    if name == "uniform":
        return GenSpec(seed=seed, region_radius=1000.0, uniform_noise=(200, 800))
    if name == "blob":
        return GenSpec(seed=seed, region_radius=1000.0, relevant_blobs=(((0.0, 0.0), 150.0, 200),), uniform_noise=(20, 300))
    raise ValueError(f"unknown preset {name!r}")


def cmd_gen(cfg) -> int:
    if cfg.spec:
        with open(cfg.spec, encoding="utf-8") as f:
            data = json.load(f)
        if cfg.seed is not None:
            data["seed"] = cfg.seed
        spec = GenSpec.from_dict(data)
    else:
        spec = _preset(cfg.preset, cfg.seed)
    dataset = generate(spec)
    proj = Projection.at(*spec.origin)
    records = []
    xy = np.vstack([dataset.relevant_xy, dataset.irrelevant_xy])
    lat, lon = proj.inverse(xy[:, 0], xy[:, 1])
    width = len(str(len(xy)))
    for i in range(len(xy)):
        text = f"afternoon at {cfg.keyword}" if i < dataset.n else "out in the city"
        records.append(TweetRecord(f"p{i:0{width}d}", text, float(lat[i]), float(lon[i])))
    out = _outdir(cfg)
    fmt = cfg.format or "csv"
    path = out / f"dataset.{fmt}"
    write_records(records, path, fmt)
    with open(out / "genspec.json", "w", encoding="utf-8") as f:
        json.dump(spec.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    # a ready-made config for cluster/sweep on the generated file
    (out / "poi.cfg").write_text(
        f"input = {path.name}\npoi_name = synthetic\n"
        f"poi_center = {spec.origin[0]!r},{spec.origin[1]!r}\nquery = {cfg.keyword}\n",
        encoding="utf-8",
    )
    log.info("wrote %d relevant and %d irrelevant posts to %s", dataset.n, dataset.m, path)
    return 0


def cmd_bench(cfg) -> int:
    sizes = read_sizes(cfg.sizes) if cfg.sizes else DEFAULT_SIZES
    impls = _kernels.implementations()
    if cfg.impl == "auto":
        kernels = None
    elif cfg.impl in impls:
        kernels = impls[cfg.impl]
    else:
        raise ValueError(f"kernel implementation {cfg.impl!r} is not available")
    backend = BackendKind.parse(cfg.backend or "linear")
    report = run_bench(sizes, cfg.trials, backend, 0 if cfg.seed is None else cfg.seed, kernels)
    out = _outdir(cfg)
    report.write_csv(out / "bench.csv")
    report.write_summary(out / "summary.json")
    for reg, slope in report.slopes.items():
        log.info("regime %s: slope %.3f", reg, slope)
    return 0


def cmd_knn(cfg) -> int:
    if cfg.k < 1:
        raise ValueError("k must be >= 1")
    if cfg.poi_center is not None and cfg.query:
        _, dataset, _ = _load(cfg)
        xy = dataset.relevant_xy if cfg.relevant_only else np.vstack([dataset.relevant_xy, dataset.irrelevant_xy])
    else:
        if not cfg.input:
            raise ValueError("--input is required")
        if cfg.relevant_only:
            raise ValueError("--relevant-only needs --poi-center and --query")
        records = parse_records(cfg.input, cfg.format)
        lat = np.array([r.lat for r in records])
        lon = np.array([r.lon for r in records])
        if cfg.origin:
            origin = cfg.origin
        else:
            origin = (float(lat.mean()), float(lon.mean())) if len(records) else (0.0, 0.0)
        x, y = Projection.at(*origin).forward(lat, lon)
        xy = np.column_stack([x, y]).reshape(-1, 2)
    dists = knn_distance_profile(xy, cfg.k)
    out = _outdir(cfg)
    _write_csv(out / "knn.csv", ["rank", "distance"], [[i + 1, repr(float(d))] for i, d in enumerate(dists)])
    ranks = np.arange(1, len(dists) + 1)
    (out / "knn.svg").write_text(
        line_plot(ranks, dists, title=f"sorted {cfg.k}-NN distance", xlabel="rank", ylabel="distance (m)"),
        encoding="utf-8",
    )
    return 0


COMMANDS = {"cluster": cmd_cluster, "sweep": cmd_sweep, "gen": cmd_gen, "bench": cmd_bench, "knn": cmd_knn}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = resolve(args)
        return COMMANDS[cfg.command](cfg)
    except InvariantViolation as exc:
        print(f"dbstexc: invariant violated: {exc}", file=sys.stderr)
        return 1
    except (DbstexcError, OSError, ValueError, KeyError, configparser.Error) as exc:
        print(f"dbstexc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
