"""robust-scan command line: scan count files, test one table, map GRRs
across LD, and run the simulation studies."""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import math
import sys
from contextlib import contextmanager
from functools import partial

import numpy as np

from robust_scan import __version__
from robust_scan import io as rio
from robust_scan import stats as st
from robust_scan.errors import DegenerateTableError
from robust_scan.ldmodel import AlleleFreqs, GeneticModel, marker_model
from robust_scan.nulldist import BootstrapConfig, bootstrap_pvalue, min2_pvalue
from robust_scan.parallel import ordered_map, resolve_workers
from robust_scan.simulate import (
    RANK_METHODS,
    rank_keys,
    ranks_from_keys,
    run_model_selection_study,
    run_scan,
)

log = logging.getLogger("robust_scan")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DEGENERATE = 3

SCAN_CHUNK = 10_000
METHOD_ALIASES = {
    "catt": "CATT",
    "catt_half": "CATT",
    "z": "CATT",
    "pearson": "PEARSON",
    "max3": "MAX3",
    "min2": "MIN2",
    "gms": "GMS",
}


class UsageError(Exception):
    pass


def _header_line(command: str, timestamp: bool) -> list[str]:
    line = f"# robust-scan {__version__} {command}"
    if timestamp:
        now = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()
        line += f" generated={now}"
    return [line]


@contextmanager
def _open_output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _parse_methods(raw: str) -> list[str]:
    methods = []
    for item in raw.split(","):
        item = item.strip().lower()
        if not item:
            continue
        if item not in METHOD_ALIASES:
            raise UsageError(f"unknown method {item!r}; choose from catt, pearson, max3, min2, gms")
        m = METHOD_ALIASES[item]
        if m not in methods:
            methods.append(m)
    if not methods:
        raise UsageError("at least one method is required")
    return methods


def _row_seed(seed: int, index: int) -> int:
    ss = np.random.SeedSequence(seed % 2**64, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def _safe_min2_pvalue(m: float) -> float:
    if math.isnan(m):
        return math.nan
    if m <= 0.0:
        return 0.0
    return min2_pvalue(m)


def _chunk_stats(bounds, cases, controls, threshold):
    lo, hi = bounds
    return st.compute_all(cases[lo:hi], controls[lo:hi], threshold)


def _concat_arrays(parts: list[st.TableArrays]) -> st.TableArrays:
    cat = np.concatenate
    return st.TableArrays(
        z0=cat([p.z0 for p in parts]),
        zh=cat([p.zh for p in parts]),
        z1=cat([p.z1 for p in parts]),
        pearson=cat([p.pearson for p in parts]),
        pearson_df=cat([p.pearson_df for p in parts]),
        hwdtt=cat([p.hwdtt for p in parts]),
        max3=cat([p.max3 for p in parts]),
        min2=cat([p.min2 for p in parts]),
        gms=st.GmsArrays(*(cat([getattr(p.gms, f) for p in parts]) for f in st.GmsArrays._fields)),
    )


def _method_statistic(arrays: st.TableArrays, method: str) -> np.ndarray:
    return {
        "CATT": arrays.zh,
        "PEARSON": arrays.pearson,
        "MAX3": arrays.max3,
        "MIN2": arrays.min2,
        "GMS": arrays.gms.statistic,
    }[method]


def _bootstrap_one(task, replicates, threshold):
    index, row, method, seed = task
    c = st.GenotypeCounts(*row)
    try:
        return bootstrap_pvalue(c, method, BootstrapConfig(replicates, seed), threshold, workers=1)
    except DegenerateTableError:
        return math.nan


def cmd_scan(args) -> int:
    methods = _parse_methods(args.methods)
    if args.top is not None and args.top <= 0:
        raise UsageError("--top must be positive")
    if args.bootstrap is not None and args.bootstrap < 100:
        raise UsageError("--bootstrap needs at least 100 replicates")
    try:
        data = rio.read_count_file(args.input)
    except rio.InputError as exc:
        print(f"error: {args.input}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for lineno, reason in data.skipped:
        print(f"warning: line {lineno}: skipped malformed row: {reason}", file=sys.stderr)
    if data.skipped:
        print(f"warning: {len(data.skipped)} malformed row(s) skipped", file=sys.stderr)
    if not data.rows:
        print("error: no usable rows", file=sys.stderr)
        return EXIT_DEGENERATE

    counts = np.array(data.rows, dtype=np.int64)
    cases, controls = counts[:, :3], counts[:, 3:]
    bounds = [(lo, min(lo + SCAN_CHUNK, len(counts))) for lo in range(0, len(counts), SCAN_CHUNK)]
    parts = ordered_map(
        partial(_chunk_stats, cases=cases, controls=controls, threshold=args.threshold), bounds
    )
    arrays = _concat_arrays(parts)

    stat_cols = {m: _method_statistic(arrays, m) for m in methods}
    usable = np.zeros(len(counts), dtype=bool)
    for m in methods:
        usable |= ~np.isnan(stat_cols[m])
    if not usable.any():
        print("error: no usable rows (all rows degenerate)", file=sys.stderr)
        return EXIT_DEGENERATE

    keys = {m: rank_keys(arrays, m) for m in methods}
    ranks = {m: ranks_from_keys(keys[m]) for m in methods}

    pvals: dict[str, np.ndarray] = {}
    if "CATT" in methods:
        pvals["CATT"] = arrays.catt_p
    if "PEARSON" in methods:
        pvals["PEARSON"] = arrays.pearson_p
    if "MIN2" in methods:
        pvals["MIN2"] = np.array(ordered_map(_safe_min2_pvalue, arrays.min2.tolist()))
    if args.bootstrap is not None:
        for m in ("MAX3", "GMS"):
            if m not in methods:
                continue
            tasks = [
                (i, tuple(int(v) for v in counts[i]), m, _row_seed(args.seed, i))
                for i in range(len(counts))
            ]
            out = ordered_map(
                partial(_bootstrap_one, replicates=args.bootstrap, threshold=args.threshold), tasks
            )
            pvals[m] = np.where(np.isnan(stat_cols[m]), np.nan, np.array(out, dtype=float))

    header = ["snp_id"]
    for m in methods:
        lm = m.lower()
        header += [f"{lm}_stat", f"{lm}_key", f"{lm}_rank"]
    p_methods = [m for m in methods if m in pvals]
    header += [f"{m.lower()}_p" for m in p_methods]
    if "GMS" in methods:
        header.append("gms_model")

    order = np.argsort(ranks[methods[0]], kind="stable")
    if args.top is not None:
        order = order[: args.top]
    model_names = {-1: "NA", 0: "REC", 1: "ADDMUL", 2: "DOM"}
    with _open_output(args.output) as out:
        for line in _header_line("scan", not args.no_header_timestamp):
            out.write(line + "\n")
        out.write(f"# methods={','.join(m.lower() for m in methods)} rows={len(counts)} "
                  f"skipped={len(data.skipped)}"
                  + (f" bootstrap={args.bootstrap} seed={args.seed}" if args.bootstrap else "")
                  + "\n")
        out.write("\t".join(header) + "\n")
        for i in order:
            fields = [data.ids[i]]
            for m in methods:
                key = keys[m][i]
                fields += [
                    rio.fmt(stat_cols[m][i]),
                    "NA" if np.isneginf(key) else rio.fmt(key),
                    str(int(ranks[m][i])),
                ]
            fields += [rio.fmt(pvals[m][i]) for m in p_methods]
            if "GMS" in methods:
                fields.append(model_names[int(arrays.gms.model[i])])
            out.write("\t".join(fields) + "\n")
    return EXIT_OK


def _single_table_values(c: st.GenotypeCounts, threshold: float, bootstrap, seed) -> dict:
    """All statistics for one table, in output order; undefined values are None."""
    values: dict[str, object] = {}

    def attempt(fn):
        try:
            return fn()
        except DegenerateTableError:
            return None

    for label, x in (("CATT0", 0.0), ("CATT_HALF", 0.5), ("CATT1", 1.0)):
        res = attempt(lambda x=x: st.catt(c, x))
        values[label] = res.statistic if res else None
        values[f"{label}_P"] = res.p_value if res else None
    res = attempt(lambda: st.pearson(c))
    values["PEARSON"] = res.statistic if res else None
    values["PEARSON_P"] = res.p_value if res else None
    res = attempt(lambda: st.max3(c))
    values["MAX3"] = res.statistic if res else None
    if bootstrap:
        values["MAX3_P"] = attempt(
            lambda: bootstrap_pvalue(c, st.Method.MAX3, BootstrapConfig(bootstrap, seed), threshold)
        )
    res = attempt(lambda: st.min2(c))
    values["MIN2"] = res.statistic if res else None
    values["MIN2_P"] = _safe_min2_pvalue(res.statistic) if res else None
    res = attempt(lambda: st.hwdtt(c))
    values["HWDTT"] = res.statistic if res else None
    values["HWDTT_P"] = res.p_value if res else None
    g = attempt(lambda: st.gms(c, threshold))
    values["GMS"] = g.statistic if g else None
    values["GMS_MODEL"] = g.selected_model.value if g else None
    values["GMS_ORIENTED"] = g.oriented if g else None
    if bootstrap:
        values["GMS_P"] = attempt(
            lambda: bootstrap_pvalue(c, st.Method.GMS, BootstrapConfig(bootstrap, seed), threshold)
        )
    if None not in (values["PEARSON"], values["CATT_HALF"], values["HWDTT"]):
        residual = values["PEARSON"] - values["CATT_HALF"] ** 2 - values["HWDTT"] ** 2
        log.debug("pearson - z_half^2 - z_hwdtt^2 = %.6g", residual)
    return values


def cmd_test(args) -> int:
    try:
        c = st.GenotypeCounts(args.r0, args.r1, args.r2, args.s0, args.s1, args.s2)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.bootstrap is not None and args.bootstrap < 100:
        raise UsageError("--bootstrap needs at least 100 replicates")
    values = _single_table_values(c, args.threshold, args.bootstrap, args.seed)
    with _open_output(args.output) as out:
        if args.json:
            clean = {
                k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in values.items()
            }
            out.write(json.dumps(clean, sort_keys=False) + "\n")
        else:
            for key, value in values.items():
                out.write(f"{key}={rio.fmt(value)}\n")
    return EXIT_OK


def cmd_grr_map(args) -> int:
    try:
        model = GeneticModel.parse(args.model)
        f = marker_model(model, args.lambda2_star, AlleleFreqs(args.p, args.q), args.d_prime, args.k)
        grr = f.grr()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    values = {
        "model": model.value,
        "lambda1": grr.lambda1,
        "lambda2": grr.lambda2,
        "f0": f.f0,
        "f1": f.f1,
        "f2": f.f2,
    }
    with _open_output(args.output) as out:
        if args.json:
            out.write(json.dumps(values) + "\n")
        else:
            for key, value in values.items():
                out.write(f"{key}={rio.fmt(value)}\n")
    return EXIT_OK


def _write_ranking(out, report) -> None:
    cols = ["method", "prob_at_least_one", "avg_true_in_top", "mean_min_rank",
            "replicates_with_hit", "replicates", "n_true", "top_l"]
    out.write("\t".join(cols) + "\n")
    for method in RANK_METHODS:
        c = report.methods[method]
        out.write("\t".join([
            method,
            rio.fmt(c.prob_at_least_one),
            rio.fmt(c.avg_true_in_top),
            rio.fmt(c.mean_min_rank),
            str(c.replicates_with_hit),
            str(report.replicates),
            str(report.n_true),
            str(report.top_l),
        ]) + "\n")


def _write_selection(out, report) -> None:
    cols = ["maf", "true_model", "d_prime", "rec", "addmul", "dom", "n_rec", "n_addmul", "n_dom"]
    out.write("\t".join(cols) + "\n")
    for cell in report.cells:
        out.write("\t".join(
            [rio.fmt(cell.maf), cell.model.value, rio.fmt(cell.d_prime)]
            + [rio.fmt(f) for f in cell.frequencies]
            + [str(n) for n in cell.counts]
        ) + "\n")


def cmd_simulate(args) -> int:
    try:
        values = rio.read_key_values(args.config)
        if args.seed is not None:
            values["seed"] = str(args.seed)
        if args.study == "ranking":
            cfg = rio.parse_scan_config(values)
            config_lines = rio.scan_config_lines(cfg)
        else:
            sel = rio.parse_selection_config(values)
            config_lines = rio.selection_config_lines(sel)
    except (rio.ConfigError, rio.InputError) as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.study == "ranking":
        report = run_scan(cfg)
    else:
        report = run_model_selection_study(
            sel["maf_grid"], sel["model_grid"], sel["d_prime_grid"],
            k=sel["prevalence"], lambda2_star=sel["lambda2_star"],
            r=sel["cases"], s=sel["controls"], replicates=sel["replicates"],
            seed=sel["seed"], threshold=sel["threshold"],
        )
    with _open_output(args.output) as out:
        for line in _header_line(f"simulate study={args.study}", not args.no_header_timestamp):
            out.write(line + "\n")
        for line in config_lines:
            out.write(f"# {line}\n")
        if args.study == "ranking":
            _write_ranking(out, report)
        else:
            _write_selection(out, report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robust-scan",
        description="Robust case-control association tests and genome-scan simulations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common_output(p):
        p.add_argument("--output", "-o", default=None, help="output path (default stdout)")

    p = sub.add_parser("scan", help="rank all SNPs of a genotype count file")
    p.add_argument("input", help="TSV with header snp_id r0 r1 r2 s0 s1 s2")
    p.add_argument("--methods", default="catt,pearson,max3,min2,gms",
                   help="comma-separated: catt, pearson, max3, min2, gms (first one sorts)")
    p.add_argument("--top", type=int, default=None, help="only write the top N rows")
    p.add_argument("--bootstrap", type=int, default=None, metavar="N",
                   help="bootstrap MAX3/GMS p-values with N replicates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=st.DEFAULT_THRESHOLD)
    p.add_argument("--no-header-timestamp", action="store_true")
    common_output(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("test", help="all statistics for a single 2x3 table")
    for name in ("r0", "r1", "r2", "s0", "s1", "s2"):
        p.add_argument(f"--{name}", type=int, required=True)
    p.add_argument("--bootstrap", type=int, default=None, metavar="N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=st.DEFAULT_THRESHOLD)
    p.add_argument("--json", action="store_true")
    common_output(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("grr-map", help="marker GRRs induced by a functional-locus model")
    p.add_argument("--model", required=True, help="REC, ADD, MUL or DOM")
    p.add_argument("--lambda2-star", type=float, required=True)
    p.add_argument("--p", type=float, required=True, help="marker risk allele frequency")
    p.add_argument("--q", type=float, required=True, help="functional risk allele frequency")
    p.add_argument("--d-prime", type=float, required=True)
    p.add_argument("--k", type=float, required=True, help="disease prevalence")
    p.add_argument("--json", action="store_true")
    common_output(p)
    p.set_defaults(func=cmd_grr_map)

    p = sub.add_parser("simulate", help="run a simulation study from a key=value config")
    p.add_argument("config")
    p.add_argument("--study", required=True, choices=("ranking", "model-selection"))
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--no-header-timestamp", action="store_true")
    common_output(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        try:
            resolve_workers()
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
