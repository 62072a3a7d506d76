"""Count-file and config-file parsing, and TSV formatting helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from robust_scan.ldmodel import GeneticModel
from robust_scan.simulate import ScanConfig, TrueSnpSpec, preset_true_snps
from robust_scan.stats import DEFAULT_THRESHOLD, GenotypeCounts

COUNT_HEADER = ("snp_id", "r0", "r1", "r2", "s0", "s1", "s2")


class InputError(ValueError):
    """Unrecoverable problem with an input file; carries the line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"config key {key!r}: {message}")


def fmt(value) -> str:
    """12 significant digits; NA for missing or NaN."""
    if value is None:
        return "NA"
    if isinstance(value, (bool, str)):
        return str(value)
    if isinstance(value, int):
        return str(value)
    v = float(value)
    if math.isnan(v):
        return "NA"
    return f"{v:.12g}"


@dataclass
class CountFile:
    ids: list[str] = field(default_factory=list)
    rows: list[tuple[int, int, int, int, int, int]] = field(default_factory=list)
    # (line number, reason) for each skipped row
    skipped: list[tuple[int, str]] = field(default_factory=list)


def read_count_file(path: str | Path) -> CountFile:
    """Parse a tab-separated genotype count file.

    A missing or wrong header, or a duplicated ``snp_id``, raises
    :class:`InputError`.  Malformed data rows are collected in ``skipped``.
    """
    out = CountFile()
    seen: dict[str, int] = {}
    header_seen = False
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if not header_seen:
                if tuple(f.strip() for f in fields) != COUNT_HEADER:
                    raise InputError(
                        "expected header " + "\\t".join(COUNT_HEADER), lineno
                    )
                header_seen = True
                continue
            if len(fields) != len(COUNT_HEADER):
                out.skipped.append((lineno, f"expected 7 fields, got {len(fields)}"))
                continue
            snp_id = fields[0].strip()
            if not snp_id:
                out.skipped.append((lineno, "empty snp_id"))
                continue
            try:
                counts = tuple(int(f) for f in fields[1:])
                GenotypeCounts(*counts)
            except ValueError as exc:
                out.skipped.append((lineno, str(exc)))
                continue
            if snp_id in seen:
                raise InputError(
                    f"duplicate snp_id {snp_id!r} (first seen on line {seen[snp_id]})", lineno
                )
            seen[snp_id] = lineno
            out.ids.append(snp_id)
            out.rows.append(counts)
    return out


def write_count_file(path: str | Path, ids, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(COUNT_HEADER) + "\n")
        for snp_id, row in zip(ids, rows):
            fh.write("\t".join([snp_id, *(str(int(v)) for v in row)]) + "\n")


# ---------------------------------------------------------------------------
# key=value configs


def read_key_values(path: str | Path) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError("expected key = value", lineno)
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise InputError("empty key", lineno)
            if key in values:
                raise ConfigError(key, f"repeated on line {lineno}")
            values[key] = value
    return values


def _convert(key: str, raw: str, kind):
    try:
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(key, f"cannot parse {raw!r}: {exc}") from None


def _float_list(key: str, raw: str) -> list[float]:
    return [_convert(key, item.strip(), float) for item in raw.split(",") if item.strip()]


def _pair(key: str, raw: str) -> tuple[float, float]:
    items = _float_list(key, raw)
    if len(items) != 2:
        raise ConfigError(key, "expected two comma-separated numbers")
    return items[0], items[1]


def parse_true_snps(key: str, raw: str) -> list[TrueSnpSpec]:
    """Either ``preset:MIX:GRR:DPRIME`` or a comma-separated list of
    ``MODEL:maf_marker:maf_functional:lambda2_star:d_prime``; empty means none."""
    raw = raw.strip()
    if not raw or raw.lower() == "none":
        return []
    parts = raw.split(":")
    try:
        if parts[0].strip().lower() == "preset":
            if len(parts) not in (4, 5):
                raise ValueError("preset form is preset:MIX:GRR:DPRIME[:FUNCTIONAL_MAF]")
            q = float(parts[4]) if len(parts) == 5 else None
            return preset_true_snps(parts[1].strip(), float(parts[2]), float(parts[3]), q)
        specs = []
        for item in raw.split(","):
            fields = [f.strip() for f in item.split(":")]
            if len(fields) != 5:
                raise ValueError(f"expected 5 ':'-separated fields in {item.strip()!r}")
            specs.append(
                TrueSnpSpec(GeneticModel.parse(fields[0]), *(float(f) for f in fields[1:]))
            )
        return specs
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from None


SCAN_KEYS = {
    "total_snps": int,
    "true_snps": parse_true_snps,
    "null_maf_range": _pair,
    "cases": int,
    "controls": int,
    "prevalence": float,
    "replicates": int,
    "top_l": int,
    "seed": int,
    "threshold": float,
}

SELECTION_KEYS = {
    "maf_grid": _float_list,
    "model_grid": None,
    "d_prime_grid": _float_list,
    "prevalence": float,
    "lambda2_star": float,
    "cases": int,
    "controls": int,
    "replicates": int,
    "seed": int,
    "threshold": float,
}

SELECTION_DEFAULTS = {
    "maf_grid": [0.1, 0.3, 0.5],
    "model_grid": ["REC", "ADD", "MUL", "DOM"],
    "d_prime_grid": [1.0, 0.8, 0.6],
    "prevalence": 0.1,
    "lambda2_star": 2.0,
    "cases": 250,
    "controls": 250,
    "replicates": 10_000,
    "seed": 0,
    "threshold": DEFAULT_THRESHOLD,
}


def _check_keys(values: dict[str, str], allowed) -> None:
    for key in values:
        if key not in allowed:
            raise ConfigError(key, "unknown key")


def parse_scan_config(values: dict[str, str]) -> ScanConfig:
    _check_keys(values, SCAN_KEYS)
    if "total_snps" not in values:
        raise ConfigError("total_snps", "required")
    kwargs = {}
    for key, raw in values.items():
        kind = SCAN_KEYS[key]
        if kind in (int, float):
            kwargs[key] = _convert(key, raw, kind)
        else:
            kwargs[key] = kind(key, raw)
    kwargs.setdefault("true_snps", [])
    try:
        return ScanConfig(**kwargs)
    except ValueError as exc:
        # ScanConfig messages lead with the offending field name
        first = str(exc).split()[0]
        raise ConfigError(first if first in SCAN_KEYS else "true_snps", str(exc)) from None


def parse_selection_config(values: dict[str, str]) -> dict:
    _check_keys(values, SELECTION_KEYS)
    out = dict(SELECTION_DEFAULTS)
    for key, raw in values.items():
        kind = SELECTION_KEYS[key]
        if key == "model_grid":
            try:
                out[key] = [GeneticModel.parse(m).value for m in raw.split(",") if m.strip()]
            except ValueError as exc:
                raise ConfigError(key, str(exc)) from None
        elif kind in (int, float):
            out[key] = _convert(key, raw, kind)
        else:
            out[key] = kind(key, raw)
    for key in ("maf_grid", "model_grid", "d_prime_grid"):
        if not out[key]:
            raise ConfigError(key, "grid must be nonempty")
    for key in ("cases", "controls", "replicates"):
        if out[key] <= 0:
            raise ConfigError(key, "must be positive")
    for maf in out["maf_grid"]:
        if not 0 < maf < 1:
            raise ConfigError("maf_grid", f"MAF {maf} outside (0, 1)")
    for dp in out["d_prime_grid"]:
        if not -1 <= dp <= 1:
            raise ConfigError("d_prime_grid", f"D' {dp} outside [-1, 1]")
    if not 0 < out["prevalence"] < 1:
        raise ConfigError("prevalence", "must lie in (0, 1)")
    if out["lambda2_star"] < 1:
        raise ConfigError("lambda2_star", "must be >= 1")
    return out


def describe_true_snp(spec: TrueSnpSpec) -> str:
    return ":".join(
        [spec.model.value, fmt(spec.maf_marker), fmt(spec.maf_functional),
         fmt(spec.grr_lambda2_star), fmt(spec.d_prime)]
    )


def scan_config_lines(cfg: ScanConfig) -> list[str]:
    """Resolved config as key = value lines (re-parseable)."""
    return [
        f"total_snps = {cfg.total_snps}",
        "true_snps = " + ",".join(describe_true_snp(s) for s in cfg.true_snps),
        f"null_maf_range = {fmt(cfg.null_maf_range[0])},{fmt(cfg.null_maf_range[1])}",
        f"cases = {cfg.cases}",
        f"controls = {cfg.controls}",
        f"prevalence = {fmt(cfg.prevalence)}",
        f"replicates = {cfg.replicates}",
        f"top_l = {cfg.top_l}",
        f"seed = {cfg.seed}",
        f"threshold = {fmt(cfg.threshold)}",
    ]


def selection_config_lines(cfg: dict) -> list[str]:
    lines = []
    for key in SELECTION_DEFAULTS:
        value = cfg[key]
        if isinstance(value, list):
            value = ",".join(v if isinstance(v, str) else fmt(v) for v in value)
        else:
            value = fmt(value)
        lines.append(f"{key} = {value}")
    return lines
