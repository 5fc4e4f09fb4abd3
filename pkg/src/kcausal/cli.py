"""Batch front door: CSV ingestion, causal scans, benchmark runs.

Outputs are JSON documents written atomically (temp file + rename), with
every float serialized at full round-trip precision. BLAS thread pools are
pinned to one thread for the duration of a run so documents are
byte-identical for a given seed on any machine configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .causality import CausalResult, ScanSettings, causal_scan, scan_lagged_blocks
from .embedding import TimeSeriesTable, standardize
from .errors import (
    ConfigError,
    KCausalError,
    NonNumericCell,
    ParseError,
    UnknownVariable,
)
from .kernel import KernelSpec
from .synth import SynthConfig, generate, generate_null, lagged_to_table

SCAN_FORMAT = "kcausal-scan/1"
BENCH_FORMAT = "kcausal-bench/1"

TIME_HEADERS = {"time", "t", "date", "index"}


@dataclass
class RunConfig:
    """Resolved configuration of one CLI invocation."""

    input: str | None = None
    blocks: dict[str, list[str]] | None = None
    target: str | None = None
    source: str | None = None
    condition: list[str] = field(default_factory=list)
    scan_all: bool = False
    lags: int = 4
    method: str = "kcc"
    kernel_width: float = 1.0
    ridge: float = 1e-7
    chol_tol: float = 1e-6
    z_ridge: float | None = None
    max_rank: int | None = 48
    kernel_mode: str = "additive"
    permutations: int = 1000
    perm_scheme: str = "iid"
    alpha: float = 0.001
    seed: int = 0
    standardize: bool = True
    out: str | None = None
    graph_out: str | None = None
    density_out: str | None = None
    bench_replicates: int = 0
    samples: int = 2000
    dims: int = 20
    jobs: int = 1

    def settings(self) -> ScanSettings:
        kernel = KernelSpec(
            width=self.kernel_width,
            ridge=self.ridge,
            chol_tol=self.chol_tol,
            z_ridge=self.z_ridge,
            max_rank=self.max_rank,
        )
        return ScanSettings(
            method=self.method,
            lags=self.lags,
            kernel=kernel,
            kernel_mode=self.kernel_mode,
            n_perm=self.permutations,
            perm_scheme=self.perm_scheme,
            alpha=self.alpha,
            seed=self.seed,
        )


def parse_block_spec(spec: str) -> dict[str, list[str]]:
    """Parse "A=a1,a2;B=b1,b2" into an ordered block mapping."""
    blocks: dict[str, list[str]] = {}
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ConfigError(f"bad block definition {part!r} (expected name=col1,col2)")
        name, cols = part.split("=", 1)
        name = name.strip()
        if name in blocks:
            raise ConfigError(f"duplicate block name {name!r}")
        blocks[name] = [c.strip() for c in cols.split(",") if c.strip()]
        if not blocks[name]:
            raise ConfigError(f"block {name!r} has no columns")
    if not blocks:
        raise ConfigError("empty block specification")
    return blocks


def ingest_csv(path: str, blocks: dict[str, list[str]] | None = None) -> TimeSeriesTable:
    """Read a UTF-8 CSV with a header row into a block-partitioned table.

    Rows are taken in file order as time order. The first column is treated
    as a time label when its header is not referenced by any block (or, with
    no block spec, when it is named like a time column). Cells that fail to
    parse raise :class:`NonNumericCell` with their exact 1-based location.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        header = [h.strip() for h in header]
        if len(header) != len(set(header)):
            raise ParseError("duplicate column names in header", line=1)

        claimed = {c for cols in (blocks or {}).values() for c in cols}
        if blocks is not None:
            time_col = header[0] not in claimed
        else:
            time_col = header[0].lower() in TIME_HEADERS
        data_names = header[1:] if time_col else header
        offset = 1 if time_col else 0

        rows: list[list[float]] = []
        labels: list[str] = []
        for line_no, raw in enumerate(reader, start=2):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != len(header):
                raise ParseError(
                    f"expected {len(header)} cells, found {len(raw)}", line=line_no
                )
            if time_col:
                labels.append(raw[0].strip())
            parsed = []
            for j, cell in enumerate(raw[offset:], start=offset + 1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise NonNumericCell(line=line_no, col=j) from None
                if not math.isfinite(parsed[-1]):
                    raise NonNumericCell(line=line_no, col=j)
            rows.append(parsed)

    if len(rows) < 2:
        raise ParseError("need at least two data rows")
    if blocks is None:
        blocks = {name: [name] for name in data_names}
    else:
        for cols in blocks.values():
            for c in cols:
                if c not in data_names:
                    raise UnknownVariable(c)
        covered = {c for cols in blocks.values() for c in cols}
        extra = [c for c in data_names if c not in covered]
        if extra:
            raise ConfigError(
                f"columns not assigned to any block: {', '.join(extra)}"
            )
    return TimeSeriesTable(
        values=np.asarray(rows, dtype=float),
        columns=list(data_names),
        blocks=blocks,
        time_index=labels or list(range(len(rows))),
    )


def _atomic_write(path: str, payload: str):
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _result_record(r: CausalResult, alpha: float) -> dict:
    p = r.p_perm if r.p_perm is not None else r.p_chi2
    excess = None
    if r.null_quantile_99 is not None and r.null_quantile_99 > 0:
        excess = (r.score - r.null_quantile_99) / r.null_quantile_99
    return {
        "source": r.source,
        "target": r.target,
        "lag": r.lag,
        "method": r.method,
        "score": r.score,
        "p_chi2": r.p_chi2,
        "p_perm": r.p_perm,
        "null_quantile_99": r.null_quantile_99,
        "excess_vs_null_q99": excess,
        "rank_score": r.rank_score,
        "correlations": [float(c) for c in r.correlations],
        "n_samples": r.n_samples,
        "significant": bool(p is not None and p <= alpha),
    }


def _scan_document(cfg: RunConfig, table: TimeSeriesTable, results) -> dict:
    return {
        "format": SCAN_FORMAT,
        "version": __version__,
        "config": {
            k: v for k, v in asdict(cfg).items()
            if k not in ("out", "graph_out", "density_out")
        },
        "blocks": {name: list(cols) for name, cols in sorted(table.blocks.items())},
        "alpha": cfg.alpha,
        "results": [_result_record(r, cfg.alpha) for r in results],
    }


def _graph_document(results, alpha: float) -> str:
    lines = ["digraph causality {"]
    nodes = sorted({r.source for r in results} | {r.target for r in results})
    for n in nodes:
        lines.append(f'  "{n}";')
    for rec in results:
        p = rec.p_perm if rec.p_perm is not None else rec.p_chi2
        if p is not None and p <= alpha:
            q = rec.null_quantile_99
            excess = (rec.score - q) / q if q else 0.0
            lines.append(
                f'  "{rec.source}" -> "{rec.target}" '
                f'[label="lag {rec.lag}", weight={excess!r}, rank_score={rec.rank_score!r}];'
            )
    lines.append("}")
    return "\n".join(lines) + "\n"


def _density_csv(table: TimeSeriesTable, target: str, lags: int) -> str:
    """Long-format pairs of the target at time t against every lagged variable."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["target_var", "lagged_var", "lag", "target_value", "lagged_value"])
    tgt = table.block_matrix(target)
    tgt_cols = table.blocks[target]
    t_len = table.n_times
    for block, cols in sorted(table.blocks.items()):
        mat = table.block_matrix(block)
        for lag in range(1, lags + 1):
            x = tgt[lag:]
            y = mat[: t_len - lag]
            for cj, cname in enumerate(cols):
                xj = x[:, min(cj, x.shape[1] - 1)]
                tname = tgt_cols[min(cj, len(tgt_cols) - 1)]
                for xv, yv in zip(xj, y[:, cj]):
                    writer.writerow([tname, cname, lag, repr(float(xv)), repr(float(yv))])
    return buf.getvalue()


def run_scan(cfg: RunConfig) -> dict:
    """Ingest, scan, and write the network document; returns the document."""
    if not cfg.input:
        raise ConfigError("scan mode needs --input")
    table = ingest_csv(cfg.input, cfg.blocks)
    settings = cfg.settings()
    if cfg.scan_all:
        work = table
    else:
        if not cfg.target or not cfg.source:
            raise ConfigError("need --target and --source (or --scan-all)")
        for name in (cfg.target, cfg.source, *cfg.condition):
            if name not in table.blocks:
                raise ConfigError(f"unknown block {name!r}")
        keep = {cfg.target, cfg.source, *cfg.condition} if cfg.condition else set(table.blocks)
        sub = {name: cols for name, cols in table.blocks.items() if name in keep}
        kept_cols = [c for cols in sub.values() for c in cols]
        idx = [table.columns.index(c) for c in kept_cols]
        work = TimeSeriesTable(
            values=table.values[:, idx], columns=kept_cols, blocks=sub,
            time_index=list(table.time_index),
        )
    if cfg.standardize or cfg.method == "kcc":
        work = standardize(work)
    pairs = None if cfg.scan_all else [(cfg.source, cfg.target)]
    results = causal_scan(work, settings, pairs=pairs)

    doc = _scan_document(cfg, table, results)
    payload = json.dumps(doc, indent=2, allow_nan=False)
    if cfg.out:
        _atomic_write(cfg.out, payload + "\n")
    if cfg.graph_out:
        _atomic_write(cfg.graph_out, _graph_document(results, cfg.alpha))
    if cfg.density_out:
        tgt = cfg.target or sorted(table.blocks)[0]
        _atomic_write(cfg.density_out, _density_csv(work, tgt, cfg.lags))
    return doc


def run_bench(cfg: RunConfig) -> dict:
    """Repeat generate + scan, reporting discovery rates and score spread."""
    if cfg.bench_replicates < 1:
        raise ConfigError("bench mode needs --bench-replicates >= 1")
    synth_cfg = SynthConfig(
        n_samples=cfg.samples, lags=max(cfg.lags, 4), dims=cfg.dims, seed=cfg.seed
    )
    settings = cfg.settings()

    def one(rep: int):
        rep_cfg = replace(synth_cfg, seed=synth_cfg.seed + rep)
        blocks = generate(rep_cfg)
        rep_settings = replace(settings, seed=settings.seed + rep)
        return scan_lagged_blocks(blocks, rep_settings)

    if cfg.jobs > 1:
        from joblib import Parallel, delayed

        all_runs = Parallel(n_jobs=cfg.jobs)(
            delayed(one)(r) for r in range(cfg.bench_replicates)
        )
    else:
        all_runs = [one(r) for r in range(cfg.bench_replicates)]

    links: dict[tuple[str, str, int], dict] = {}
    for run in all_runs:
        for r in run:
            key = (r.source, r.target, r.lag)
            entry = links.setdefault(key, {"scores": [], "hits": 0, "ranks": []})
            p = r.p_perm if r.p_perm is not None else r.p_chi2
            entry["scores"].append(r.score)
            entry["ranks"].append(r.rank_score)
            entry["hits"] += bool(p is not None and p <= cfg.alpha)

    rows = []
    for (src, tgt, lag), entry in sorted(links.items()):
        scores = np.asarray(entry["scores"])
        mean = float(scores.mean())
        sd = float(scores.std())
        rows.append({
            "source": src,
            "target": tgt,
            "lag": lag,
            "discovery_rate": entry["hits"] / len(all_runs),
            "score_mean": mean,
            "score_sd": sd,
            "score_cov": sd / mean if mean else None,
            "rank_score_mean": float(np.mean(entry["ranks"])),
        })
    doc = {
        "format": BENCH_FORMAT,
        "version": __version__,
        "replicates": cfg.bench_replicates,
        "config": {
            k: v for k, v in asdict(cfg).items()
            if k not in ("out", "graph_out", "density_out")
        },
        "links": rows,
    }
    if cfg.out:
        _atomic_write(cfg.out, json.dumps(doc, indent=2, allow_nan=False) + "\n")
    return doc


def emit_synth(cfg: RunConfig, path: str, null: bool = False) -> None:
    """Write a generated benchmark system as CSV in the scan input format."""
    synth_cfg = SynthConfig(
        n_samples=cfg.samples, lags=max(cfg.lags, 4), dims=cfg.dims, seed=cfg.seed
    )
    blocks = generate_null(synth_cfg) if null else generate(synth_cfg)
    matrix, names, _ = lagged_to_table(blocks)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in matrix:
        writer.writerow([repr(float(v)) for v in row])
    _atomic_write(path, buf.getvalue())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kcausal",
        description="Wiener-Granger causality scans via (kernel) partial canonical correlations",
    )
    p.add_argument("--input", help="input CSV (header row; rows in time order)")
    p.add_argument("--blocks", help="block spec, e.g. 'A=a1,a2;B=b1' (default: one block per column)")
    p.add_argument("--target", help="target block for a single test")
    p.add_argument("--source", help="source block for a single test")
    p.add_argument("--condition", help="comma-separated conditioning blocks (default: all others)")
    p.add_argument("--scan-all", action="store_true", help="test every ordered block pair")
    p.add_argument("--lags", type=int, default=4)
    p.add_argument("--method", choices=("cc", "kcc", "genvar"), default="kcc")
    p.add_argument("--kernel-width", type=float, default=1.0, help="Gaussian width per standardized coordinate")
    p.add_argument("--ridge", type=float, default=1e-7, help="kernel correlation penalization")
    p.add_argument("--chol-tol", type=float, default=1e-6, help="incomplete factorization residual threshold")
    p.add_argument("--z-ridge", type=float, default=None, help="conditioning inversion ridge (default: --ridge)")
    p.add_argument("--max-rank", type=int, default=48, help="kernel factor rank cap (0 disables)")
    p.add_argument("--kernel-mode", choices=("additive", "vector"), default="additive")
    p.add_argument("--permutations", type=int, default=1000, help="permutation replicates (0 disables)")
    p.add_argument("--perm-scheme", choices=("iid", "circular"), default="iid")
    p.add_argument("--alpha", type=float, default=0.001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-standardize", action="store_true", help="skip standardization for linear methods")
    p.add_argument("--out", help="output document path (default: stdout)")
    p.add_argument("--graph-out", help="write significant edges as a DOT graph")
    p.add_argument("--density-out", help="write (target, lagged variable) pair values as CSV")
    p.add_argument("--bench-replicates", type=int, default=0, help="run the synthetic benchmark this many times")
    p.add_argument("--samples", type=int, default=2000, help="synthetic rows (bench/emit modes)")
    p.add_argument("--dims", type=int, default=20, help="synthetic block dimension (bench/emit modes)")
    p.add_argument("--emit-synth", metavar="PATH", help="write a generated benchmark system as CSV")
    p.add_argument("--null", action="store_true", help="emit the all-noise twin instead")
    p.add_argument("--jobs", type=int, default=1, help="parallel benchmark replicates")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    blocks = parse_block_spec(args.blocks) if args.blocks else None
    condition = [c.strip() for c in args.condition.split(",") if c.strip()] if args.condition else []
    return RunConfig(
        input=args.input,
        blocks=blocks,
        target=args.target,
        source=args.source,
        condition=condition,
        scan_all=args.scan_all,
        lags=args.lags,
        method=args.method,
        kernel_width=args.kernel_width,
        ridge=args.ridge,
        chol_tol=args.chol_tol,
        z_ridge=args.z_ridge,
        max_rank=args.max_rank or None,
        kernel_mode=args.kernel_mode,
        permutations=args.permutations,
        perm_scheme=args.perm_scheme,
        alpha=args.alpha,
        seed=args.seed,
        standardize=not args.no_standardize,
        out=args.out,
        graph_out=args.graph_out,
        density_out=args.density_out,
        bench_replicates=args.bench_replicates,
        samples=args.samples,
        dims=args.dims,
        jobs=args.jobs,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=1):
            if args.emit_synth:
                emit_synth(cfg, args.emit_synth, null=args.null)
                return 0
            if cfg.bench_replicates > 0:
                doc = run_bench(cfg)
            else:
                doc = run_scan(cfg)
        if not cfg.out:
            json.dump(doc, sys.stdout, indent=2, allow_nan=False)
            sys.stdout.write("\n")
        return 0
    except (KCausalError, OSError, ValueError) as exc:
        record = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        json.dump(record, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
