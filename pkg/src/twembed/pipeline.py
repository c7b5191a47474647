"""Seeded experiment runs: chain, embed, verify and aggregate."""
from __future__ import annotations

import csv
import io
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from .chain import ClusteringChain, build_chain, verify_chain
from .cops import CopDecomposition, verify_cop_decomposition
from .cuts import CutFamily, verify_cut_family
from .embed import EmbeddingResult, embed, pair_distances, verify_embedding
from .generators import generate_graph
from .graph import GraphError, WeightedGraph, is_normalized, normalize
from .graphio import read_graph, write_json
from .report import Report
from .rng import RandomSource
from .shortcut import ShortcutPartition, verify_shortcut_partition


@dataclass
class ExperimentConfig:
    graph: str                      # edge-list path, or a generator spec such as grid(12,12)
    seeds: int = 1
    base_seed: int = 0
    r: int = 5
    epsilon: float = 0.5
    delta: float | None = None
    psi: int = 8
    tau: str = "auto"
    pairs: str = "edges"            # "edges" or "all"
    artifacts_dir: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.seeds < 0:
            raise GraphError("seed count must be nonnegative")
        if self.r < 3:
            raise GraphError("r must be at least 3")
        if self.psi < 1:
            raise GraphError("psi must be positive")
        if self.pairs not in ("edges", "all"):
            raise GraphError("pairs must be 'edges' or 'all'")


def load_graph(source: str) -> WeightedGraph:
    if Path(source).exists():
        return read_graph(source)
    return generate_graph(source)


def working_graph(g: WeightedGraph) -> WeightedGraph:
    """The chain and the embedding run on the normalized graph (minimum distance 1)."""
    if g.n <= 1 or is_normalized(g):
        return g
    return normalize(g)[0]


def _pairs(g: WeightedGraph, how: str):
    if how == "all":
        return [(u, v) for u in range(g.n) for v in range(u + 1, g.n)]
    return [(u, v) for u, v, _ in g.edges]


def run_seed(g: WeightedGraph, cfg: ExperimentConfig, seed: int) -> dict:
    rec: dict = {"seed": seed, "error": ""}
    try:
        rng = RandomSource(seed)
        chain = build_chain(g, cfg.r, rng.child("chain"))
        crep = verify_chain(g, chain)
        res = embed(g, cfg.r, cfg.psi, cfg.tau, rng, chain=chain, check_cuts=True)
        erep = verify_embedding(g, res, chain=chain)
        pairs = _pairs(g, cfg.pairs)
        base = pair_distances(g, pairs)
        host = pair_distances(res.host, pairs)
        ratios = [h / b for h, b in zip(host, base)]
        levels = []
        for i in range(chain.k + 1):
            cid = chain.cluster_of(i)
            levels.append([j for j, (u, v, _) in enumerate(g.edges) if cid[u] != cid[v]])
        rec.update(valid=crep.valid and erep.valid,
                   violations=len(crep.violations) + len(erep.violations),
                   first_violation=(crep.violations + erep.violations + [""])[0],
                   width=res.width, depth=res.depth, tau=res.tau, n_calls=len(res.calls),
                   calibration_events=len(res.calibration_events), h_hat=chain.hop_bound, k=chain.k,
                   mean_excess=sum(r - 1 for r in ratios) / len(ratios) if ratios else 0.0,
                   max_ratio=max(ratios, default=1.0), min_ratio=min(ratios, default=1.0),
                   _ratios=ratios, _cut_levels=levels)
        if cfg.artifacts_dir:
            d = Path(cfg.artifacts_dir)
            d.mkdir(parents=True, exist_ok=True)
            write_json(chain.to_dict(), d / f"chain-{seed}.json")
            art = res.to_dict()
            art["chain"] = chain.to_dict()
            write_json(art, d / f"embedding-{seed}.json")
    except Exception as e:  # recorded per seed, the sweep goes on
        rec.update(valid=False, error=f"{type(e).__name__}: {e}")
    return rec


def _run_one(args):
    return run_seed(*args)


def run_pipeline(cfg: ExperimentConfig) -> dict:
    """Run every seed and return ``{"config", "runs", "summary"}``; runs are sorted by seed."""
    g = working_graph(load_graph(cfg.graph))
    seeds = [cfg.base_seed + i for i in range(cfg.seeds)]
    jobs = [(g, cfg, s) for s in seeds]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            runs = list(ex.map(_run_one, jobs))
    else:
        runs = [_run_one(j) for j in jobs]
    runs.sort(key=lambda r: r["seed"])
    summary = summarize(g, runs)
    public = [{k: v for k, v in r.items() if not k.startswith("_")} for r in runs]
    config = asdict(cfg)
    del config["jobs"]  # parallelism never changes results
    return {"config": config, "graph": {"n": g.n, "m": g.m}, "runs": public, "summary": summary}


def summarize(g: WeightedGraph, runs: list[dict]) -> dict:
    ok = [r for r in runs if not r["error"]]
    out = {"runs": len(runs), "errors": len(runs) - len(ok),
           "invalid": sum(1 for r in runs if not r.get("valid", False))}
    if not ok:
        return out
    widths = [r["width"] for r in ok]
    out.update(width_min=min(widths), width_median=statistics.median(widths), width_max=max(widths),
               depth_max=max(r["depth"] for r in ok),
               calibration_events=sum(r["calibration_events"] for r in ok),
               h_hat=max(r["h_hat"] for r in ok))
    npairs = len(ok[0]["_ratios"])
    if npairs:
        means = [sum(r["_ratios"][i] for r in ok) / len(ok) for i in range(npairs)]
        excess = [sum(r["_ratios"][i] - 1 for i in range(npairs)) / npairs for r in ok]
        out.update(expected_distortion=max(means), mean_excess=sum(excess) / len(excess),
                   mean_excess_sd=statistics.pstdev(excess) if len(excess) > 1 else 0.0,
                   min_ratio=min(r["min_ratio"] for r in ok))
    # separating constant from the sampled chains: max over (edge, level) of freq * 2^i / len
    k = max(r["k"] for r in ok)
    beta = 0.0
    for i in range(k + 1):
        counts = [0] * g.m
        for r in ok:
            if i < len(r["_cut_levels"]):
                for j in r["_cut_levels"][i]:
                    counts[j] += 1
        for j, c in enumerate(counts):
            if c:
                beta = max(beta, c / len(ok) * 2 ** i / g.edges[j][2])
    out["beta_hat"] = beta
    return out


CSV_FIELDS = ["seed", "valid", "violations", "width", "depth", "tau", "n_calls", "calibration_events",
              "h_hat", "k", "mean_excess", "max_ratio", "min_ratio", "error"]


def runs_to_csv(runs: list[dict], extra: dict | None = None) -> str:
    buf = io.StringIO()
    fields = list(extra or {}) + CSV_FIELDS
    w = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in runs:
        row = dict(extra or {})
        row.update({k: _fmt(r.get(k, "")) for k in CSV_FIELDS})
        w.writerow(row)
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, float):
        return "inf" if math.isinf(x) else f"{x:.6g}"
    return x


def verify_artifact(art: dict, g: WeightedGraph) -> Report:
    """Dispatch on the artifact's ``kind``. Chain, cut-family and embedding artifacts
    are checked against the normalized graph, the others against ``g`` as given."""
    kind = art.get("kind")
    w = working_graph(g)
    if kind == "chain":
        return verify_chain(w, ClusteringChain.from_dict(art))
    if kind == "cop":
        return verify_cop_decomposition(g, CopDecomposition.from_dict(art))
    if kind == "shortcut":
        return verify_shortcut_partition(g, ShortcutPartition.from_dict(art))
    if kind == "cut-family":
        chain = ClusteringChain.from_dict(art["chain"])
        fam = CutFamily.from_dict(art)
        return verify_cut_family(w, chain, fam, [float(x) for x in art["weights"]])
    if kind == "embedding":
        chain = ClusteringChain.from_dict(art["chain"]) if "chain" in art else None
        return verify_embedding(w, EmbeddingResult.from_dict(art), chain=chain)
    raise GraphError(f"unknown artifact kind {kind!r}")

