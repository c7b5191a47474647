"""End-to-end acceptance checks. Each test prints one PASS/FAIL line; the lines are
collected and repeated in the terminal summary. Run standalone with
``python tests/test_acceptance.py``."""
import functools
import json
import math
import random
import statistics
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from conftest import brute_components, brute_distance, random_connected  # noqa: E402

from twembed.chain import (  # noqa: E402
    build_chain,
    estimate_separating_beta,
    level_ratio,
    verify_chain,
)
from twembed.cops import build_cop_decomposition, verify_cop_decomposition  # noqa: E402
from twembed.cuts import (  # noqa: E402
    build_cut_family,
    contraction_sequence_from_chain,
    effective_conforming,
    grid_contraction_sequence,
    net_points,
    sample_cut,
    verify_contraction_sequence,
)
from twembed.embed import embed, measure_distortion, pair_distances, verify_embedding  # noqa: E402
from twembed.generators import grid, random_planar  # noqa: E402
from twembed.graph import all_pairs_distances  # noqa: E402
from twembed.graphio import dump_json  # noqa: E402
from twembed.pipeline import ExperimentConfig, run_pipeline, verify_artifact  # noqa: E402
from twembed.rng import RandomSource  # noqa: E402
from twembed.shortcut import shortcut_partition, verify_low_hop, verify_shortcut_partition  # noqa: E402
from twembed.treewidth import SeparatorRequest, exact_treewidth, weighted_balanced_separator  # noqa: E402

RESULTS: list[str] = []

SEEDS = 100
C_TAU = "auto:0.0003"   # scales auto tau down to the 12x12 grid; doubling does the rest
R = 5


def verdict(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


@functools.lru_cache(maxsize=None)
def embedding_runs(psi: int) -> list[dict]:
    g = grid(12, 12)
    out = []
    for seed in range(SEEDS):
        t0 = time.perf_counter()
        rng = RandomSource(seed)
        ch = build_chain(g, R, rng.child("chain"))
        res = embed(g, R, psi, C_TAU, rng, chain=ch, check_cuts=True)
        rep = verify_embedding(g, res, chain=ch)
        secs = time.perf_counter() - t0
        edges = [(u, v) for u, v, _ in g.edges]
        ratios = [h / b for h, b in zip(pair_distances(res.host, edges), pair_distances(g, edges))]
        out.append({"seed": seed, "chain": ch, "res": res, "report": rep, "secs": secs,
                    "excess": sum(x - 1 for x in ratios) / len(ratios)})
    return out


def test_chain_validity():
    g = grid(12, 12)
    t0 = time.perf_counter()
    bad = []
    for seed in range(50):
        rep = verify_chain(g, build_chain(g, R, RandomSource(seed)))
        if not rep.valid:
            bad.append((seed, rep.violations[0]))
    secs = time.perf_counter() - t0
    verdict("chain validity", not bad and secs <= 60,
            f"50 chains on 12x12, {len(bad)} invalid, {secs:.1f}s (limit 60s)")


def test_cop_decomposition():
    g = grid(10, 10)
    t0 = time.perf_counter()
    bad = 0
    for seed in range(200):
        if not verify_cop_decomposition(g, build_cop_decomposition(g, 3, R, RandomSource(seed))).valid:
            bad += 1
    secs = time.perf_counter() - t0
    verdict("cop decomposition", bad == 0 and secs <= 120,
            f"200 builds on 10x10 (delta=3, r=5), {bad} invalid, {secs:.1f}s (limit 120s)")


def test_shortcut_diameter_and_low_hop():
    graphs = {"grid10": grid(10, 10), "grid12": grid(12, 12)}
    for s in range(2):
        graphs[f"planar150-{s}"] = random_planar(150, s)
    bad = []
    checked = 0
    worst_h = 0.0
    for name, g in graphs.items():
        for eps in (0.5, 0.25):
            for seed in range(5):
                sp = shortcut_partition(g, eps, R, RandomSource(seed))
                rep = verify_shortcut_partition(g, sp)
                low = verify_low_hop(g, sp)
                checked += 1
                st = low.stats
                worst_h = max(worst_h, st.get("h_hat", math.inf))
                if not rep.valid or not low.valid or st["quotient_hop_diameter"] > st["h_hat"] + 1:
                    bad.append((name, eps, seed))
    verdict("shortcut diameter and low-hop", not bad,
            f"{checked} partitions (n <= 150, eps in {{1/2, 1/4}}), {len(bad)} failing, "
            f"max measured h_hat {worst_h:.2f}")


def test_separating_scaling():
    g = grid(8, 8)
    rng = RandomSource(0)
    a = estimate_separating_beta(g, R, 250, rng, seeds=range(250))
    b = estimate_separating_beta(g, R, 250, rng, seeds=range(250, 500))
    k = len(a.frequency) - 1
    freq = [{e: (a.frequency[i][e] + b.frequency[i][e]) / 2 for e in a.frequency[i]} for i in range(k + 1)]
    lengths = {(u, v): ln for u, v, ln in g.edges}
    beta = max(f * 2 ** i / lengths[e] for i in range(k + 1) for e, f in freq[i].items())
    bound_ok = all(f <= beta * lengths[e] / 2 ** i + 1e-12 for i in range(k + 1) for e, f in freq[i].items())
    agree = max(a.beta_hat, b.beta_hat) <= 1.5 * min(a.beta_hat, b.beta_hat)
    medians = [statistics.median(f.values()) for f in freq]
    comb = type(a)(500, freq, beta, medians, max(a.hop_bound, b.hop_bound))
    ratios = [x for x in level_ratio(comb) if not math.isnan(x)]
    law = bool(ratios) and all(0.3 <= x <= 0.8 for x in ratios)
    verdict("separating scaling", bound_ok and agree and law,
            f"beta_hat {beta:.2f} (batches {a.beta_hat:.2f} / {b.beta_hat:.2f}, agree within 1.5: {agree}); "
            f"level median ratios {[round(x, 3) for x in ratios]} (need all in [0.3, 0.8])")


def test_cut_families():
    runs = embedding_runs(8)
    families = 0
    broken = 0
    for run in runs:
        for c in run["res"].calls:
            if c["case"] != "base":
                families += 1
                if c.get("family_violations"):
                    broken += 1
    # replay the root state of one run: all vertices are terminals, nothing is protected
    run = runs[0]
    g, ch, res = grid(12, 12), run["chain"], run["res"]
    fam = build_cut_family(g, ch, {v: 1.0 for v in range(g.n)}, set(), res.psi, res.tau)
    nodes = ch.nodes()
    protect = effective_conforming(ch, 0, set())
    tracked = sorted({x for cut in fam.cuts for x in cut.clusters
                      if len(nodes[x].vertices) > 1 and x not in protect})
    draws = 1000
    rng = RandomSource(12345)
    counts = dict.fromkeys(tracked, 0)
    for _ in range(draws):
        for x in sample_cut(fam, rng).clusters:
            if x in counts:
                counts[x] += 1
    p = 1 / res.psi
    limit = p + 3 * math.sqrt(p * (1 - p) / draws)
    top = max(counts.values(), default=0) / draws
    verdict("cut families", broken == 0 and top <= limit,
            f"{families} families over {len(runs)} runs, {broken} with violations; replay of "
            f"{len(tracked)} tracked clusters, max frequency {top:.3f} <= {limit:.3f}")


def test_contraction_sequences():
    bad = 0
    emitted = 0
    net_fail = 0
    for run in embedding_runs(8):
        ch = run["chain"]
        g = grid(12, 12)
        nodes = ch.nodes()
        big = {nd.id for nd in nodes if len(nd.vertices) > 1}
        fam = build_cut_family(g, ch, [1.0] * g.n, set(), 8, run["res"].tau, adaptive=True, tau_cap=g.n)
        used = {x for cut in fam.cuts for x in cut.clusters}
        for unav in ({0}, big, used | {0}):
            q0, seq = contraction_sequence_from_chain(g, ch, unav)
            emitted += 1
            if not verify_contraction_sequence(q0, seq).valid:
                bad += 1
            if seq.c == 1 and seq.b > 0 and len(net_points(q0, 18 * seq.b)) > seq.a / seq.b:
                net_fail += 1
    ratios = []
    for p in (2, 3, 4):
        for q in (1, 2, 3):
            g, seq = grid_contraction_sequence(p, q)
            emitted += 1
            if not verify_contraction_sequence(g, seq).valid:
                bad += 1
            if len(net_points(g, 18 * seq.b)) > seq.a / seq.b:
                net_fail += 1
            ratios.append(seq.a / (p * p * (q + math.log2(p))))
    c0 = max(ratios)
    verdict("contraction sequences", bad == 0 and net_fail == 0,
            f"{emitted} sequences, {bad} invalid, {net_fail} net-bound failures; grid sweep fits "
            f"a <= c0 p^2 (q + log2 p) with c0 = {c0:.3f} (ratios {min(ratios):.3f}..{c0:.3f})")


def test_embedding_invariants():
    runs = embedding_runs(8)
    invalid = [r["seed"] for r in runs if not r["report"].valid]
    slow = max(r["secs"] for r in runs)
    res = [r["res"] for r in runs]
    verdict("embedding invariants", not invalid and slow <= 10,
            f"{len(runs)} runs on 12x12 (psi=8, tau {C_TAU}), {len(invalid)} invalid; "
            f"width max {max(x.width for x in res)}, depth max {max(x.depth for x in res)}, "
            f"tau max {max(x.tau for x in res)}, slowest run {slow:.2f}s (limit 10s)")


def test_distortion_trend():
    lo, hi = embedding_runs(4), embedding_runs(16)
    e4 = [r["excess"] for r in lo]
    e16 = [r["excess"] for r in hi]
    m4, m16 = statistics.mean(e4), statistics.mean(e16)
    sigma = math.sqrt(statistics.variance(e4) / len(e4) + statistics.variance(e16) / len(e16))
    g = grid(12, 12)
    st = measure_distortion(g, [r["res"] for r in lo + hi])
    # tau = 36 puts all 144 vertices in the base case
    base = embed(g, R, 4, 36, RandomSource(0))
    pairs = [(u, v) for u in range(g.n) for v in range(u + 1, g.n)]
    exact = measure_distortion(g, [base], pairs)
    ok = m16 <= m4 + 2 * sigma and st.min_ratio >= 1 - 1e-9 and exact.expected_distortion == 1.0 \
        and exact.min_ratio == 1.0
    verdict("distortion trend", ok,
            f"mean excess psi=4 {m4:.4f}, psi=16 {m16:.4f} (2 sigma {2 * sigma:.4f}); "
            f"min ratio {st.min_ratio:.4f}; base case distortion {exact.expected_distortion}")


def test_oracles():
    tw = exact_treewidth(grid(4, 4))
    rng = random.Random(7)
    disagree = 0
    misses = 0
    for _ in range(100):
        n = rng.randint(2, 12)
        g = random_connected(n, rng.randint(0, 2 * n), rng)
        w = [float(rng.randint(0, 3)) for _ in range(n)]
        if sum(w) == 0:
            w[0] = 1.0
        cap = rng.randint(1, 4)
        total = sum(w)
        seps = {}
        for m in ("exhaustive", "heuristic"):
            s = weighted_balanced_separator(g, SeparatorRequest(w, cap), method=m)
            if s is not None and (len(s) > cap or any(
                    sum(w[v] for v in c) > total / 2 + 1e-9 for c in brute_components(g, s))):
                disagree += 1
            seps[m] = s
        if seps["heuristic"] is not None and seps["exhaustive"] is None:
            disagree += 1
        if seps["heuristic"] is None and seps["exhaustive"] is not None:
            misses += 1
    sp_bad = 0
    for s in range(30):
        g = random_planar(rng.randint(2, 9), s)
        d = all_pairs_distances(g)
        for u in range(g.n):
            for v in range(g.n):
                if abs(d[u][v] - brute_distance(g, u, v)) > 1e-9:
                    sp_bad += 1
    verdict("oracle agreement", tw == 4 and disagree == 0 and sp_bad == 0,
            f"treewidth(4x4) = {tw}; separators on 100 random graphs: {disagree} validity "
            f"disagreements, heuristic misses {misses}; brute-force distance mismatches {sp_bad}")


def test_determinism_and_round_trip():
    cfg = ExperimentConfig("grid(8,8)", seeds=3, psi=4, tau=C_TAU)
    same = dump_json(run_pipeline(cfg)) == dump_json(run_pipeline(cfg))
    g = grid(8, 8)
    rng = RandomSource(3)
    ch = build_chain(g, R, rng.child("chain"))
    res = embed(g, R, 4, C_TAU, rng, chain=ch)
    fam = build_cut_family(g, ch, [1.0] * g.n, set(), 4, res.tau, adaptive=True, tau_cap=g.n)
    arts = {"chain": ch.to_dict(),
            "cop": build_cop_decomposition(g, 2, R, RandomSource(3)).to_dict(),
            "shortcut": shortcut_partition(g, 0.5, R, RandomSource(3)).to_dict(),
            "cut-family": dict(fam.to_dict(), chain=ch.to_dict(), weights=[1.0] * g.n),
            "embedding": dict(res.to_dict(), chain=ch.to_dict())}
    failed = [k for k, a in arts.items() if not verify_artifact(json.loads(dump_json(a)), g).valid]
    twice = all(dump_json(json.loads(dump_json(a))) == dump_json(a) for a in arts.values())
    verdict("determinism and round-trip", same and not failed and twice,
            f"repeat pipeline byte-identical: {same}; {len(arts) - len(failed)}/{len(arts)} "
            f"artifact kinds re-verify after JSON round-trip")


if __name__ == "__main__":
    fails = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                fails += 1
    sys.exit(1 if fails else 0)
