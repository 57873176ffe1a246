"""Exact s-t maximum flow / minimum cut for :class:`FlowNetwork` instances.

The solver runs blocking-flow (BFS level graph + current-arc DFS) over CSR
residual arrays compiled with numba.  Capacities are scaled to int64 before
solving, so all flow arithmetic is exact and termination is guaranteed; the
scale is 2^20, lowered adaptively if the scaled capacity sum would overflow.

The reported cut is canonical and flow-independent: source_side is the
complement of every node that can still reach t in the final residual graph
(the minimum cut closest to t).  With the telescoped ray networks this makes
degenerate all-zero-cost instances keep every node on the source side.

Run ``python -m sphereseg.maxflow FILE.dimacs`` to solve a DIMACS instance.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .graphbuild import FlowNetwork

__all__ = ["CutResult", "max_flow", "brute_force_min_cut", "cut_capacity"]

_SCALE = float(2 ** 20)
_INT_BUDGET = float(2 ** 61)


@dataclass
class CutResult:
    """Outcome of a max-flow solve.

    ``source_side`` has one bool per node including terminals: indices
    0..N-1 are the non-terminal nodes, N is s (always True), N+1 is t
    (always False).  The flow arrays are diagnostics aligned with the input
    network (per non-terminal node for terminal arcs, per arc otherwise).
    """

    flow_value: float
    source_side: np.ndarray
    stats: dict
    source_flow: np.ndarray = field(repr=False, default=None)
    sink_flow: np.ndarray = field(repr=False, default=None)
    arc_flow: np.ndarray = field(repr=False, default=None)


@nb.njit(cache=True)
def _dinic(ptr, head, cap, rev, s, t):  # pragma: no cover - jitted
    n = ptr.shape[0] - 1
    level = np.empty(n, np.int32)
    it = np.empty(n, np.int64)
    q = np.empty(n, np.int64)
    path = np.empty(n + 1, np.int64)
    flow = np.int64(0)
    naug = 0
    phases = 0
    while True:
        for i in range(n):
            level[i] = -1
        level[s] = 0
        q[0] = s
        qh, qt = 0, 1
        while qh < qt:
            u = q[qh]
            qh += 1
            for e in range(ptr[u], ptr[u + 1]):
                if cap[e] > 0:
                    v = head[e]
                    if level[v] < 0:
                        level[v] = level[u] + 1
                        q[qt] = v
                        qt += 1
        if level[t] < 0:
            break
        phases += 1
        for i in range(n):
            it[i] = ptr[i]
        u = s
        plen = 0
        while True:
            if u == t:
                bn = cap[path[0]]
                for i in range(1, plen):
                    if cap[path[i]] < bn:
                        bn = cap[path[i]]
                for i in range(plen):
                    e = path[i]
                    cap[e] -= bn
                    cap[rev[e]] += bn
                flow += bn
                naug += 1
                j = 0
                while j < plen and cap[path[j]] > 0:
                    j += 1
                plen = j
                u = s if plen == 0 else head[path[plen - 1]]
                continue
            found = np.int64(-1)
            e = it[u]
            stop = ptr[u + 1]
            while e < stop:
                if cap[e] > 0:
                    v = head[e]
                    if level[v] == level[u] + 1:
                        found = e
                        break
                e += 1
            it[u] = e
            if found >= 0:
                path[plen] = found
                plen += 1
                u = head[found]
            else:
                if u == s:
                    break
                level[u] = -1
                plen -= 1
                u = s if plen == 0 else head[path[plen - 1]]
    return flow, naug, phases


@nb.njit(cache=True)
def _reaches_sink(ptr, head, cap, rev, t):  # pragma: no cover - jitted
    n = ptr.shape[0] - 1
    reach = np.zeros(n, np.bool_)
    q = np.empty(n, np.int64)
    reach[t] = True
    q[0] = t
    qh, qt = 0, 1
    while qh < qt:
        y = q[qh]
        qh += 1
        for e in range(ptr[y], ptr[y + 1]):
            x = head[e]
            # rev[e] is the arc x -> y; positive residual there means x
            # still reaches t through y.
            if not reach[x] and cap[rev[e]] > 0:
                reach[x] = True
                q[qt] = x
                qt += 1
    return reach


_warmed = False


def _warm_kernels() -> None:
    """Compile (or load from cache) the kernels on a 2-node toy instance."""
    global _warmed
    if _warmed:
        return
    net = FlowNetwork.from_arcs(1, [("s", 0, 1.0), (0, "t", 1.0)])
    _solve(net)
    _warmed = True


def _scale_for(total: float) -> float:
    scale = _SCALE
    while (total + 1.0) * scale > _INT_BUDGET and scale > 1.0:
        scale /= 2.0
    return max(scale, 1.0)


def _solve(net: FlowNetwork) -> CutResult:
    n_all = net.num_nodes + 2
    s, t = net.num_nodes, net.num_nodes + 1

    sv = np.flatnonzero(net.source_cap)
    vt = np.flatnonzero(net.sink_cap)
    structural = net.structural_mask()
    finite_total = (
        float(net.source_cap.sum())
        + float(net.sink_cap.sum())
        + float(net.arc_cap[~structural].sum())
    )
    scale = _scale_for(finite_total)

    src_int = np.rint(net.source_cap[sv] * scale).astype(np.int64)
    snk_int = np.rint(net.sink_cap[vt] * scale).astype(np.int64)
    arc_int = np.rint(net.arc_cap * scale).astype(np.int64)
    inf_int = int(src_int.sum() + snk_int.sum() + arc_int[~structural].sum()) + 1
    arc_int[structural] = inf_int

    tails = np.concatenate([
        np.full(sv.shape[0], s, dtype=np.int64), vt.astype(np.int64),
        net.arc_tail.astype(np.int64),
    ])
    heads = np.concatenate([
        sv.astype(np.int64), np.full(vt.shape[0], t, dtype=np.int64),
        net.arc_head.astype(np.int64),
    ])
    caps = np.concatenate([src_int, snk_int, arc_int])

    # Interleave forward arcs with zero-capacity reverse arcs, then CSR-sort.
    m = tails.shape[0]
    at = np.empty(2 * m, dtype=np.int64)
    ah = np.empty(2 * m, dtype=np.int64)
    ac = np.zeros(2 * m, dtype=np.int64)
    at[0::2], at[1::2] = tails, heads
    ah[0::2], ah[1::2] = heads, tails
    ac[0::2] = caps

    order = np.argsort(at, kind="stable")
    pos = np.empty(2 * m, dtype=np.int64)
    pos[order] = np.arange(2 * m, dtype=np.int64)
    head_csr = np.ascontiguousarray(ah[order])
    cap_csr = np.ascontiguousarray(ac[order])
    rev_csr = np.ascontiguousarray(pos[order ^ 1])
    counts = np.bincount(at, minlength=n_all)
    ptr = np.zeros(n_all + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])

    cap0 = cap_csr.copy()
    t0 = time.perf_counter()
    flow_int, naug, phases = _dinic(ptr, head_csr, cap_csr, rev_csr, s, t)
    reach = _reaches_sink(ptr, head_csr, cap_csr, rev_csr, t)
    solve_ms = (time.perf_counter() - t0) * 1000.0

    source_side = ~reach
    if reach[s]:
        raise AssertionError("source still reaches sink after max flow")

    # Per-arc flows in original order (forward arcs sit at even soup slots).
    flow_soup = (cap0 - cap_csr)[pos[np.arange(0, 2 * m, 2)]].astype(np.float64) / scale
    nsrc, nsnk = sv.shape[0], vt.shape[0]
    source_flow = np.zeros(net.num_nodes)
    sink_flow = np.zeros(net.num_nodes)
    source_flow[sv] = flow_soup[:nsrc]
    sink_flow[vt] = flow_soup[nsrc:nsrc + nsnk]

    return CutResult(
        flow_value=float(flow_int) / scale + net.st_cap,
        source_side=source_side,
        stats={
            "augmentations": int(naug),
            "phases": int(phases),
            "solve_ms": solve_ms,
            "scale": scale,
        },
        source_flow=source_flow,
        sink_flow=sink_flow,
        arc_flow=flow_soup[nsrc + nsnk:],
    )


def max_flow(net: FlowNetwork) -> CutResult:
    """Exact maximum flow and the canonical minimum cut closest to t."""
    _warm_kernels()
    return _solve(net)


def cut_capacity(net: FlowNetwork, source_side: np.ndarray) -> float:
    """Capacity of the cut induced by a source-side assignment (terminals
    excluded from ``source_side`` indices 0..N-1 are read positionally)."""
    in_s = np.asarray(source_side[: net.num_nodes], dtype=bool)
    val = float(net.source_cap[~in_s].sum() + net.sink_cap[in_s].sum() + net.st_cap)
    crossing = in_s[net.arc_tail] & ~in_s[net.arc_head]
    return val + float(net.arc_cap[crossing].sum())


def brute_force_min_cut(net: FlowNetwork) -> tuple[float, np.ndarray]:
    """Exhaustive minimum cut for networks with at most 20 non-terminal nodes.

    Returns ``(value, source_membership)`` where the membership is the
    lexicographically least optimal source set (ordered as sorted index
    lists: {} < {0} < {0,1} < {1}).
    """
    n = net.num_nodes
    if n > 20:
        raise ValueError(f"brute force supports <= 20 nodes, got {n}")
    masks = np.arange(1 << n, dtype=np.int64)
    value = np.full(masks.shape[0], net.st_cap, dtype=np.float64)
    for v in np.flatnonzero(net.source_cap):
        value += net.source_cap[v] * ((masks >> int(v)) & 1 == 0)
    for v in np.flatnonzero(net.sink_cap):
        value += net.sink_cap[v] * ((masks >> int(v)) & 1 == 1)
    for u, v, cap in zip(net.arc_tail, net.arc_head, net.arc_cap):
        crossing = (((masks >> int(u)) & 1) == 1) & (((masks >> int(v)) & 1) == 0)
        value += float(cap) * crossing
    best = float(value.min())
    cands = masks[value == best]

    # Lexicographically least set: grow a prefix; at each step the smallest
    # feasible next element wins, and the bare prefix wins over any superset.
    prefix = np.int64(0)
    low = np.int64(0)  # bits already decided (all <= current max element)
    while True:
        if np.any(cands == prefix):
            break
        rest = cands & ~prefix
        # smallest undecided element present in each candidate, minimized
        next_bits = rest & -rest
        e_bit = np.int64(next_bits.min())
        prefix |= e_bit
        low = (e_bit << 1) - 1
        cands = cands[(cands & low) == (prefix & low)]
    member = np.array([(int(prefix) >> i) & 1 == 1 for i in range(n)], dtype=bool)
    return best, member


def _main(argv=None) -> int:  # pragma: no cover - exercised via subprocess
    import argparse

    from .graphbuild import parse_dimacs

    ap = argparse.ArgumentParser(
        prog="python -m sphereseg.maxflow",
        description="Solve a DIMACS max-flow instance.",
    )
    ap.add_argument("path", help="DIMACS max-flow text file")
    args = ap.parse_args(argv)
    with open(args.path, "r", encoding="utf-8") as fh:
        net = parse_dimacs(fh.read())
    res = max_flow(net)
    n_src = int(np.count_nonzero(res.source_side[: net.num_nodes]))
    print(f"flow {_fmt(res.flow_value)}")
    print(f"source-side nodes {n_src} of {net.num_nodes}")
    return 0


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(_main())
