"""Supernode construction and random-walk-tour energy estimation.

Tours run on the collapsed higher-order network implicitly: the walker
only needs lazy k-HON neighborhoods plus a supernode-membership test, so
the higher-order network is never materialized. A `TourEngine` memoizes
the neighborhoods it has visited; reusing one engine across many
estimates on the same (graph, supernode) amortizes that cost without
changing any sampled distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, SupernodeError, TourTruncationError
from .graph import Graph, induced_subgraph, nodes_connected
from .motifs import (
    DEFAULT_ORACLE_CAP,
    OracleCapError,
    enumerate_cises,
    hon_neighbors,
)

DEFAULT_TOUR_CAP = 10**7


@dataclass(frozen=True)
class Supernode:
    """The collapsed set I of CISes plus its exact boundary multiset."""

    members: frozenset
    boundary_edges: tuple  # (member, outside CIS) pairs, multiset
    covers_space: bool

    @property
    def boundary_degree(self):
        return len(self.boundary_edges)


@dataclass(frozen=True)
class TourTrace:
    """States visited by one tour, supernode endpoints excluded."""

    states: tuple
    degrees: tuple

    @property
    def length(self):
        return len(self.states) + 1  # steps taken, incl. the re-entry step


@dataclass(frozen=True)
class EnergyEstimate:
    value: float
    supernode_term: float
    tour_term: float
    q: int
    per_tour_values: tuple
    mean_tour_length: float
    std_error: float
    covers_space: bool = False


@dataclass
class SupernodeReport:
    """Validity of the stationary-distribution assumption behind the tours."""

    ok: bool
    verified: bool
    reasons: list = field(default_factory=list)


def _component_nodes(g: Graph):
    seen = [False] * g.n
    for s in range(g.n):
        if seen[s]:
            continue
        comp = []
        stack = [s]
        seen[s] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in g.neighbors[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        yield sorted(comp)


def _greedy_start_cis(g: Graph, k: int, rng: np.random.Generator):
    """Start CIS: greedy lexicographic completion around a random edge."""
    edges = list(g.edges())
    if k == 1:
        return (int(rng.integers(g.n)),)
    if not edges:
        raise SupernodeError("graph has no edges; no connected k-subgraph exists")
    order = rng.permutation(len(edges))
    for idx in order:
        u, v = edges[idx]
        nodes = {u, v}
        while len(nodes) < k:
            frontier = sorted(
                w for x in nodes for w in g.neighbors[x] if w not in nodes
            )
            if not frontier:
                break
            nodes.add(frontier[0])
        if len(nodes) == k:
            return tuple(sorted(nodes))
    raise SupernodeError(f"no connected {k}-subgraph reachable from any edge")


def build_supernode(g: Graph, k: int, budget: int, seed: int) -> Supernode:
    """BFS on the k-HON from a seed-chosen start CIS, up to `budget` members.

    Expansion is FIFO with lexicographic tie-breaking, so the result is
    deterministic given the seed. Boundary edges are computed exactly,
    with multigraph multiplicity.
    """
    if budget < 1:
        raise SupernodeError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    start = _greedy_start_cis(g, k, rng)
    members = {start}
    queue = [start]
    neigh_cache = {}
    while queue and len(members) < budget:
        cur = queue.pop(0)
        nb = hon_neighbors(g, cur).neighbors
        neigh_cache[cur] = nb
        for cand in nb:
            if cand not in members:
                members.add(cand)
                queue.append(cand)
                if len(members) == budget:
                    break
    boundary = []
    for u in sorted(members):
        nb = neigh_cache.get(u)
        if nb is None:
            nb = hon_neighbors(g, u).neighbors
        for c in nb:
            if c not in members:
                boundary.append((u, c))
    return Supernode(frozenset(members), tuple(boundary), covers_space=not boundary)


def validate_supernode(
    g: Graph, s: Supernode, k: int = None, cap: int = DEFAULT_ORACLE_CAP
) -> SupernodeReport:
    """Check the conditions under which the collapsed walk has the
    stationary distribution the estimator's unbiasedness relies on:
    the supernode must touch every component that has a CIS, and each
    such component needs a vertex outside all members with degree > 2.
    """
    if k is None:
        k = len(next(iter(s.members)))
    member_nodes = set()
    for m in s.members:
        member_nodes.update(m)
    report = SupernodeReport(ok=True, verified=True)
    for comp in _component_nodes(g):
        if len(comp) < k:
            continue
        sub = g.induced(comp)
        back = {i: v for i, v in enumerate(comp)}
        try:
            comp_cises = [
                tuple(sorted(back[i] for i in c)) for c in enumerate_cises(sub, k, cap=cap)
            ]
        except OracleCapError:
            report.verified = False
            report.reasons.append(
                f"component starting at node {comp[0]}: CIS space over oracle cap, unverified"
            )
            continue
        if not comp_cises:
            continue
        if not any(c in s.members for c in comp_cises):
            report.ok = False
            report.reasons.append(
                f"component starting at node {comp[0]}: no CIS in the supernode"
            )
        if not any(v not in member_nodes and g.degree(v) > 2 for v in comp):
            report.ok = False
            report.reasons.append(
                f"component starting at node {comp[0]}: no vertex outside the "
                "supernode's members with more than 2 edges"
            )
    return report


class _UniformStream:
    """Buffered uniform(0,1) draws from a seeded Generator.

    The buffer starts small (tours are usually short) and doubles on
    refill; chunking does not change the generator's draw sequence.
    """

    def __init__(self, rng: np.random.Generator, block: int = 64):
        self._rng = rng
        self._block = block
        self._buf = rng.random(block)
        self._i = 0

    def next(self) -> float:
        if self._i == len(self._buf):
            self._block = min(self._block * 2, 8192)
            self._buf = self._rng.random(self._block)
            self._i = 0
        v = self._buf[self._i]
        self._i += 1
        return v


class TourEngine:
    """Walker over the implicit collapsed k-HON for one (graph, supernode).

    States are interned to integer ids; neighborhoods, degrees and
    per-motif energies are memoized lazily as the walk discovers them.
    """

    def __init__(self, g: Graph, supernode: Supernode, tour_cap: int = DEFAULT_TOUR_CAP):
        self.g = g
        self.supernode = supernode
        self.tour_cap = tour_cap
        self._index = {}
        self._states = []
        self._neigh = []  # list[list[int]] neighbor state ids
        self._member = []  # bool per state id
        self._start_ids = [
            self._intern(c) for (_u, c) in supernode.boundary_edges
        ]

    def _intern(self, state: tuple) -> int:
        sid = self._index.get(state)
        if sid is None:
            sid = len(self._states)
            self._index[state] = sid
            self._states.append(state)
            self._neigh.append(None)
            self._member.append(state in self.supernode.members)
        return sid

    def _neighbors_of(self, sid: int):
        nb = self._neigh[sid]
        if nb is None:
            hood = hon_neighbors(self.g, self._states[sid]).neighbors
            nb = [self._intern(c) for c in hood]
            self._neigh[sid] = nb
        return nb

    def degree_of(self, state: tuple) -> int:
        return len(self._neighbors_of(self._intern(state)))

    def run_tour_ids(self, uni: _UniformStream):
        """One tour as state ids; ends on supernode re-entry."""
        boundary = self._start_ids
        if not boundary:
            raise SupernodeError("supernode covers the CIS space; no tours possible")
        cur = boundary[int(uni.next() * len(boundary))]
        path = []
        append = path.append
        nxt_uni = uni.next
        neigh = self._neigh
        member = self._member
        neighbors_of = self._neighbors_of
        cap = self.tour_cap
        while True:
            append(cur)
            if len(path) > cap:
                raise TourTruncationError(cap, len(path))
            nb = neigh[cur]
            if nb is None:
                nb = neighbors_of(cur)
            nxt = nb[int(nxt_uni() * len(nb))]
            if member[nxt]:
                return path
            cur = nxt

    def trace(self, path_ids) -> TourTrace:
        return TourTrace(
            states=tuple(self._states[i] for i in path_ids),
            degrees=tuple(len(self._neighbors_of(i)) for i in path_ids),
        )


def run_tour(g: Graph, s: Supernode, rng: np.random.Generator) -> TourTrace:
    """A single random-walk tour: uniform boundary entry, uniform k-HON
    steps, ends at first re-entry into the supernode."""
    engine = TourEngine(g, s)
    return engine.trace(engine.run_tour_ids(_UniformStream(rng)))


def _tour_rng(seed, tour_index) -> np.random.Generator:
    # independent substream per tour: determinism regardless of scheduling
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(tour_index)]))


def estimate_energy(
    g: Graph,
    k: int,
    s: Supernode,
    q: int,
    phi,
    seed: int,
    engine: TourEngine = None,
    phi_memo: dict = None,
    threads: int = 1,
) -> EnergyEstimate:
    """The unbiased tour estimator of the total connected-subgraph energy.

    value = sum of phi over supernode members
          + (boundary_degree / q) * sum over tours of sum_i phi(C_i)/deg(C_i).

    Deterministic per seed: each tour draws from its own (seed, index)
    substream, so the result is independent of `threads`. Pass `engine`
    and `phi_memo` to reuse memoized neighborhoods / energies across
    repeated estimates with the same supernode and the same phi.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    if engine is None:
        engine = TourEngine(g, s)
    if phi_memo is None:
        phi_memo = {}

    def phi_of(sid):
        val = phi_memo.get(sid)
        if val is None:
            val = float(phi(induced_subgraph(g, engine._states[sid])))
            if not math.isfinite(val):
                raise NumericError(
                    f"phi returned non-finite value on {engine._states[sid]}"
                )
            phi_memo[sid] = val
        return val

    super_term = 0.0
    for m in sorted(s.members):
        sid = engine._intern(m)
        super_term += phi_of(sid)

    if s.covers_space:
        return EnergyEstimate(
            value=super_term,
            supernode_term=super_term,
            tour_term=0.0,
            q=q,
            per_tour_values=(),
            mean_tour_length=0.0,
            std_error=0.0,
            covers_space=True,
        )

    B = s.boundary_degree
    per_tour = np.empty(q)
    lengths = np.empty(q)

    def run_range(eng, memo, tour_indices):
        def local_phi(sid):
            val = memo.get(sid)
            if val is None:
                val = float(phi(induced_subgraph(g, eng._states[sid])))
                if not math.isfinite(val):
                    raise NumericError(
                        f"phi returned non-finite value on {eng._states[sid]}"
                    )
                memo[sid] = val
            return val

        for r in tour_indices:
            path = eng.run_tour_ids(_UniformStream(_tour_rng(seed, r)))
            acc = 0.0
            for sid in path:
                acc += local_phi(sid) / len(eng._neighbors_of(sid))
            per_tour[r] = B * acc
            lengths[r] = len(path) + 1

    if threads > 1 and q > 1:
        # per-thread engines avoid shared-memo races; tours depend only on
        # their own substream, so the reduction is order-fixed and identical
        from concurrent.futures import ThreadPoolExecutor

        chunks = [list(range(w, q, threads)) for w in range(threads)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(run_range, TourEngine(g, s, engine.tour_cap), {}, chunk)
                for chunk in chunks
                if chunk
            ]
            for f in futures:
                f.result()
    else:
        run_range(engine, phi_memo, range(q))
    tour_term = float(per_tour.mean())
    std_error = float(per_tour.std(ddof=1) / math.sqrt(q)) if q > 1 else float("nan")
    return EnergyEstimate(
        value=super_term + tour_term,
        supernode_term=super_term,
        tour_term=tour_term,
        q=q,
        per_tour_values=tuple(per_tour),
        mean_tour_length=float(lengths.mean()),
        std_error=std_error,
    )


def estimate_energy_with_grad(
    g: Graph,
    k: int,
    s: Supernode,
    q: int,
    model,
    seed: int,
    engine: TourEngine = None,
):
    """Energy estimate plus its exact parameter gradient.

    By linearity of the estimator, the gradient is the weighted sum of
    per-motif gradients: weight 1 for supernode members and
    boundary_degree / (q * degree) per visit for tour states.
    """
    from .model import motif_energy, motif_energy_backward, zero_gradients, add_gradients

    if engine is None:
        engine = TourEngine(g, s)
    phi_memo = {}
    weights = {}  # state id -> accumulated weight

    def phi_of(sid):
        val = phi_memo.get(sid)
        if val is None:
            val = motif_energy(induced_subgraph(g, engine._states[sid]), model)
            phi_memo[sid] = val
        return val

    super_term = 0.0
    for m in sorted(s.members):
        sid = engine._intern(m)
        super_term += phi_of(sid)
        weights[sid] = weights.get(sid, 0.0) + 1.0

    if s.covers_space:
        per_tour = ()
        tour_term = 0.0
        mean_len = 0.0
        std_error = 0.0
    else:
        B = s.boundary_degree
        per_tour = np.empty(q)
        lengths = np.empty(q)
        for r in range(q):
            uni = _UniformStream(_tour_rng(seed, r))
            path = engine.run_tour_ids(uni)
            acc = 0.0
            for sid in path:
                deg = len(engine._neighbors_of(sid))
                acc += phi_of(sid) / deg
                weights[sid] = weights.get(sid, 0.0) + B / (q * deg)
            per_tour[r] = B * acc
            lengths[r] = len(path) + 1
        tour_term = float(per_tour.mean())
        mean_len = float(lengths.mean())
        std_error = float(per_tour.std(ddof=1) / math.sqrt(q)) if q > 1 else float("nan")
        per_tour = tuple(per_tour)

    grad = zero_gradients(model)
    for sid, w in weights.items():
        motif = induced_subgraph(g, engine._states[sid])
        add_gradients(grad, motif_energy_backward(motif, model, upstream=w))

    est = EnergyEstimate(
        value=super_term + tour_term,
        supernode_term=super_term,
        tour_term=tour_term,
        q=q,
        per_tour_values=per_tour,
        mean_tour_length=mean_len,
        std_error=std_error,
        covers_space=s.covers_space,
    )
    return est, grad
