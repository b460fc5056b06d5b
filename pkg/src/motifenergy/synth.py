"""Synthetic planted-hyperedge task generator.

Builds a sparse background graph whose nodes carry one of two feature
profiles, plants k-cliques, and labels them by feature coherence:
positive cliques are drawn within one profile, negative cliques mix
profiles. Structure is identical across classes, so only the
feature/structure interaction separates them.
"""

from __future__ import annotations

import numpy as np

from .graph import Graph, build_graph
from .evaluate import KSetTask


def make_planted_task(
    n: int = 2000,
    k: int = 3,
    num_pos: int = 150,
    num_neg: int = 150,
    feat_dim: int = 8,
    feat_noise: float = 3.0,
    edge_prob: float = None,
    homophily: float = 0.8,
    train_frac: float = 0.6,
    seed: int = 0,
):
    """Returns (graph, task). Labels: 1 = same-profile planted clique,
    0 = mixed-profile planted clique. Uniformly chosen node sets,
    disjointness not enforced beyond resampling collisions."""
    rng = np.random.default_rng(seed)
    if edge_prob is None:
        edge_prob = 4.0 / n
    cluster = rng.integers(0, 2, size=n)
    centers = np.stack([rng.normal(0, 1, size=feat_dim) * 2,
                        rng.normal(0, 1, size=feat_dim) * 2])
    features = centers[cluster] + rng.normal(0, feat_noise, size=(n, feat_dim))

    by_cluster = [np.flatnonzero(cluster == c) for c in (0, 1)]
    edges = set()
    num_bg = rng.binomial(n * (n - 1) // 2, edge_prob)
    while len(edges) < num_bg:
        # homophilous background: most edges join same-profile nodes, so the
        # graph's feature arrangement carries learnable structure
        if rng.random() < homophily:
            pool = by_cluster[int(rng.integers(2))]
            u, v = rng.choice(pool, size=2, replace=False)
        else:
            u = rng.choice(by_cluster[0])
            v = rng.choice(by_cluster[1])
        if u != v:
            edges.add((min(u, v), max(u, v)))
    used = set()

    def draw_clique(coherent):
        for _ in range(1000):
            if coherent:
                pool = by_cluster[int(rng.integers(2))]
                nodes = tuple(sorted(rng.choice(pool, size=k, replace=False)))
            else:
                # at least one node from each profile
                c0 = int(rng.integers(1, k))
                a = rng.choice(by_cluster[0], size=c0, replace=False)
                b = rng.choice(by_cluster[1], size=k - c0, replace=False)
                nodes = tuple(sorted(np.concatenate([a, b])))
            if nodes not in used:
                used.add(nodes)
                return tuple(int(v) for v in nodes)
        raise RuntimeError("could not draw a fresh clique")

    examples = []
    for _ in range(num_pos):
        nodes = draw_clique(coherent=True)
        examples.append((nodes, 1))
    for _ in range(num_neg):
        nodes = draw_clique(coherent=False)
        examples.append((nodes, 0))
    for nodes, _ in examples:
        for i in range(k):
            for j in range(i + 1, k):
                edges.add((nodes[i], nodes[j]))

    order = rng.permutation(len(examples))
    examples = [examples[i] for i in order]
    n_train = int(train_frac * len(examples))
    split = ["train"] * n_train + ["test"] * (len(examples) - n_train)

    g = build_graph(n, sorted(edges), features=features)
    task = KSetTask(k, tuple(examples), tuple(split))
    return g, task
