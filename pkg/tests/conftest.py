import itertools

import networkx as nx
import numpy as np
import pytest

from motifenergy.graph import build_graph


@pytest.fixture(scope="session")
def karate():
    G = nx.karate_club_graph()
    return build_graph(
        G.number_of_nodes(), list(G.edges()),
        node_ids=[str(v) for v in range(G.number_of_nodes())],
    )


def random_graph(n, edge_prob, seed, p_features=0):
    rng = np.random.default_rng(seed)
    edges = [
        (u, v)
        for u, v in itertools.combinations(range(n), 2)
        if rng.random() < edge_prob
    ]
    feats = rng.normal(size=(n, p_features)) if p_features else None
    return build_graph(n, edges, features=feats)
