"""Scikit-learn style facade over training and embedding.

`MotifEmbedder.fit` takes a list of Graphs (or one Graph, which is
subsampled into positives), `transform` maps (graph, k-set) pairs to the
frozen motif representations, so the learned embeddings compose with any
downstream sklearn pipeline.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import InvalidNodeSetError
from .graph import Graph, induced_subgraph
from .model import motif_representation
from .training import TrainConfig, build_positives, train


def check_graph(obj) -> Graph:
    if not isinstance(obj, Graph):
        raise TypeError(f"expected a motifenergy Graph, got {type(obj).__name__}")
    return obj


def check_kset(g: Graph, nodes, k: int):
    nodes = tuple(sorted(int(v) for v in nodes))
    if len(nodes) != k or len(set(nodes)) != k:
        raise InvalidNodeSetError(f"{nodes!r} is not a {k}-set")
    if nodes[0] < 0 or nodes[-1] >= g.n:
        raise InvalidNodeSetError(f"{nodes!r} out of range for n={g.n}")
    return nodes


class MotifEmbedder(BaseEstimator, TransformerMixin):
    """Unsupervised joint k-node representation learner.

    Parameters mirror TrainConfig; get_params/set_params come from
    BaseEstimator so the embedder is grid-searchable.
    """

    def __init__(self, k=3, q=10, supernode_budget=100, minibatch=10,
                 lr=0.001, epochs=10, M=1, num_positives=40, sample_size=100,
                 forward_prob=0.5, noise_mode="shuffle-features",
                 log_mpn_mode="zero", seed=0, d_gnn=16, d_hidden=32,
                 d_rep=128, H=16, leaky_slope=0.01, gnn_layers=1):
        self.k = k
        self.q = q
        self.supernode_budget = supernode_budget
        self.minibatch = minibatch
        self.lr = lr
        self.epochs = epochs
        self.M = M
        self.num_positives = num_positives
        self.sample_size = sample_size
        self.forward_prob = forward_prob
        self.noise_mode = noise_mode
        self.log_mpn_mode = log_mpn_mode
        self.seed = seed
        self.d_gnn = d_gnn
        self.d_hidden = d_hidden
        self.d_rep = d_rep
        self.H = H
        self.leaky_slope = leaky_slope
        self.gnn_layers = gnn_layers

    def _config(self) -> TrainConfig:
        return TrainConfig(
            k=self.k, q=self.q, supernode_budget=self.supernode_budget,
            minibatch=self.minibatch, lr=self.lr, epochs=self.epochs,
            M=self.M, num_positives=self.num_positives,
            sample_size=self.sample_size, forward_prob=self.forward_prob,
            noise_mode=self.noise_mode, log_mpn_mode=self.log_mpn_mode,
            seed=self.seed,
            dims={"d_gnn": self.d_gnn, "d_hidden": self.d_hidden,
                  "d_rep": self.d_rep, "H": self.H},
            leaky_slope=self.leaky_slope, gnn_layers=self.gnn_layers,
        ).validate()

    def fit(self, X, y=None):
        """X: a Graph (subsampled into positives) or a list of Graphs."""
        cfg = self._config()
        if isinstance(X, Graph):
            rng = np.random.default_rng(cfg.seed)
            positives = build_positives(X, cfg, rng)
        else:
            positives = [check_graph(g) for g in X]
        result = train(positives, cfg)
        self.model_ = result.best_model
        self.train_log_ = result.log
        return self

    def transform(self, X):
        """X: iterable of (Graph, k-set) pairs -> (len(X), d_rep) array."""
        if not hasattr(self, "model_"):
            raise NotFittedError("MotifEmbedder is not fitted; call fit first")
        rows = []
        for g, nodes in X:
            g = check_graph(g)
            nodes = check_kset(g, nodes, self.k)
            rows.append(
                motif_representation(induced_subgraph(g, nodes), self.model_).vector
            )
        return np.asarray(rows)
