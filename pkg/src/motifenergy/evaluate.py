"""Downstream evaluation: frozen-representation export for labeled
k-node sets, in-repo logistic regression and balanced accuracy."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GraphParseError, InvalidNodeSetError
from .graph import Graph, induced_subgraph
from .model import EnergyModel, motif_representation


@dataclass(frozen=True)
class KSetTask:
    """Labeled k-node sets with a train/test split."""

    k: int
    examples: tuple  # (sorted k-tuple, int label) pairs
    split: tuple  # "train" | "test" per example

    def subset(self, which):
        return [i for i, s in enumerate(self.split) if s == which]

    def validate(self, g: Graph = None):
        for (nodes, _label), _ in zip(self.examples, self.split):
            if len(nodes) != self.k or len(set(nodes)) != self.k:
                raise InvalidNodeSetError(f"example {nodes!r} is not a {self.k}-set")
            if g is not None and (min(nodes) < 0 or max(nodes) >= g.n):
                raise InvalidNodeSetError(f"example {nodes!r} out of range for n={g.n}")
        train_labels = {self.examples[i][1] for i in self.subset("train")}
        if len(train_labels) < 2:
            raise ConfigError("train split needs at least 2 distinct labels")
        return self


@dataclass(frozen=True)
class EmbeddingTable:
    rows: np.ndarray  # (num examples, d)
    source: str

    @property
    def d(self):
        return self.rows.shape[1]


def parse_task_file(path) -> KSetTask:
    """Task format: header "k=<int>", then "v1 ... vk label split" lines."""
    examples, split = [], []
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("k="):
            raise GraphParseError(f"expected 'k=<int>' header, got {header!r}", 1)
        try:
            k = int(header[2:])
        except ValueError as exc:
            raise GraphParseError(str(exc), 1) from exc
        for lineno, line in enumerate(fh, start=2):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != k + 2:
                raise GraphParseError(
                    f"expected {k} nodes, a label and a split", lineno
                )
            nodes = tuple(sorted(int(v) for v in parts[:k]))
            examples.append((nodes, int(parts[k])))
            if parts[k + 1] not in ("train", "test"):
                raise GraphParseError(f"bad split {parts[k+1]!r}", lineno)
            split.append(parts[k + 1])
    return KSetTask(k, tuple(examples), tuple(split))


def write_task_file(task: KSetTask, path):
    with open(path, "w") as fh:
        fh.write(f"k={task.k}\n")
        for (nodes, label), sp in zip(task.examples, task.split):
            fh.write(" ".join(map(str, nodes)) + f" {label} {sp}\n")


def embed_ksets(model: EnergyModel, g: Graph, task: KSetTask) -> EmbeddingTable:
    """One frozen motif representation per task example (inductive)."""
    task.validate(g)
    rows = np.empty((len(task.examples), model.dims["d_rep"]))
    for i, (nodes, _label) in enumerate(task.examples):
        rows[i] = motif_representation(induced_subgraph(g, nodes), model).vector
    return EmbeddingTable(rows, source="mhm-motif")


def pool_external(node_embeddings: np.ndarray, task: KSetTask, mode: str) -> EmbeddingTable:
    """k-set embeddings from per-node vectors by sum or mean pooling;
    raw-features mode pools the rows as given."""
    node_embeddings = np.asarray(node_embeddings, dtype=float)
    if mode not in ("sum", "mean", "raw-features"):
        raise ConfigError(f"unknown pooling mode {mode!r}")
    rows = np.empty((len(task.examples), node_embeddings.shape[1]))
    for i, (nodes, _label) in enumerate(task.examples):
        if max(nodes) >= node_embeddings.shape[0]:
            raise InvalidNodeSetError(f"node {max(nodes)} has no embedding row")
        block = node_embeddings[list(nodes)]
        rows[i] = block.sum(axis=0) if mode == "sum" else block.mean(axis=0)
    src = "raw-features" if mode == "raw-features" else "pooled-external"
    return EmbeddingTable(rows, source=src)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def logistic_fit(table: EmbeddingTable, task: KSetTask, reg_lambda: float = 1e-3,
                 seed: int = 0, tol: float = 1e-6, max_iter: int = 5000):
    """Multinomial logistic regression by full-batch gradient descent with
    an L2 penalty; deterministic per seed (small random init)."""
    idx = task.subset("train")
    if not idx:
        raise ConfigError("empty train split")
    X = np.hstack([table.rows[idx], np.ones((len(idx), 1))])
    labels = [task.examples[i][1] for i in idx]
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise ConfigError("train split has a single class")
    cls_index = {c: j for j, c in enumerate(classes)}
    y = np.array([cls_index[l] for l in labels])
    Y = np.eye(len(classes))[y]
    n, d = X.shape
    rng = np.random.default_rng(seed)
    W = rng.normal(0.0, 0.01, size=(d, len(classes)))
    penalty_mask = np.ones((d, 1))
    penalty_mask[-1] = 0.0  # intercept unpenalized
    # gradient Lipschitz bound for the step size
    lip = 0.5 * np.linalg.norm(X, 2) ** 2 / n + 2 * reg_lambda
    step = 1.0 / lip
    for _ in range(max_iter):
        P = _softmax(X @ W)
        grad = X.T @ (P - Y) / n + 2 * reg_lambda * penalty_mask * W
        W -= step * grad
        if np.linalg.norm(grad) < tol:
            break
    return {"weights": W, "classes": classes}


def logistic_predict(clf, table: EmbeddingTable, indices):
    X = np.hstack([table.rows[indices], np.ones((len(indices), 1))])
    P = _softmax(X @ clf["weights"])
    return [clf["classes"][j] for j in P.argmax(axis=1)]


def balanced_accuracy(predictions, labels) -> float:
    """Mean per-class recall."""
    predictions = list(predictions)
    labels = list(labels)
    if not labels or len(predictions) != len(labels):
        raise ConfigError("predictions and labels must be nonempty, equal length")
    recalls = []
    for c in sorted(set(labels)):
        idx = [i for i, l in enumerate(labels) if l == c]
        hit = sum(1 for i in idx if predictions[i] == c)
        recalls.append(hit / len(idx))
    return float(np.mean(recalls))


def run_eval(table: EmbeddingTable, task: KSetTask, seeds=(0, 1, 2, 3, 4),
             reg_lambda: float = 1e-3) -> dict:
    """Fit on train, score balanced accuracy on test, across seeds."""
    test_idx = task.subset("test")
    if not test_idx:
        raise ConfigError("empty test split")
    test_labels = [task.examples[i][1] for i in test_idx]
    train_labels = {task.examples[i][1] for i in task.subset("train")}
    missing = set(test_labels) - train_labels
    if missing:
        raise ConfigError(f"test classes absent from train split: {sorted(missing)}")
    per_seed = []
    for seed in seeds:
        clf = logistic_fit(table, task, reg_lambda=reg_lambda, seed=seed)
        preds = logistic_predict(clf, table, test_idx)
        per_seed.append(balanced_accuracy(preds, test_labels))
    return {
        "mean": float(np.mean(per_seed)),
        "std": float(np.std(per_seed)),
        "per_seed": per_seed,
    }


def write_embeddings_csv(table: EmbeddingTable, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in table.rows:
            writer.writerow([repr(float(x)) for x in row])


def read_embeddings_csv(path, source="pooled-external") -> EmbeddingTable:
    rows = []
    with open(path) as fh:
        for line in csv.reader(fh):
            if line:
                rows.append([float(x) for x in line])
    if not rows:
        raise GraphParseError("empty embeddings file")
    return EmbeddingTable(np.asarray(rows, dtype=float), source=source)
