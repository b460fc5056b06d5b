"""Forest Fire subsampling, noise generation, the NCE objective and the
Adam training loop over tour-estimated energies."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ConfigError, MotifEnergyError, SupernodeError, TourTruncationError
from .graph import Graph, build_graph
from .model import EnergyModel, init_model, zero_gradients, add_gradients
from .tours import TourEngine, build_supernode, estimate_energy_with_grad

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    k: int = 3
    q: int = 10
    supernode_budget: int = 100
    minibatch: int = 10
    lr: float = 0.001
    adam_betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8
    epochs: int = 10
    M: int = 1
    num_positives: int = 40
    sample_size: int = 100
    forward_prob: float = 0.5
    noise_mode: str = "shuffle-features"
    log_mpn_mode: str = "zero"  # "zero" | "learned-offset"
    seed: int = 0
    dims: dict = field(default_factory=dict)
    leaky_slope: float = 0.01
    gnn_layers: int = 1
    tour_retry: int = 3

    def validate(self):
        if self.M < 1:
            raise ConfigError("M must be >= 1")
        if self.lr <= 0:
            raise ConfigError("lr must be > 0")
        if self.minibatch < 1:
            raise ConfigError("minibatch must be >= 1")
        if self.sample_size < self.k:
            raise ConfigError("sample_size must be >= k")
        if self.noise_mode not in ("shuffle-features", "add-edges"):
            raise ConfigError(f"unknown noise_mode {self.noise_mode!r}")
        if self.log_mpn_mode not in ("zero", "learned-offset"):
            raise ConfigError(f"unknown log_mpn_mode {self.log_mpn_mode!r}")
        return self

    def to_dict(self):
        d = asdict(self)
        d["adam_betas"] = list(self.adam_betas)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
        cfg = cls(**d)
        cfg.adam_betas = tuple(cfg.adam_betas)
        return cfg.validate()


def forest_fire_sample(g: Graph, target_size: int, forward_prob: float,
                       rng: np.random.Generator, max_restarts: int = 10000) -> Graph:
    """Forest Fire subsample: burn from a random node, igniting each
    unburned neighbor independently with probability forward_prob;
    restart at a fresh random node when the fire dies early. Returns the
    induced subgraph on the burned set (>= target_size, last burst may
    overshoot)."""
    if target_size > g.n:
        raise ConfigError(f"target_size {target_size} exceeds n={g.n}")
    burned = set()
    restarts = 0
    while len(burned) < target_size:
        remaining = [v for v in range(g.n) if v not in burned]
        start = remaining[int(rng.integers(len(remaining)))]
        burned.add(start)
        frontier = [start]
        while frontier and len(burned) < target_size:
            nxt = []
            for v in frontier:
                for w in g.neighbors[v]:
                    if w not in burned and rng.random() < forward_prob:
                        burned.add(w)
                        nxt.append(w)
            frontier = nxt
        restarts += 1
        if restarts > max_restarts:
            raise MotifEnergyError("forest fire exceeded restart cap")
    return g.induced(burned)


def make_noise(positive: Graph, mode: str, rng: np.random.Generator) -> Graph:
    """A noise graph for one positive example.

    shuffle-features: permute the feature rows, adjacency untouched.
    add-edges: add n distinct non-existing edges uniformly at random.
    """
    n = positive.n
    if mode == "shuffle-features":
        if positive.p < 1:
            raise ConfigError("shuffle-features noise requires node features")
        perm = rng.permutation(n)
        return positive.with_features(positive.features[perm])
    if mode == "add-edges":
        total_slots = n * (n - 1) // 2
        if positive.num_edges + n > total_slots:
            raise ConfigError(
                f"cannot add {n} edges: only {total_slots - positive.num_edges} non-edges exist"
            )
        existing = set(positive.edges())
        new = set()
        while len(new) < n:
            u = int(rng.integers(n))
            v = int(rng.integers(n))
            if u == v:
                continue
            e = (min(u, v), max(u, v))
            if e in existing or e in new:
                continue
            new.add(e)
        return build_graph(
            n, list(existing) + sorted(new), features=positive.features,
            node_ids=positive.node_ids,
        )
    raise ConfigError(f"unknown noise mode {mode!r}")


def nce_response(phi_hat: float, log_mpn: float = 0.0) -> float:
    """Numerically stable sigmoid of -(phi_hat + log_mpn)."""
    z = -(phi_hat + log_mpn)
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


_CLAMP = 1e-12


def nce_loss(responses_pos, responses_neg) -> float:
    """-sum log(y_pos) - sum log(1 - y_neg), summed (not averaged)."""
    if not len(responses_pos) or not len(responses_neg):
        raise ConfigError("both response lists must be nonempty")
    loss = 0.0
    for y in responses_pos:
        loss -= math.log(max(y, _CLAMP))
    for y in responses_neg:
        loss -= math.log(max(1.0 - y, _CLAMP))
    return loss


class Adam:
    """Adam over a dict of parameter arrays."""

    def __init__(self, params: dict, lr: float, betas=(0.9, 0.999), eps=1e-8):
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict, grads: dict):
        self.t += 1
        bc1 = 1 - self.b1**self.t
        bc2 = 1 - self.b2**self.t
        for key, gr in grads.items():
            self.m[key] = self.b1 * self.m[key] + (1 - self.b1) * gr
            self.v[key] = self.b2 * self.v[key] + (1 - self.b2) * gr * gr
            mhat = self.m[key] / bc1
            vhat = self.v[key] / bc2
            params[key] -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


@dataclass
class TrainLogRow:
    epoch: int
    loss: float
    mean_yhat_pos: float
    mean_yhat_neg: float
    mean_tour_len: float
    wall_ms: float


@dataclass
class TrainResult:
    model: EnergyModel
    best_model: EnergyModel
    log: list
    nce_offset: float = 0.0


def _example_energy(g, cfg, model, seed):
    """Fresh supernode + tour estimate with gradient for one example graph."""
    sn = build_supernode(g, cfg.k, cfg.supernode_budget, seed=seed)
    last_exc = None
    for attempt in range(cfg.tour_retry):
        try:
            return estimate_energy_with_grad(
                g, cfg.k, sn, cfg.q, model, seed=seed + attempt,
                engine=TourEngine(g, sn),
            )
        except TourTruncationError as exc:
            last_exc = exc
            logger.warning("tour truncated, retrying with fresh seed: %s", exc)
    raise last_exc


def train(data, cfg: TrainConfig):
    """NCE training over a list of positive example graphs.

    Per epoch: shuffle positives, draw M fresh noise graphs per positive,
    estimate each example's energy (and gradient) with a fresh supernode,
    and apply Adam per minibatch of positives. Returns the final model,
    the best-loss checkpoint and a per-epoch log.
    """
    cfg.validate()
    data = list(data)
    dims = {**cfg.dims}
    if data:
        dims.setdefault("p", data[0].p)
    model = init_model(dims, leaky_slope=cfg.leaky_slope, seed=cfg.seed,
                       gnn_layers=cfg.gnn_layers)
    offset = np.zeros(1)
    opt_params = dict(model.params)
    if cfg.log_mpn_mode == "learned-offset":
        opt_params = {**model.params, "nce.offset": offset}
    opt = Adam(opt_params, cfg.lr, cfg.adam_betas, cfg.adam_eps)
    rng = np.random.default_rng(cfg.seed)

    usable = []
    for i, g in enumerate(data):
        try:
            build_supernode(g, cfg.k, cfg.supernode_budget, seed=cfg.seed)
            usable.append(g)
        except SupernodeError as exc:
            logger.warning("skipping example %d: %s", i, exc)
    if cfg.epochs > 0 and not usable:
        raise ConfigError("no training graph admits a valid supernode")

    log = []
    best_loss = math.inf
    best_model = model.copy()
    example_counter = 0
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        order = rng.permutation(len(usable))
        epoch_loss = 0.0
        ys_pos, ys_neg, tour_lens = [], [], []
        for batch_start in range(0, len(order), cfg.minibatch):
            batch = order[batch_start:batch_start + cfg.minibatch]
            grad_total = zero_gradients(model)
            d_offset = 0.0
            for gi in batch:
                pos = usable[gi]
                examples = [(pos, True)]
                for _ in range(cfg.M):
                    examples.append((make_noise(pos, cfg.noise_mode, rng), False))
                for ex_graph, is_pos in examples:
                    example_counter += 1
                    est, grad = _example_energy(
                        ex_graph, cfg, model, seed=cfg.seed * 1_000_003 + example_counter
                    )
                    y = nce_response(est.value, float(offset[0]))
                    # d loss / d phi-hat: (1 - y) for positives, -y for negatives
                    if is_pos:
                        epoch_loss -= math.log(max(y, _CLAMP))
                        dphi = 1.0 - y
                        ys_pos.append(y)
                    else:
                        epoch_loss -= math.log(max(1.0 - y, _CLAMP))
                        dphi = -y
                        ys_neg.append(y)
                    if est.mean_tour_length:
                        tour_lens.append(est.mean_tour_length)
                    for key in grad_total:
                        grad_total[key] += dphi * grad[key]
                    d_offset += dphi
            if not math.isfinite(epoch_loss):
                raise MotifEnergyError(
                    "non-finite loss; aborting with last good checkpoint available"
                )
            grads = dict(grad_total)
            if cfg.log_mpn_mode == "learned-offset":
                grads["nce.offset"] = np.array([d_offset])
            opt.step(opt_params, grads)
        row = TrainLogRow(
            epoch=epoch,
            loss=epoch_loss,
            mean_yhat_pos=float(np.mean(ys_pos)) if ys_pos else math.nan,
            mean_yhat_neg=float(np.mean(ys_neg)) if ys_neg else math.nan,
            mean_tour_len=float(np.mean(tour_lens)) if tour_lens else 0.0,
            wall_ms=(time.perf_counter() - t0) * 1000.0,
        )
        log.append(row)
        logger.info(
            "epoch %d loss %.4f yhat+ %.3f yhat- %.3f",
            epoch, row.loss, row.mean_yhat_pos, row.mean_yhat_neg,
        )
        if epoch_loss < best_loss:
            best_loss = epoch_loss
            best_model = model.copy()
    return TrainResult(model=model, best_model=best_model, log=log,
                       nce_offset=float(offset[0]))


def build_positives(g: Graph, cfg: TrainConfig, rng: np.random.Generator):
    """The positive example set: Forest Fire subsamples of the input graph
    (or the graph itself when it is already at or below sample size)."""
    if g.n <= cfg.sample_size:
        return [g] * cfg.num_positives if cfg.num_positives else [g]
    return [
        forest_fire_sample(g, cfg.sample_size, cfg.forward_prob, rng)
        for _ in range(cfg.num_positives)
    ]
