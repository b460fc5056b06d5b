"""Per-motif energy function and its exact reverse-mode gradients.

Architecture: GraphSAGE-mean layer(s) over the motif's induced edges,
row-sum readout into a one-hidden-layer MLP with L2 normalization (the
motif representation), a one-hidden-layer MLP rho, and a final dot
product with an energy vector. All math is float64 numpy; gradients are
hand-derived and checked against finite differences in the tests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError
from .graph import Motif

CHECKPOINT_VERSION = 1

DEFAULT_DIMS = {"p": 1, "d_gnn": 16, "d_hidden": 32, "d_rep": 128, "H": 16}


@dataclass
class EnergyModel:
    dims: dict
    leaky_slope: float
    gnn_layers: int
    params: dict  # name -> float64 ndarray

    def copy(self) -> "EnergyModel":
        return EnergyModel(
            dict(self.dims),
            self.leaky_slope,
            self.gnn_layers,
            {k: v.copy() for k, v in self.params.items()},
        )


@dataclass(frozen=True)
class MotifRepresentation:
    """L2-normalized motif embedding; zero vector only when the
    pre-normalized output was exactly zero (flagged)."""

    vector: np.ndarray
    source: tuple
    is_zero: bool = False


def _glorot(rng, rows, cols):
    a = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-a, a, size=(rows, cols))


def param_shapes(dims: dict, gnn_layers: int) -> dict:
    p, dg = dims["p"], dims["d_gnn"]
    dh, dr, H = dims["d_hidden"], dims["d_rep"], dims["H"]
    shapes = {}
    in_dim = p
    for l in range(gnn_layers):
        shapes[f"gnn.{l}.W"] = (dg, 2 * in_dim)
        shapes[f"gnn.{l}.b"] = (dg,)
        in_dim = dg
    shapes["readout.W1"] = (dh, dg)
    shapes["readout.b1"] = (dh,)
    shapes["readout.W2"] = (dr, dh)
    shapes["readout.b2"] = (dr,)
    shapes["rho.W1"] = (dh, dr)
    shapes["rho.b1"] = (dh,)
    shapes["rho.W2"] = (H, dh)
    shapes["rho.b2"] = (H,)
    shapes["energy.w"] = (H,)
    return shapes


def init_model(dims=None, leaky_slope=0.01, seed=0, gnn_layers=1) -> EnergyModel:
    """Glorot-uniform weights, zero biases, deterministic per seed."""
    dims = {**DEFAULT_DIMS, **(dims or {})}
    for name, v in dims.items():
        if name != "p" and v < 1:
            raise ConfigError(f"dimension {name} must be >= 1, got {v}")
    if dims["p"] < 0:
        raise ConfigError("p must be >= 0")
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in param_shapes(dims, gnn_layers).items():
        if name.rsplit(".", 1)[-1].startswith("b"):
            params[name] = np.zeros(shape)
        elif len(shape) == 1:
            params[name] = _glorot(rng, shape[0], 1)[:, 0]
        else:
            params[name] = _glorot(rng, *shape)
    return EnergyModel(dims, float(leaky_slope), int(gnn_layers), params)


def _lrelu(z, slope):
    return np.where(z > 0, z, slope * z)


def _lrelu_grad(z, slope):
    return np.where(z > 0, 1.0, slope)


def _neighbor_mean_operator(adj: np.ndarray) -> np.ndarray:
    """Row-normalized adjacency; zero rows for isolated motif nodes."""
    a = adj.astype(float)
    deg = a.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        norm = np.where(deg > 0, a / deg, 0.0)
    return norm


def _forward(m: Motif, model: EnergyModel):
    """Full forward pass; returns (phi, representation, tape for backward)."""
    if m.feat_k.shape[1] != model.dims["p"]:
        raise NumericError(
            f"motif has {m.feat_k.shape[1]} feature columns, model expects {model.dims['p']}"
        )
    slope = model.leaky_slope
    P = model.params
    N = _neighbor_mean_operator(m.adj_k)
    x = np.asarray(m.feat_k, dtype=float)
    tape = {"N": N, "layers": []}
    for l in range(model.gnn_layers):
        mean_nb = N @ x
        concat = np.concatenate([x, mean_nb], axis=1)
        z = concat @ P[f"gnn.{l}.W"].T + P[f"gnn.{l}.b"]
        tape["layers"].append({"concat": concat, "z": z})
        x = _lrelu(z, slope)
    tape["H"] = x
    s = x.sum(axis=0)
    u1 = P["readout.W1"] @ s + P["readout.b1"]
    a1 = _lrelu(u1, slope)
    v = P["readout.W2"] @ a1 + P["readout.b2"]
    nv = float(np.linalg.norm(v))
    h = v / nv if nv > 0 else np.zeros_like(v)
    r1 = P["rho.W1"] @ h + P["rho.b1"]
    ar1 = _lrelu(r1, slope)
    rho_out = P["rho.W2"] @ ar1 + P["rho.b2"]
    phi = float(P["energy.w"] @ rho_out)
    tape.update(s=s, u1=u1, a1=a1, v=v, nv=nv, h=h, r1=r1, ar1=ar1, rho_out=rho_out)
    for stage, val in (("gnn", x), ("readout", v), ("rho", rho_out), ("energy", phi)):
        if not np.all(np.isfinite(val)):
            raise NumericError(f"non-finite value at stage {stage!r}")
    return phi, h, nv == 0, tape


def gnn_forward(m: Motif, model: EnergyModel) -> np.ndarray:
    """Per-node GraphSAGE-mean embeddings restricted to the motif's edges."""
    _, _, _, tape = _forward(m, model)
    return tape["H"]


def readout(node_embeds: np.ndarray, model: EnergyModel, source=()) -> MotifRepresentation:
    """Row-sum then MLP then L2 normalization."""
    P = model.params
    slope = model.leaky_slope
    s = np.asarray(node_embeds, dtype=float).sum(axis=0)
    a1 = _lrelu(P["readout.W1"] @ s + P["readout.b1"], slope)
    v = P["readout.W2"] @ a1 + P["readout.b2"]
    nv = float(np.linalg.norm(v))
    if nv > 0:
        return MotifRepresentation(v / nv, tuple(source), is_zero=False)
    return MotifRepresentation(np.zeros_like(v), tuple(source), is_zero=True)


def motif_representation(m: Motif, model: EnergyModel) -> MotifRepresentation:
    _, h, zero, _ = _forward(m, model)
    return MotifRepresentation(h, m.nodes, is_zero=zero)


def motif_energy(m: Motif, model: EnergyModel) -> float:
    phi, _, _, _ = _forward(m, model)
    return phi


def zero_gradients(model: EnergyModel) -> dict:
    return {k: np.zeros_like(v) for k, v in model.params.items()}


def add_gradients(acc: dict, other: dict):
    for k, v in other.items():
        acc[k] += v
    return acc


def motif_energy_backward(m: Motif, model: EnergyModel, upstream: float = 1.0) -> dict:
    """Gradient of upstream * phi w.r.t. every parameter, including the
    L2-normalization Jacobian. Zero-norm representations get the zero
    subgradient."""
    phi, h, zero, tape = _forward(m, model)
    P = model.params
    slope = model.leaky_slope
    g = {k: np.zeros_like(v) for k, v in P.items()}

    d_rho_out = upstream * P["energy.w"]
    g["energy.w"] += upstream * tape["rho_out"]
    g["rho.W2"] += np.outer(d_rho_out, tape["ar1"])
    g["rho.b2"] += d_rho_out
    d_ar1 = P["rho.W2"].T @ d_rho_out
    d_r1 = d_ar1 * _lrelu_grad(tape["r1"], slope)
    g["rho.W1"] += np.outer(d_r1, h)
    g["rho.b1"] += d_r1
    d_h = P["rho.W1"].T @ d_r1

    if zero:
        d_v = np.zeros_like(d_h)
    else:
        d_v = (d_h - h * float(h @ d_h)) / tape["nv"]
    g["readout.W2"] += np.outer(d_v, tape["a1"])
    g["readout.b2"] += d_v
    d_a1 = P["readout.W2"].T @ d_v
    d_u1 = d_a1 * _lrelu_grad(tape["u1"], slope)
    g["readout.W1"] += np.outer(d_u1, tape["s"])
    g["readout.b1"] += d_u1
    d_s = P["readout.W1"].T @ d_u1

    d_x = np.broadcast_to(d_s, tape["H"].shape).copy()
    N = tape["N"]
    for l in reversed(range(model.gnn_layers)):
        layer = tape["layers"][l]
        d_z = d_x * _lrelu_grad(layer["z"], slope)
        g[f"gnn.{l}.W"] += d_z.T @ layer["concat"]
        g[f"gnn.{l}.b"] += d_z.sum(axis=0)
        d_concat = d_z @ P[f"gnn.{l}.W"]
        in_dim = layer["concat"].shape[1] // 2
        d_x = d_concat[:, :in_dim] + N.T @ d_concat[:, in_dim:]
    return g


def serialize_model(model: EnergyModel) -> dict:
    return {
        "version": CHECKPOINT_VERSION,
        "dims": dict(model.dims),
        "leaky_slope": model.leaky_slope,
        "gnn_layers": model.gnn_layers,
        "weights": {k: v.tolist() for k, v in model.params.items()},
    }


def deserialize_model(document: dict) -> EnergyModel:
    try:
        version = document["version"]
        dims = dict(document["dims"])
        slope = float(document["leaky_slope"])
        layers = int(document.get("gnn_layers", 1))
        weights = document["weights"]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed model document: missing {exc}") from exc
    if version != CHECKPOINT_VERSION:
        raise ConfigError(
            f"unsupported model document version {version} (expected {CHECKPOINT_VERSION})"
        )
    shapes = param_shapes(dims, layers)
    params = {}
    for name, shape in shapes.items():
        if name not in weights:
            raise ConfigError(f"model document missing weight {name!r}")
        arr = np.asarray(weights[name], dtype=float)
        if arr.shape != shape:
            raise ConfigError(
                f"weight {name!r} has shape {arr.shape}, expected {shape}"
            )
        params[name] = arr
    return EnergyModel(dims, slope, layers, params)


def save_model(model: EnergyModel, path):
    with open(path, "w") as fh:
        json.dump(serialize_model(model), fh)


def load_model(path) -> EnergyModel:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"unreadable model document: {exc}") from exc
    return deserialize_model(doc)
