import itertools
import math

import numpy as np
import pytest

from motifenergy.errors import ConfigError
from motifenergy.graph import build_graph, induced_subgraph
from motifenergy.model import (
    deserialize_model,
    gnn_forward,
    init_model,
    motif_energy,
    motif_energy_backward,
    motif_representation,
    readout,
    serialize_model,
)

from conftest import random_graph

DIMS = {"p": 3, "d_gnn": 4, "d_hidden": 5, "d_rep": 6, "H": 4}


def random_motif(k, seed, p=3, edge_prob=0.6):
    g = random_graph(k + 3, edge_prob, seed, p_features=p)
    rng = np.random.default_rng(seed + 1)
    nodes = tuple(sorted(rng.choice(g.n, size=k, replace=False)))
    return induced_subgraph(g, nodes)


def reference_energy(m, model):
    """Independent re-implementation of the forward pass with plain loops."""
    slope = model.leaky_slope
    P = model.params
    k = m.k
    x = [list(row) for row in m.feat_k]
    for l in range(model.gnn_layers):
        W, b = P[f"gnn.{l}.W"], P[f"gnn.{l}.b"]
        nxt = []
        for v in range(k):
            nbrs = [u for u in range(k) if m.adj_k[v][u]]
            if nbrs:
                mean = [sum(x[u][j] for u in nbrs) / len(nbrs) for j in range(len(x[v]))]
            else:
                mean = [0.0] * len(x[v])
            cat = list(x[v]) + mean
            z = [sum(W[i][j] * cat[j] for j in range(len(cat))) + b[i] for i in range(len(b))]
            nxt.append([zi if zi > 0 else slope * zi for zi in z])
        x = nxt
    s = [sum(x[v][j] for v in range(k)) for j in range(len(x[0]))]

    def mlp(vec, W1, b1, W2, b2):
        h = [sum(W1[i][j] * vec[j] for j in range(len(vec))) + b1[i] for i in range(len(b1))]
        h = [v if v > 0 else slope * v for v in h]
        return [sum(W2[i][j] * h[j] for j in range(len(h))) + b2[i] for i in range(len(b2))]

    v = mlp(s, P["readout.W1"], P["readout.b1"], P["readout.W2"], P["readout.b2"])
    nv = math.sqrt(sum(t * t for t in v))
    hrep = [t / nv for t in v] if nv > 0 else [0.0] * len(v)
    r = mlp(hrep, P["rho.W1"], P["rho.b1"], P["rho.W2"], P["rho.b2"])
    return sum(P["energy.w"][i] * r[i] for i in range(len(r)))


class TestInitModel:
    def test_same_seed_identical(self):
        a = init_model(DIMS, seed=5)
        b = init_model(DIMS, seed=5)
        assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)

    def test_different_seeds_differ(self):
        a = init_model(DIMS, seed=5)
        b = init_model(DIMS, seed=6)
        assert any(not np.array_equal(a.params[k], b.params[k]) for k in a.params)

    def test_shapes(self):
        dims = {"p": 4, "d_gnn": 8, "d_hidden": 16, "d_rep": 128, "H": 8}
        model = init_model(dims, seed=0)
        assert model.params["gnn.0.W"].shape == (8, 8)
        assert model.params["readout.W2"].shape == (128, 16)
        assert model.params["rho.W1"].shape == (16, 128)
        assert model.params["energy.w"].shape == (8,)

    def test_biases_zero(self):
        model = init_model(DIMS, seed=1)
        for name, arr in model.params.items():
            if name.rsplit(".", 1)[-1].startswith("b"):
                assert np.all(arr == 0)

    def test_bad_dims_rejected(self):
        with pytest.raises(ConfigError):
            init_model({**DIMS, "d_rep": 0})


class TestGnnForward:
    def test_k1_empty_neighborhood_defined(self):
        g = build_graph(1, [], features=[[1.0, 2.0, 3.0]])
        m = induced_subgraph(g, (0,))
        out = gnn_forward(m, init_model(DIMS, seed=0))
        assert out.shape == (1, 4) and np.all(np.isfinite(out))

    def test_identical_features_complete_graph_rows_equal(self):
        feats = np.tile([0.3, -1.2, 0.5], (4, 1))
        g = build_graph(4, list(itertools.combinations(range(4), 2)), features=feats)
        m = induced_subgraph(g, (0, 1, 2, 3))
        out = gnn_forward(m, init_model(DIMS, seed=1))
        assert np.allclose(out, out[0])

    def test_three_path_hand_computation(self):
        # 1-dim features, hand-set weights: z_v = w_s*x_v + w_n*mean_v + b
        dims = {"p": 1, "d_gnn": 1, "d_hidden": 2, "d_rep": 2, "H": 2}
        model = init_model(dims, seed=0)
        model.params["gnn.0.W"][:] = [[2.0, 10.0]]
        model.params["gnn.0.b"][:] = [0.5]
        a, b, c = 1.0, -2.0, 3.0
        g = build_graph(3, [(0, 1), (1, 2)], features=[[a], [b], [c]])
        m = induced_subgraph(g, (0, 1, 2))
        out = gnn_forward(m, model)
        slope = model.leaky_slope

        def act(z):
            return z if z > 0 else slope * z

        expected = [
            act(2.0 * a + 10.0 * b + 0.5),
            act(2.0 * b + 10.0 * (a + c) / 2.0 + 0.5),
            act(2.0 * c + 10.0 * b + 0.5),
        ]
        assert np.allclose(out[:, 0], expected)


class TestReadout:
    def test_permutation_invariant(self):
        model = init_model(DIMS, seed=2)
        rng = np.random.default_rng(0)
        embeds = rng.normal(size=(5, 4))
        a = readout(embeds, model)
        b = readout(embeds[::-1], model)
        assert np.allclose(a.vector, b.vector, rtol=0, atol=1e-12)

    def test_zero_input_zero_flag(self):
        model = init_model(DIMS, seed=2)
        rep = readout(np.zeros((3, 4)), model)
        assert rep.is_zero and np.all(rep.vector == 0)

    def test_unit_norm(self):
        model = init_model(DIMS, seed=3)
        rng = np.random.default_rng(1)
        for _ in range(10):
            rep = readout(rng.normal(size=(4, 4)), model)
            if not rep.is_zero:
                assert np.linalg.norm(rep.vector) == pytest.approx(1.0, abs=1e-9)


class TestMotifEnergy:
    def test_zero_energy_vector(self):
        model = init_model(DIMS, seed=4)
        model.params["energy.w"][:] = 0.0
        for seed in range(5):
            assert motif_energy(random_motif(3, seed), model) == 0.0

    def test_permutation_invariance(self):
        model = init_model(DIMS, seed=5)
        g = random_graph(6, 0.5, 0, p_features=3)
        vals = [
            motif_energy(induced_subgraph(g, perm), model)
            for perm in itertools.permutations((0, 2, 3, 5))
        ]
        assert max(vals) - min(vals) < 1e-9

    def test_against_independent_reference(self):
        for seed in range(20):
            model = init_model(DIMS, seed=seed)
            m = random_motif(3 + seed % 3, seed)
            assert motif_energy(m, model) == pytest.approx(
                reference_energy(m, model), rel=1e-12, abs=1e-12
            )

    def test_inductive_contract(self):
        # identical induced structure and features => identical energy,
        # even when the motifs come from different graphs
        feats = np.arange(12, dtype=float).reshape(4, 3)
        g1 = build_graph(4, [(0, 1), (1, 2), (2, 3)], features=feats)
        big = np.vstack([np.ones((2, 3)), feats])
        g2 = build_graph(
            6, [(0, 2), (2, 3), (3, 4), (4, 5), (0, 1)], features=big
        )
        model = init_model(DIMS, seed=6)
        m1 = induced_subgraph(g1, (0, 1, 2, 3))
        m2 = induced_subgraph(g2, (2, 3, 4, 5))
        assert np.array_equal(m1.adj_k, m2.adj_k)
        assert np.array_equal(m1.feat_k, m2.feat_k)
        assert motif_energy(m1, model) == motif_energy(m2, model)


class TestBackward:
    def test_zero_upstream(self):
        model = init_model(DIMS, seed=7)
        grad = motif_energy_backward(random_motif(3, 0), model, upstream=0.0)
        assert all(np.all(v == 0) for v in grad.values())

    def test_linearity_in_upstream(self):
        model = init_model(DIMS, seed=8)
        m = random_motif(4, 1)
        g1 = motif_energy_backward(m, model, upstream=1.3)
        g2 = motif_energy_backward(m, model, upstream=2.6)
        for key in g1:
            assert np.allclose(2 * g1[key], g2[key], atol=1e-12)

    @pytest.mark.parametrize("k", [3, 4, 5])
    def test_finite_differences(self, k):
        model = init_model(DIMS, seed=10 + k)
        m = random_motif(k, 20 + k)
        grad = motif_energy_backward(m, model, upstream=1.0)
        h = 1e-5
        rng = np.random.default_rng(k)
        for key, arr in model.params.items():
            flat = arr.reshape(-1)
            for idx in rng.choice(flat.size, size=min(4, flat.size), replace=False):
                old = flat[idx]
                flat[idx] = old + h
                fp = motif_energy(m, model)
                flat[idx] = old - h
                fm = motif_energy(m, model)
                flat[idx] = old
                fd = (fp - fm) / (2 * h)
                an = grad[key].reshape(-1)[idx]
                assert abs(fd - an) <= 1e-5 * max(1.0, abs(fd), abs(an)), key

    def test_multi_layer_gnn_gradients(self):
        model = init_model(DIMS, seed=30, gnn_layers=2)
        m = random_motif(4, 31)
        grad = motif_energy_backward(m, model, upstream=1.0)
        h = 1e-5
        arr = model.params["gnn.1.W"]
        flat = arr.reshape(-1)
        for idx in (0, flat.size // 2, flat.size - 1):
            old = flat[idx]
            flat[idx] = old + h
            fp = motif_energy(m, model)
            flat[idx] = old - h
            fm = motif_energy(m, model)
            flat[idx] = old
            fd = (fp - fm) / (2 * h)
            assert abs(fd - grad["gnn.1.W"].reshape(-1)[idx]) <= 1e-5 * max(1.0, abs(fd))


class TestSerialization:
    def test_round_trip_bit_exact(self):
        model = init_model(DIMS, seed=11)
        other = deserialize_model(serialize_model(model))
        assert other.dims == model.dims
        assert all(np.array_equal(model.params[k], other.params[k]) for k in model.params)

    def test_truncated_document(self):
        doc = serialize_model(init_model(DIMS, seed=12))
        del doc["weights"]["energy.w"]
        with pytest.raises(ConfigError, match="energy.w"):
            deserialize_model(doc)

    def test_version_mismatch(self):
        doc = serialize_model(init_model(DIMS, seed=12))
        doc["version"] = 99
        with pytest.raises(ConfigError, match="version"):
            deserialize_model(doc)

    def test_hand_written_minimal_document(self):
        dims = {"p": 1, "d_gnn": 1, "d_hidden": 1, "d_rep": 1, "H": 1}
        doc = {
            "version": 1,
            "dims": dims,
            "leaky_slope": 0.01,
            "gnn_layers": 1,
            "weights": {
                "gnn.0.W": [[1.0, 0.0]],
                "gnn.0.b": [0.0],
                "readout.W1": [[1.0]],
                "readout.b1": [0.0],
                "readout.W2": [[1.0]],
                "readout.b2": [0.0],
                "rho.W1": [[2.0]],
                "rho.b1": [0.0],
                "rho.W2": [[1.0]],
                "rho.b2": [0.0],
                "energy.w": [3.0],
            },
        }
        model = deserialize_model(doc)
        g = build_graph(1, [], features=[[5.0]])
        m = induced_subgraph(g, (0,))
        # forward by hand: gnn keeps 5, readout gives 5 -> normalized to 1,
        # rho doubles it, energy scales by 3
        assert motif_energy(m, model) == pytest.approx(6.0, abs=1e-12)

    def test_representation_zero_flagged_motif(self):
        model = init_model(DIMS, seed=13)
        rep = motif_representation(random_motif(3, 2), model)
        assert rep.is_zero or np.linalg.norm(rep.vector) == pytest.approx(1.0, abs=1e-9)
