"""Unsupervised joint k-node (motif) graph representations learned with
an energy model whose intractable total energy is replaced by an
unbiased random-walk-tour estimator."""

__version__ = "0.1.0"

from .graph import Graph, Motif, build_graph, induced_subgraph, is_connected, load_graph
from .motifs import KHonNeighborhood, enumerate_cises, exact_energy_sum, hon_neighbors
from .tours import (
    EnergyEstimate,
    Supernode,
    TourEngine,
    TourTrace,
    build_supernode,
    estimate_energy,
    estimate_energy_with_grad,
    run_tour,
    validate_supernode,
)
from .model import (
    EnergyModel,
    MotifRepresentation,
    deserialize_model,
    gnn_forward,
    init_model,
    motif_energy,
    motif_energy_backward,
    motif_representation,
    readout,
    serialize_model,
)
from .training import (
    Adam,
    TrainConfig,
    forest_fire_sample,
    make_noise,
    nce_loss,
    nce_response,
    train,
)
from .evaluate import (
    EmbeddingTable,
    KSetTask,
    balanced_accuracy,
    embed_ksets,
    logistic_fit,
    pool_external,
    run_eval,
)
from .estimator import MotifEmbedder
