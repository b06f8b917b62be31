"""
swgossip: sum-weight gossip averaging over sensor networks.

Simulates BWGossip and the reference algorithms (Random Gossip, Kempe Push-Sum,
Broadcast Gossip) and computes the spectral convergence bound κ = −ln ρ(R) of their
update-matrix families.
"""

__version__ = "0.1.0"

from .families import (
    AssumptionReport,
    FamilyKind,
    UpdateMatrixSet,
    b2_window_length,
    broadcast_gossip_set,
    bwgossip_failure_set,
    bwgossip_set,
    check_assumptions,
    check_b3_numeric,
    family_from_dict,
    family_to_dict,
    pushsum_kempe_enumerated,
    pushsum_kempe_set,
    random_gossip_set,
)
from .graph import Graph, complete_graph, from_edge_list, generate_rgg, graph_from_dict, graph_to_dict, is_connected
from .spectral import (
    SpectralReport,
    contraction_matrix,
    deflated_Sv,
    expected_kron,
    expected_matrix,
    gelfand_radius,
    kappa,
    kempe_closed_forms,
    spectral_radius,
)

__all__ = [
    "__version__",
    "Graph",
    "generate_rgg",
    "from_edge_list",
    "complete_graph",
    "is_connected",
    "graph_to_dict",
    "graph_from_dict",
    "FamilyKind",
    "UpdateMatrixSet",
    "AssumptionReport",
    "bwgossip_set",
    "random_gossip_set",
    "broadcast_gossip_set",
    "pushsum_kempe_set",
    "pushsum_kempe_enumerated",
    "bwgossip_failure_set",
    "check_assumptions",
    "check_b3_numeric",
    "b2_window_length",
    "family_to_dict",
    "family_from_dict",
    "SpectralReport",
    "expected_matrix",
    "expected_kron",
    "contraction_matrix",
    "spectral_radius",
    "gelfand_radius",
    "deflated_Sv",
    "kappa",
    "kempe_closed_forms",
]
