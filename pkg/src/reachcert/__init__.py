"""Certificates and minimal witnessing subsystems for reachability in MDPs."""

from .model import (ModelError, PropertySpec, ReachMdp, Subsystem,
                    ValidationReport, induced_dtmc, parse_model,
                    parse_property, parse_rational, prune_unreachable,
                    restrict, serialize_model, serialize_subsystem,
                    swap_goal_fail, validate)
from .linsys import (FarkasSystem, LinearProgram, LpSolution,
                     build_farkas_system, reach_probabilities, reach_value,
                     solve_lp)
from .certificates import (CertificateError, CertificateReport,
                           FarkasCertificate, MRScheduler, PropertyFalseError,
                           RepairError, StrictInfeasibleError,
                           frequencies_from_scheduler, generate_certificate,
                           parse_certificate, repair_certificate,
                           scheduler_from_y, serialize_certificate,
                           verify_certificate)
from .witness import (InfeasiblePolytopeError, PolytopeSpec, WitnessError,
                      WitnessResult, exact_minimal_witness, export_milp,
                      k_bound, parse_milp, polytope_feasible,
                      polytope_spec_for, qs_heuristic,
                      reduce_size_to_state, reduce_transition_to_state,
                      serialize_witness, witness_from_point)
from .treedp import (BinarizationMap, DpTable, binarize, dp_tables,
                     is_tree_shaped, tree_minimal_witness)
from .hardness import (OracleGuardError, UndirectedGraph,
                       brute_force_max_clique, brute_force_min_witness,
                       clique_to_witness_instance, make_graph, parse_graph,
                       random_model, random_tree_dtmc, serialize_graph)

__version__ = "0.1.0"
