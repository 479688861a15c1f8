"""Metric frames on finite pointed metric spaces.

Families of scalar Lipschitz maps whose analysis map is bi-Lipschitz, with
exact bound computation, concrete constructions, perturbation results and
the Lipschitz-free space realised by linear programming.
"""
from .constructions import (ConstructedFrame, char_conversions, embedding_frame,
                            geometric_frame, kuratowski_frame, log_frame,
                            sum_decomposition_frame)
from .errors import (ContractionError, DomainError, HypothesisError,
                     InfeasibleExtensionError, MetricAxiomError, MetricFramesError,
                     NormalizationError, SolverError, StructuralError)
from .frames import (FrameBounds, FrameSystem, ReconstructionMap, certify, combine,
                     decoder_nearest, frame_bounds, is_bessel, precompose, scale,
                     synthesis_norm_check, transport_frame, verify_reconstruction)
from .free_space import (Molecule, correspondence_check, embed, free_norm,
                         free_norm_oracle, linearize)
from .lipschitz import (LipschitzFamily, kuratowski_functional, lip0_norm, lip_number,
                        mcshane_extend)
from .metric_core import (FiniteMetricSpace, from_matrix, from_points, metric_closure,
                          product_space, validate_metric)
from .perturbation import (PerturbationParams, bessel_perturb, invert_lip,
                           perturb_and_certify, predict_bounds_perturb,
                           quadratic_closeness, stability_reconstruct,
                           verify_perturbation_hypothesis)
from .seq_norms import SequenceNormSpec, seq_norm, tail_bound, truncation_for_tail

__version__ = "0.1.0"
