"""Joint transmit beamforming and RIS phase design for a dual-function
radar-communication system, with a Monte Carlo detection harness."""

from .config import (ConfigError, ScenarioConfig, RunArtifacts, db_to_linear,
                     dbm_to_watts, default_config, load_config, make_rng,
                     parse_config, serialize_config, write_csv)
from .channels import (ChannelSet, path_loss_linear, rician_channel,
                       steering_vector, synthesize_channels,
                       zero_ris_channels)
from .signals import (EchoOperators, build_H0, build_H1, comm_sinr,
                      draw_symbols, effective_user_channel,
                      make_shift_matrix, optimal_filter,
                      path_orthogonality_check, place_pulse, radar_snr)
from .surrogate import (SurrogatePoint, build_surrogate, f_surr, g_surr,
                        phi_linear_coeff)
from .subsolver import (BallConstraint, ConvexSubproblem, QuadConstraint,
                        SubsolveResult, kkt_residual, solve)
from .manifold import (euclidean_gradient, init_objective, retract,
                       riemannian_ascent, tangent_project)
from .admm import (BeamformerState, InfeasibleStartError, SolveReport,
                   optimize, update_W, update_lambda, update_phi, update_psi)
from .detection import (RocCurve, analytic_pd, mc_snr_estimate,
                        np_threshold, run_roc)

__version__ = "0.1.0"
