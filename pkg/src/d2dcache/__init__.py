"""QoS-aware content caching and delivery for cache-enabled mmWave D2D networks."""
from .association import (AssociationThresholds, DeliveryDecision, Mode, associate,
                          association_thresholds, baseline_thresholds, gamma_los_d2d)
from .errors import (BracketError, ConfigurationError, DivergentIntegralError,
                     NumericalIntegrationError)
from .model import (ContentLibrary, DerivedConstants, GainPMF, NetworkConfig, derive_constants,
                    effective_noise, interferer_gain_pmf, rate_threshold,
                    worst_case_avg_interference, zipf_popularity)
from .placement import (CachingPolicy, PlacementGeometry, aslp, baseline_hitmax_caching,
                        optimize_caching, placement_distances, q_of_mu, slp_closed_form)
from .analytic import (AnalyticReport, cellular_success_prob, d2d_delivery_prob,
                       d2d_success_prob, laplace_cellular_interference,
                       laplace_d2d_interference, overall_report, self_hit_prob)
from .simulator import (MetricsReport, Topology, TrialOutcome, assign_caches, energy_metrics,
                        evaluate_typical_user, generate_topology, resolve_associations,
                        run_campaign, system_policy)

__version__ = "0.1.0"
