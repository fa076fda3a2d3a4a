"""Distance-threshold user association for a single content request."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .model import ContentLibrary, DerivedConstants, NetworkConfig
from .placement import CachingPolicy, qos_distance


class Mode(str, Enum):
    SELF_CACHE = "SelfCache"
    D2D_LOS = "D2D-LoS"
    D2D_NLOS = "D2D-NLoS"
    CELLULAR_FRONTHAUL = "Cellular-Fronthaul"
    CELLULAR_BACKHAUL = "Cellular-Backhaul"

    @property
    def is_d2d(self) -> bool:
        return self in (Mode.D2D_LOS, Mode.D2D_NLOS)

    @property
    def is_cellular(self) -> bool:
        return self in (Mode.CELLULAR_FRONTHAUL, Mode.CELLULAR_BACKHAUL)

    @property
    def offloaded(self) -> bool:
        return self is Mode.SELF_CACHE or self.is_d2d


@dataclass(frozen=True)
class AssociationThresholds:
    """Per-file D2D distance thresholds.

    ``gamma`` is ``None`` for the baseline rule, which ignores QoS and uses
    the discovery range ``D_R`` for every file.
    """

    gamma: float | None
    d_hat_L: np.ndarray = field(repr=False)
    d_hat_N: np.ndarray = field(repr=False)
    d_iu: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class DeliveryDecision:
    mode: Mode
    file_index: int
    server_distance: float | None = None
    server: int | None = None


def gamma_los_d2d(q_star, library: ContentLibrary, config: NetworkConfig) -> float:
    """Probability that a request is served by a LoS D2D transmitter.

    Used to scale the worst-case interference down to the expected load.
    """
    q = np.asarray(q_star.q if isinstance(q_star, CachingPolicy) else q_star, dtype=float)
    a = math.pi * config.cacher_density_per_q * config.D_L**2
    return float(np.sum(library.popularity * (1.0 - q) * -np.expm1(-a * q)))


def d2d_radius(d_hat_L, d_hat_N, config: NetworkConfig) -> np.ndarray:
    return np.minimum(np.minimum(d_hat_L, np.maximum(d_hat_N, config.D_L)), config.D_R)


def association_thresholds(q_star, constants: DerivedConstants, library: ContentLibrary,
                           config: NetworkConfig) -> AssociationThresholds:
    gamma = gamma_los_d2d(q_star, library, config)
    interference = gamma * constants.i_bar
    gain = config.G_m**2
    d_hat_L = qos_distance(gain, constants.thresholds, interference, constants.n_hat, config.alpha_L)
    d_hat_N = qos_distance(gain, constants.thresholds, interference, constants.n_hat, config.alpha_N)
    return AssociationThresholds(gamma, d_hat_L, d_hat_N, d2d_radius(d_hat_L, d_hat_N, config))


def baseline_thresholds(library: ContentLibrary, config: NetworkConfig) -> AssociationThresholds:
    """S-2 delivery: nearest cacher within ``D_R``, whatever the link quality."""
    inf = np.full(library.N, np.inf)
    return AssociationThresholds(None, inf, inf.copy(), np.full(library.N, float(config.D_R)))


def associate(request: int, self_cache: Iterable[int],
              neighbors: Sequence[tuple[float, Iterable[int]]],
              edge_cloud: Iterable[int], thresholds: AssociationThresholds,
              config: NetworkConfig) -> DeliveryDecision:
    """Serve one request: self cache, then the closest cacher within the
    file's D2D radius (LoS inside ``D_L``, NLoS beyond), then cellular.

    ``neighbors`` lists candidate D2D transmitters as ``(distance, files)``;
    equidistant cachers resolve to the lowest list index.
    """
    n_files = len(thresholds.d_iu)
    if not 0 <= request < n_files:
        raise IndexError(f"file index {request} outside library of {n_files} files")
    if request in set(self_cache):
        return DeliveryDecision(Mode.SELF_CACHE, request)

    radius = thresholds.d_iu[request]
    best, best_dist = None, math.inf
    for idx, (dist, files) in enumerate(neighbors):
        if dist < best_dist and dist <= radius and request in files:
            best, best_dist = idx, float(dist)
    if best is not None:
        mode = Mode.D2D_LOS if best_dist <= config.D_L else Mode.D2D_NLOS
        return DeliveryDecision(mode, request, best_dist, best)

    if request in set(edge_cloud):
        return DeliveryDecision(Mode.CELLULAR_FRONTHAUL, request)
    return DeliveryDecision(Mode.CELLULAR_BACKHAUL, request)
