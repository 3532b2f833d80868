# modules/optimize.py -> splitting-ratio optimization and antenna partitioning
#
# The high-SNR MI depends on rho only through Theta1 * Theta2, so the ratio
# problem is: maximize (sum rho|h|^2)(sum (1-rho)^2 |h|^4) over [0, 1]^K.
# The simplified receiver restricts rho to {0, 1} per antenna.

import math
from typing import Literal, Sequence, Tuple, Union

import numpy as np

from core.errors import ContractViolation
from core.logger import get_logger
from core.session import spawn_seeds
from models import ChannelRealization, LinkBudget, PartitionResult, RatioSolution, SplitConfig
from modules.channel import compute_theta, sample_channel_iid_rayleigh
from modules.special import EULER_GAMMA

logger = get_logger(__name__)

Ordering = Literal["given", "sorted_by_gain"]

DEFAULT_RESOLUTION = 0.01
DEFAULT_RESTARTS = 64
GRID_MAX_K = 3
_ASCENT_TOL = 1e-13
_ASCENT_MAX_SWEEPS = 1000


def p1_objective(ch: ChannelRealization, rho: Union[SplitConfig, Sequence[float]]) -> float:
    cfg = rho if isinstance(rho, SplitConfig) else SplitConfig(rho=tuple(rho))
    return compute_theta(ch, cfg).product


def _objective(g2: np.ndarray, rho: np.ndarray) -> np.ndarray:
    # rho may carry leading batch axes; the antenna axis is last
    theta1 = np.sum(rho * g2, axis=-1)
    theta2 = np.sum((1.0 - rho) ** 2 * g2 ** 2, axis=-1)
    return theta1 * theta2


def _best_coordinate(a: float, b: float, g: float) -> float:
    """argmax over t in [0, 1] of (a + t g)(b + (1 - t)^2 g^2)."""
    # stationary points in u = 1 - t: 3 g^2 u^2 - 2 (a g + g^2) u + b = 0
    candidates = [0.0, 1.0]
    roots = np.roots([3.0 * g * g, -2.0 * (a * g + g * g), b])
    candidates.extend(1.0 - float(r.real) for r in roots if abs(r.imag) < 1e-12)
    candidates = [min(1.0, max(0.0, t)) for t in candidates]
    values = [(a + t * g) * (b + (1.0 - t) ** 2 * g * g) for t in candidates]
    return candidates[int(np.argmax(values))]


def coordinate_ascent(
    ch: ChannelRealization,
    rho0: Union[SplitConfig, Sequence[float]],
    tol: float = _ASCENT_TOL,
    max_sweeps: int = _ASCENT_MAX_SWEEPS,
) -> SplitConfig:
    """Projected coordinate ascent; each coordinate step solves its cubic exactly on [0, 1]."""
    g2 = ch.power_gains
    rho = np.array(rho0.rho if isinstance(rho0, SplitConfig) else rho0, dtype=float)
    if rho.shape != g2.shape:
        raise ContractViolation(f"start point has {rho.size} entries for {g2.size} antennas")
    rho = np.clip(rho, 0.0, 1.0)
    current = float(_objective(g2, rho))
    for sweep in range(max_sweeps):
        for i in range(rho.size):
            if g2[i] == 0.0:
                continue
            a = float(np.sum(rho * g2) - rho[i] * g2[i])
            b = float(np.sum((1.0 - rho) ** 2 * g2 ** 2) - (1.0 - rho[i]) ** 2 * g2[i] ** 2)
            t = _best_coordinate(a, b, float(g2[i]))
            # only move on strict improvement, keeps the ascent monotone
            trial = rho.copy()
            trial[i] = t
            if _objective(g2, trial) > _objective(g2, rho):
                rho = trial
        updated = float(_objective(g2, rho))
        if updated - current <= tol * max(1.0, abs(current)):
            current = updated
            break
        current = updated
    logger.debug("coordinate ascent stopped after %d sweeps at %.6g", sweep + 1, current)
    return SplitConfig(rho=tuple(float(r) for r in rho))


def _grid_search(g2: np.ndarray, resolution: float) -> np.ndarray:
    n = int(round(1.0 / resolution)) + 1
    axis = np.linspace(0.0, 1.0, n)
    k = g2.size
    best_val, best_rho = -math.inf, None
    # first coordinate looped, the rest vectorized
    rest = np.stack(np.meshgrid(*([axis] * (k - 1)), indexing="ij"), axis=-1).reshape(-1, k - 1) if k > 1 else None
    for r0 in axis:
        if rest is None:
            pts = np.array([[r0]])
        else:
            pts = np.column_stack([np.full(rest.shape[0], r0), rest])
        vals = _objective(g2, pts)
        idx = int(np.argmax(vals))
        if vals[idx] > best_val:
            best_val, best_rho = float(vals[idx]), pts[idx]
    return best_rho


def solve_p1(
    ch: ChannelRealization,
    resolution: float = DEFAULT_RESOLUTION,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
) -> RatioSolution:
    """Maximize Theta1 * Theta2 over per-antenna splitting ratios."""
    k = ch.k
    if not 0.0 < resolution <= 0.5:
        raise ContractViolation(f"grid resolution must lie in (0, 0.5], got {resolution}")
    g2 = ch.power_gains

    if not np.any(g2 > 0.0):
        logger.warning("all channel gains are zero; every split gives objective 0")
        method = "closed_form_k1" if k == 1 else ("grid" if k <= GRID_MAX_K else "multistart_local")
        return RatioSolution(
            rho=SplitConfig.uniform(k, 1.0 / 3.0), objective=0.0, method=method,
            degenerate=True, interior=True, boundary_objective=0.0,
        )

    if k == 1:
        cfg = SplitConfig(rho=(1.0 / 3.0,))
        method = "closed_form_k1"
    elif k <= GRID_MAX_K:
        cfg = coordinate_ascent(ch, _grid_search(g2, resolution))
        method = "grid"
    else:
        rng = np.random.default_rng(seed)
        partition = best_simplified_partition(ch)
        starts = [np.full(k, 1.0 / 3.0), partition_config(ch, partition.k1).array]
        starts += list(rng.uniform(0.01, 0.99, size=(restarts, k)))
        cfg, best = None, -math.inf
        for start in starts:
            cand = coordinate_ascent(ch, start)
            val = p1_objective(ch, cand)
            if val > best:
                cfg, best = cand, val
        method = "multistart_local"

    boundary = best_simplified_partition(ch).objective if k >= 2 else 0.0
    objective = p1_objective(ch, cfg)
    interior = all(0.0 < r < 1.0 for r in cfg.rho)
    logger.debug("P1 (%s): objective %.6g, binary best %.6g", method, objective, boundary)
    return RatioSolution(
        rho=cfg, objective=objective, method=method,
        interior=interior, boundary_objective=boundary,
    )


# Simplified receiver

def _antenna_order(ch: ChannelRealization, ordering: Ordering) -> np.ndarray:
    if ordering == "given":
        return np.arange(ch.k)
    if ordering == "sorted_by_gain":
        # weakest first: the CD prefix takes the weak antennas, PD the strong ones
        return np.argsort(ch.power_gains, kind="stable")
    raise ContractViolation(f"unknown antenna ordering {ordering!r}")


def best_simplified_partition(ch: ChannelRealization, ordering: Ordering = "given") -> PartitionResult:
    """Exhaustive K1 = 1..K-1 search; the first K1 antennas (in `ordering`) go to the CD branch."""
    if ch.k < 2:
        raise ContractViolation(f"partitioning needs at least two antennas, got k={ch.k}")
    g2 = ch.power_gains[_antenna_order(ch, ordering)]
    cd = np.cumsum(g2)[:-1]
    pd = np.sum(g2 ** 2) - np.cumsum(g2 ** 2)[:-1]
    objective = cd * pd
    best = int(np.argmax(objective))  # first max -> smallest K1
    return PartitionResult(k1=best + 1, objective=float(objective[best]))


def partition_config(ch: ChannelRealization, k1: int, ordering: Ordering = "given") -> SplitConfig:
    """Binary split config induced by a partition under the given antenna ordering."""
    order = _antenna_order(ch, ordering)
    rho = np.zeros(ch.k)
    rho[order[:k1]] = 1.0
    return SplitConfig(rho=tuple(float(r) for r in rho))


def average_partition_ratio(
    k: int, realizations: int, seed: int, ordering: Ordering = "given"
) -> Tuple[float, float]:
    """Mean and standard deviation of K1*/K over i.i.d. Rayleigh realizations."""
    ratios = np.array([
        best_simplified_partition(sample_channel_iid_rayleigh(k, s), ordering).k1 / k
        for s in spawn_seeds(seed, realizations)
    ])
    return float(ratios.mean()), float(ratios.std())


def simplified_mi_large_k(lb: LinkBudget, k: int, moments: Tuple[float, float]) -> float:
    """High-SNR MI of the half/half simplified receiver for many antennas."""
    m2, m4 = moments
    if k < 1 or m2 <= 0.0 or m4 <= 0.0 or lb.power <= 0.0:
        raise ContractViolation("need k >= 1, positive channel moments and power > 0")
    arg = k * lb.power ** 1.5 * math.sqrt(m2 * m4) / (math.sqrt(2.0) * lb.sigma1 * lb.sigma2)
    return math.log2(arg) - EULER_GAMMA / (2.0 * math.log(2.0))
