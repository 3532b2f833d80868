# modules/modem.py -> practical modulation over the splitting receiver
#
# Role: constellation generation (PAM / QAM / IM) with unit average power,
# mapping to the noiseless I-Q-P constellation, weighted-distance ML detection,
# Monte-Carlo SER, high-SNR SER approximations and SER joint processing gains.
#
# Dependencies: special.py (Q-function), channel.py (Theta, sampler),
# core/session.py (seed streams, worker pool)

import math
from typing import Any, Dict, List, Literal, Optional, Sequence

import numpy as np

from core.errors import ContractViolation, DomainError
from core.logger import get_logger
from core.session import WorkerPool, chunk_sizes, spawn_seeds
from models import (
    ChannelRealization,
    Constellation,
    DominantPairs,
    HalfSpace,
    LinkBudget,
    ReceivedConstellation,
    SerGain,
    SerResult,
    SplitConfig,
    ThetaPair,
)
from modules.channel import as_split_config, compute_theta, sample_splitting_batch
from modules.special import q_func

logger = get_logger(__name__)

MIN_TRIALS = 10_000
DEFAULT_CHUNK = 1 << 16
WILSON_Z = 1.96


# Constellations

def _odd_levels(n: int) -> List[int]:
    return list(range(1, n, 2))


def make_constellation(scheme: str, m: int) -> Constellation:
    """
    Unit-power constellation of the given scheme and order.

    Index order: PAM lists 1, 3, ..., M-1 then the negatives; QAM lists the
    first-quadrant grid (starting at (1, 1)) then its mirrors in quadrants
    II, III, IV; IM lists sqrt(2 (i - 1)) for i = 1..M.
    """
    scheme = scheme.upper()
    if scheme == "PAM":
        if m < 2 or m % 2:
            raise ContractViolation(f"PAM needs an even order >= 2, got M={m}")
        pos = _odd_levels(m)
        symbols = [(float(x), 0.0) for x in pos] + [(-float(x), 0.0) for x in pos]
        k1 = math.sqrt(3.0 / (m * m - 1))
    elif scheme == "QAM":
        root = math.isqrt(m)
        if m < 4 or root * root != m or root % 2:
            raise ContractViolation(f"QAM needs M a perfect square of an even root, got M={m}")
        quadrant = [(float(x), float(y)) for x in _odd_levels(root) for y in _odd_levels(root)]
        symbols = []
        for sx, sy in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
            symbols.extend((sx * x, sy * y) for x, y in quadrant)
        k1 = math.sqrt(3.0 / (2.0 * (m - 1)))
    elif scheme == "IM":
        if m < 2:
            raise ContractViolation(f"IM needs order >= 2, got M={m}")
        symbols = [(math.sqrt(2.0 * i), 0.0) for i in range(m)]
        k1 = math.sqrt(1.0 / (m - 1))
    else:
        raise ContractViolation(f"unsupported scheme {scheme!r}; expected PAM, QAM or IM")
    return Constellation(scheme=scheme, m=m, symbols=tuple(symbols), k1=k1)


def map_received(c: Constellation, theta: ThetaPair, lb: LinkBudget) -> ReceivedConstellation:
    xy = c.xy
    amp = c.k1 * math.sqrt(theta.theta1 * lb.power)
    z = c.k2 * math.sqrt(theta.theta2) * lb.power * np.sum(xy ** 2, axis=1)
    points = tuple((float(amp * x), float(amp * y), float(zz)) for (x, y), zz in zip(xy, z))
    return ReceivedConstellation(points=points, theta=theta, budget=lb)


def dominant_pairs(c: Constellation) -> DominantPairs:
    if c.scheme == "PAM":
        return DominantPairs(w=1, d_min_domain="iq")
    if c.scheme == "QAM":
        return DominantPairs(w=2 * math.isqrt(c.m), d_min_domain="iq")
    if c.scheme == "IM":
        return DominantPairs(w=c.m - 1, d_min_domain="power")
    raise ContractViolation(f"unsupported scheme {c.scheme!r}")


# Detection

def _weighted_distances(points: np.ndarray, lb: LinkBudget, v: np.ndarray) -> np.ndarray:
    dx = v[:, None, 0] - points[None, :, 0]
    dy = v[:, None, 1] - points[None, :, 1]
    dz = v[:, None, 2] - points[None, :, 2]
    return (dx * dx + dy * dy) / (lb.sigma1_sq / 2.0) + dz * dz / lb.sigma2_sq


def ml_detect_batch(rc: ReceivedConstellation, lb: LinkBudget, v: np.ndarray) -> np.ndarray:
    """Vectorized ML detection of observations v[N, 3]; ties go to the lowest index."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if v.shape[1] != 3:
        raise ContractViolation(f"observations must be (N, 3), got shape {v.shape}")
    return np.argmin(_weighted_distances(rc.array, lb, v), axis=1)


def ml_detect(rc: ReceivedConstellation, lb: LinkBudget, v: Sequence[float]) -> int:
    return int(ml_detect_batch(rc, lb, np.asarray(v, dtype=float)[None, :])[0])


def decision_regions(rc: ReceivedConstellation, lb: LinkBudget) -> List[List[HalfSpace]]:
    """Per symbol, the half-spaces whose intersection is its decision region."""
    pts = rc.array
    regions = []
    for i, (xi, yi, zi) in enumerate(pts):
        planes = []
        for j, (xj, yj, zj) in enumerate(pts):
            if j == i:
                continue
            normal = ((xj - xi) / lb.sigma1_sq, (yj - yi) / lb.sigma1_sq, (zj - zi) / (2.0 * lb.sigma2_sq))
            offset = (xj ** 2 + yj ** 2 - xi ** 2 - yi ** 2) / (2.0 * lb.sigma1_sq) + (zj ** 2 - zi ** 2) / (
                4.0 * lb.sigma2_sq
            )
            planes.append(HalfSpace(symbol=i, neighbour=j, normal=tuple(map(float, normal)), offset=float(offset)))
        regions.append(planes)
    return regions


def decision_regions_json(rc: ReceivedConstellation, lb: LinkBudget) -> List[Dict[str, Any]]:
    return [
        {"symbol": i, "point": list(rc.points[i]), "half_spaces": [h.model_dump() for h in planes]}
        for i, planes in enumerate(decision_regions(rc, lb))
    ]


def in_decision_region(
    rc: ReceivedConstellation, lb: LinkBudget, i: int, v: Sequence[float], regions: Optional[List[List[HalfSpace]]] = None
) -> bool:
    regions = regions or decision_regions(rc, lb)
    x, y, z = (float(t) for t in v)
    return all(h.normal[0] * x + h.normal[1] * y + h.normal[2] * z <= h.offset for h in regions[i])


# Monte-Carlo SER

def wilson_halfwidth(errors: int, trials: int, z: float = WILSON_Z) -> float:
    p = errors / trials
    denom = 1.0 + z * z / trials
    return z / denom * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials))


def _ser_task(task: tuple) -> int:
    symbols, points, theta, lb, n, seed = task
    rng = np.random.default_rng(seed)
    idx = rng.integers(symbols.size, size=n)
    y1, y2 = sample_splitting_batch(theta, lb, symbols[idx], rng)
    v = np.column_stack([y1.real, y1.imag, y2])
    detected = np.argmin(_weighted_distances(points, lb, v), axis=1)
    return int(np.count_nonzero(detected != idx))


def ser_monte_carlo(
    c: Constellation,
    ch: ChannelRealization,
    cfg: SplitConfig,
    lb: LinkBudget,
    trials: int,
    seed: int = 0,
    *,
    workers: Optional[int] = 1,
    chunk_size: int = DEFAULT_CHUNK,
) -> SerResult:
    """Equiprobable symbols through the splitting channel, detected with the weighted distance."""
    trials = int(trials)
    if trials < MIN_TRIALS:
        raise ContractViolation(f"need at least {MIN_TRIALS} trials, got {trials}")
    theta = compute_theta(ch, cfg)
    rc = map_received(c, theta, lb)
    sizes = chunk_sizes(trials, chunk_size)
    tasks = [(c.unit_symbols, rc.array, theta, lb, n, s) for n, s in zip(sizes, spawn_seeds(seed, len(sizes)))]
    with WorkerPool(workers) as pool:
        errors = sum(pool.map(_ser_task, tasks))
    logger.debug("%d-%s rho=%s: %d/%d errors", c.m, c.scheme, cfg.rho, errors, trials)
    return SerResult(ser=errors / trials, trials=trials, errors=errors, ci95_halfwidth=wilson_halfwidth(errors, trials))


# Analytic SER

def _ser_high_snr_value(c: Constellation, theta1: float, theta2: float, lb: LinkBudget) -> float:
    if c.scheme == "IM":
        return 2.0 * (c.m - 1) / c.m * q_func(math.sqrt(theta2) * lb.power / ((c.m - 1) * lb.sigma2))
    # x1 = 1 for both PAM and QAM
    x1 = c.k1 * math.sqrt(theta1 * lb.power)
    arg = math.sqrt(2.0) * x1 / lb.sigma1
    if c.scheme == "PAM":
        return 2.0 / c.m * q_func(arg)
    return 4.0 / math.sqrt(c.m) * q_func(arg)


def ser_high_snr(c: Constellation, theta: ThetaPair, lb: LinkBudget) -> float:
    """Dominant-pair SER approximation at high SNR."""
    if c.scheme == "IM":
        if theta.theta2 <= 0.0:
            raise DomainError("IM high-SNR SER needs Theta2 > 0")
    elif theta.theta1 <= 0.0 or theta.theta2 <= 0.0:
        raise DomainError(
            f"{c.scheme} high-SNR SER needs an interior split (Theta1, Theta2 > 0); "
            "use ser_conventional at the boundaries"
        )
    return _ser_high_snr_value(c, theta.theta1, theta.theta2, lb)


def _ser_real_axis(levels: np.ndarray, sd: float) -> float:
    """Exact SER of nearest-point detection for equiprobable points on a line, Gaussian noise sd."""
    pts = np.sort(levels)
    half_gaps = np.diff(pts) / 2.0
    tails = q_func(half_gaps / sd)
    # every gap contributes one tail to each of its two neighbours
    return float(2.0 * np.sum(tails) / pts.size)


def tier_collision_floor(c: Constellation) -> float:
    """SER floor of power-only detection: symbols that share a power tier are indistinguishable."""
    powers = np.round(np.sum(c.xy ** 2, axis=1), 9)
    return (c.m - np.unique(powers).size) / c.m


def ser_conventional(
    c: Constellation, ch: ChannelRealization, lb: LinkBudget, receiver: Literal["coherent", "noncoherent"]
) -> float:
    """SER of the conventional receivers (all antennas on one branch)."""
    m = c.m
    if receiver == "coherent":
        if c.scheme == "PAM":
            return 2.0 * (m - 1) / m * q_func(math.sqrt(6.0 * ch.h2 * lb.power / (lb.sigma1_sq * (m * m - 1))))
        if c.scheme == "QAM":
            a = q_func(math.sqrt(3.0 * ch.h2 * lb.power / ((m - 1) * lb.sigma1_sq)))
            r = 1.0 - 1.0 / math.sqrt(m)
            return 4.0 * r * a - 4.0 * r * r * a * a
        levels = c.k1 * math.sqrt(ch.h2 * lb.power) * c.xy[:, 0]
        return _ser_real_axis(levels, lb.sigma1 / math.sqrt(2.0))
    if receiver == "noncoherent":
        if c.scheme == "IM":
            return _ser_high_snr_value(c, 0.0, ch.h4, lb)
        # lower bound: noise-free tier confusion only
        return tier_collision_floor(c)
    raise ContractViolation(f"unknown receiver {receiver!r}")


def ser_gain_high_snr(c: Constellation, ch: ChannelRealization, lb: LinkBudget) -> float:
    """Formula-level SER gain: best conventional SER over the infimum of the high-SNR approximation."""
    best_conventional = min(ser_conventional(c, ch, lb, "coherent"), ser_conventional(c, ch, lb, "noncoherent"))
    if c.scheme == "IM":
        # decreasing in Theta2, which peaks at rho = 0
        best_split = _ser_high_snr_value(c, 0.0, ch.h4, lb)
    else:
        # decreasing in Theta1, supremum H2 as rho -> 1
        best_split = _ser_high_snr_value(c, ch.h2, 0.0, lb)
    if best_split == 0.0:
        raise DomainError("high-SNR SER underflows to 0; gain is undefined at this power")
    return best_conventional / best_split


def asymptotic_ser_gain(c: Constellation) -> float:
    if c.scheme == "PAM":
        return float(c.m - 1)
    if c.scheme == "QAM":
        return math.sqrt(c.m) - 1.0
    return 1.0


def ser_joint_processing_gain(
    c: Constellation,
    ch: ChannelRealization,
    lb: LinkBudget,
    rho_grid: Sequence[Any],
    trials: int,
    seed: int = 0,
    *,
    workers: Optional[int] = 1,
) -> SerGain:
    """Best endpoint SER over the grid-minimal SER, all measured by Monte Carlo."""
    configs = [as_split_config(r, ch.k) for r in rho_grid]
    if not any(cfg.is_all_power for cfg in configs) or not any(cfg.is_all_coherent for cfg in configs):
        raise ContractViolation("SER gain grid must include both rho = 0 and rho = 1")
    results = tuple(
        ser_monte_carlo(c, ch, cfg, lb, trials, s, workers=workers)
        for cfg, s in zip(configs, spawn_seeds(seed, len(configs)))
    )
    sers = np.array([r.ser for r in results])
    best = int(np.argmin(sers))
    if sers[best] == 0.0:
        logger.warning("zero measured SER at rho=%s; increase trials", configs[best].rho)
        return SerGain(gain=None, argmin_rho=None, needs_more_trials=True, results=results)
    endpoint = min(r.ser for cfg, r in zip(configs, results) if cfg.is_all_power or cfg.is_all_coherent)
    return SerGain(gain=float(endpoint / sers[best]), argmin_rho=configs[best], results=results)
