# modules/mi.py -> mutual information of the splitting channel
#
# Role: closed forms for the conventional receivers, the quadrature value of
# the power-only channel, a Monte-Carlo histogram estimator for the joint
# (I, Q, P) observation, the high-SNR approximations and the joint processing
# gain built on top of them.
#
# Dependencies: special.py (E1, EMG density), channel.py (Theta, sampler),
# core/session.py (worker pool, seed streams)

import math
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from core.errors import ContractViolation, DomainError, NumericError
from core.logger import get_logger
from core.session import WorkerPool, chunk_sizes, spawn_seeds
from models import ChannelRealization, EmgParams, LinkBudget, MiEstimate, MiGain, SplitConfig, ThetaPair
from modules.channel import as_split_config, compute_theta, sample_splitting_batch
from modules.special import EULER_GAMMA, emg_logpdf, exp_scaled_E1

logger = get_logger(__name__)

LN2 = math.log(2.0)
MIN_SAMPLES = 10_000
MIN_BINS = 8
DEFAULT_BINS = 64
DEFAULT_BATCHES = 10
DEFAULT_RANGE_SD = 6.0
DEFAULT_CHUNK = 1 << 18

RhoLike = Union[float, Sequence[float], SplitConfig]


# Closed forms for the conventional receivers

def mi_coherent_closed_form(ch: ChannelRealization, lb: LinkBudget) -> float:
    """All power to the coherent branch: complex AWGN capacity."""
    return math.log2(1.0 + ch.h2 * lb.power / lb.sigma1_sq)


def mi_noncoherent_lower_bound(ch: ChannelRealization, lb: LinkBudget) -> float:
    """All power to the power detector: high-SNR lower bound."""
    return 0.5 * math.log2(1.0 + ch.h4 * lb.power ** 2 * math.e / (2.0 * math.pi * lb.sigma2_sq))


def _gaussian_entropy_bits(var: float) -> float:
    return 0.5 * math.log2(2.0 * math.pi * math.e * var)


def _complex_gaussian_entropy_bits(var: float) -> float:
    return math.log2(math.pi * math.e * var)


def mi_noncoherent_exact(ch: ChannelRealization, lb: LinkBudget, quadrature_tol: float = 1e-8) -> float:
    """h(Y2) - h(N) for the power-only channel, by adaptive quadrature of the EMG density."""
    if lb.power == 0.0 or ch.h4 == 0.0:
        return 0.0
    params = EmgParams(scale=math.sqrt(ch.h4) * lb.power, noise_sd=lb.sigma2)
    s, sd = params.scale, params.noise_sd

    def integrand(y: float) -> float:
        lf = emg_logpdf(params, y)
        return -math.exp(lf) * lf / LN2

    lo, hi = -12.0 * sd, 60.0 * s + 12.0 * sd
    edges = sorted({lo, -sd, 0.0, sd, s, 5.0 * s, 20.0 * s, hi})
    edges = [e for e in edges if lo <= e <= hi]
    tol_each = quadrature_tol / (len(edges) - 1)

    h_y2 = 0.0
    total_err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        out = integrate.quad(integrand, a, b, epsabs=tol_each, epsrel=0.0, limit=200, full_output=1)
        value, abserr = out[0], out[1]
        if len(out) > 3 or abserr > tol_each:
            raise NumericError(
                "entropy quadrature did not converge",
                {"interval": (a, b), "abserr": abserr, "tolerance": tol_each,
                 "message": out[3] if len(out) > 3 else ""},
            )
        h_y2 += value
        total_err += abserr
    logger.debug("h(Y2)=%.6f bits (abserr %.2e)", h_y2, total_err)
    return h_y2 - _gaussian_entropy_bits(lb.sigma2_sq)


# Monte-Carlo histogram estimator

def _draw(theta: ThetaPair, lb: LinkBudget, n: int, seed: int, dims: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    x = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    y1, y2 = sample_splitting_batch(theta, lb, x, rng)
    if dims == 3:
        # unit-Jacobian shear, h(Y) unchanged; strips the |y1|^2 trend from the power axis
        shear = math.sqrt(theta.theta2) / theta.theta1
        return np.column_stack([y1.real, y1.imag, y2 - shear * np.abs(y1) ** 2])
    if dims == 2:
        return np.column_stack([y1.real, y1.imag])
    return y2[:, None]


def _moments_task(task: tuple) -> np.ndarray:
    theta, lb, n, seed, dims = task
    v = _draw(theta, lb, n, seed, dims)
    return np.stack([v.sum(axis=0), (v * v).sum(axis=0)])


def _histogram_task(task: tuple) -> np.ndarray:
    theta, lb, n, seed, dims, ranges, bins = task
    v = _draw(theta, lb, n, seed, dims)
    counts, _ = np.histogramdd(v, bins=bins, range=ranges)
    return counts.astype(np.int64)


def _entropy_bits(counts: np.ndarray, cell_volume: float) -> float:
    # empty cells contribute 0 (p log p -> 0)
    c = counts[counts > 0].astype(float)
    p = c / c.sum()
    return float(-np.sum(p * np.log2(p)) + math.log2(cell_volume))


def mi_mc_histogram(
    ch: ChannelRealization,
    cfg: SplitConfig,
    lb: LinkBudget,
    samples: int,
    bins: int = DEFAULT_BINS,
    seed: int = 0,
    *,
    batches: int = DEFAULT_BATCHES,
    range_sd: float = DEFAULT_RANGE_SD,
    workers: Optional[int] = 1,
    chunk_size: int = DEFAULT_CHUNK,
) -> MiEstimate:
    """
    Histogram estimate of I(X; Y1, Y2) under complex Gaussian input.

    The joint entropy is estimated on a regular grid spanning mean +/- range_sd
    standard deviations per axis, then the known noise entropies are subtracted.
    In 3-D the power axis is binned as y2 - sqrt(Theta2)/Theta1 |y1|^2, which has
    the same joint entropy and a far narrower spread at high SNR.
    An axis that carries no signal (Theta = 0) is dropped and its noise entropy
    is not subtracted, so the estimate reduces to the 2-D or 1-D case exactly.
    """
    samples = int(samples)
    if samples < MIN_SAMPLES:
        raise ContractViolation(f"need at least {MIN_SAMPLES} samples, got {samples}")
    if bins < MIN_BINS:
        raise ContractViolation(f"need at least {MIN_BINS} bins per axis, got {bins}")
    if batches < 2 or samples < batches:
        raise ContractViolation(f"jackknife needs 2 <= batches <= samples, got {batches}")

    theta = compute_theta(ch, cfg)
    if lb.power == 0.0 or (theta.theta1 == 0.0 and theta.theta2 == 0.0):
        return MiEstimate(bits=0.0, samples=samples, bins_per_axis=bins, std_err=0.0, dims=1)

    if theta.theta2 == 0.0:
        dims, noise_bits = 2, _complex_gaussian_entropy_bits(lb.sigma1_sq)
    elif theta.theta1 == 0.0:
        dims, noise_bits = 1, _gaussian_entropy_bits(lb.sigma2_sq)
    else:
        dims = 3
        noise_bits = _complex_gaussian_entropy_bits(lb.sigma1_sq) + _gaussian_entropy_bits(lb.sigma2_sq)

    # fixed batch / chunk layout -> identical streams for any worker count
    batch_sizes = [samples // batches + (1 if b < samples % batches else 0) for b in range(batches)]
    layout: List[Tuple[int, int, int]] = []  # (batch, n, seed)
    for b, (size, bseed) in enumerate(zip(batch_sizes, spawn_seeds(seed, batches))):
        sizes = chunk_sizes(size, chunk_size)
        layout.extend((b, n, s) for n, s in zip(sizes, spawn_seeds(bseed, len(sizes))))

    with WorkerPool(workers) as pool:
        sums = np.zeros((2, dims))
        for part in pool.map(_moments_task, [(theta, lb, n, s, dims) for _, n, s in layout]):
            sums += part
        mean = sums[0] / samples
        sd = np.sqrt(np.maximum(sums[1] / samples - mean ** 2, 0.0))
        if np.any(sd == 0.0):
            raise NumericError("degenerate histogram axis", {"sd": sd.tolist()})
        ranges = [(float(m - range_sd * d), float(m + range_sd * d)) for m, d in zip(mean, sd)]

        per_batch = np.zeros((batches,) + (bins,) * dims, dtype=np.int64)
        tasks = [(theta, lb, n, s, dims, ranges, bins) for _, n, s in layout]
        for (b, _, _), counts in zip(layout, pool.map(_histogram_task, tasks)):
            per_batch[b] += counts

    cell_volume = float(np.prod([(hi - lo) / bins for lo, hi in ranges]))
    total = per_batch.sum(axis=0)
    bits = _entropy_bits(total, cell_volume) - noise_bits

    # leave-one-batch-out jackknife
    loo = np.array([_entropy_bits(total - per_batch[b], cell_volume) - noise_bits for b in range(batches)])
    std_err = float(math.sqrt((batches - 1) / batches * np.sum((loo - loo.mean()) ** 2)))

    outliers = samples - int(total.sum())
    estimate = MiEstimate(
        bits=bits,
        samples=samples,
        bins_per_axis=bins,
        std_err=std_err,
        dims=dims,
        undersampled=samples < bins ** dims,
        outliers=outliers,
    )
    logger.debug("MC MI rho=%s -> %.4f +/- %.4f bits (%dD)", cfg.rho, bits, std_err, dims)
    return estimate


# High-SNR approximations

def mi_high_snr_approx(
    ch: ChannelRealization, cfg: SplitConfig, lb: LinkBudget, form: Literal["ei", "log"] = "ei"
) -> float:
    theta = compute_theta(ch, cfg)
    if theta.theta1 <= 0.0 or theta.theta2 <= 0.0:
        raise DomainError(
            "high-SNR approximation needs both branches active; use "
            "mi_coherent_closed_form / mi_noncoherent_exact at the boundaries"
        )
    if lb.power <= 0.0:
        raise DomainError("high-SNR approximation needs power > 0")
    p = lb.power
    if form == "ei":
        u = theta.theta1 * lb.sigma2_sq / (2.0 * theta.theta2 * lb.sigma1_sq * p)
        return math.log2(theta.theta1 * p / lb.sigma1_sq) + exp_scaled_E1(u) / (2.0 * LN2)
    if form == "log":
        arg = math.sqrt(2.0) * p ** 1.5 * math.sqrt(theta.product) / (lb.sigma1 * lb.sigma2)
        return math.log2(arg) - EULER_GAMMA / (2.0 * LN2)
    raise ContractViolation(f"unknown approximation form {form!r}")


def mi_proposition1_value(ch: ChannelRealization, lb: LinkBudget) -> float:
    """Single-antenna optimum (rho = 1/3) of the log-form approximation."""
    if ch.k != 1:
        raise ContractViolation("single-antenna optimum needs k = 1")
    h = abs(ch.gains[0])
    arg = 2.0 * math.sqrt(2.0) / (3.0 * math.sqrt(3.0)) * h ** 3 * lb.power ** 1.5 / (lb.sigma1 * lb.sigma2)
    return math.log2(arg) - EULER_GAMMA / (2.0 * LN2)


def asymptotic_mi_gain() -> float:
    return 1.5


# Sweeps and the joint processing gain

def mi_vs_rho(
    ch: ChannelRealization,
    lb: LinkBudget,
    rho_grid: Sequence[RhoLike],
    *,
    estimator: Literal["mc", "ei", "log"] = "mc",
    noncoherent: Literal["bound", "exact"] = "exact",
    samples: int = 1_000_000,
    bins: int = DEFAULT_BINS,
    batches: int = DEFAULT_BATCHES,
    seed: int = 0,
    workers: Optional[int] = 1,
    chunk_size: int = DEFAULT_CHUNK,
    quadrature_tol: float = 1e-8,
) -> List[Tuple[SplitConfig, float, float]]:
    """
    MI at every grid point as (config, bits, std_err).

    Boundary points use the closed forms (std_err 0). Interior points use the
    histogram estimator or one of the high-SNR forms. Grid point i draws
    from the i-th stream spawned from `seed`.
    """
    configs = [as_split_config(r, ch.k) for r in rho_grid]
    if not configs:
        raise ContractViolation("rho grid is empty")
    rows: List[Tuple[SplitConfig, float, float]] = []
    for cfg, s in zip(configs, spawn_seeds(seed, len(configs))):
        if cfg.is_all_power:
            if noncoherent == "bound":
                bits = mi_noncoherent_lower_bound(ch, lb)
            else:
                bits = mi_noncoherent_exact(ch, lb, quadrature_tol)
            rows.append((cfg, bits, 0.0))
        elif cfg.is_all_coherent:
            rows.append((cfg, mi_coherent_closed_form(ch, lb), 0.0))
        elif estimator == "mc":
            est = mi_mc_histogram(ch, cfg, lb, samples, bins, s, batches=batches, workers=workers, chunk_size=chunk_size)
            rows.append((cfg, est.bits, est.std_err))
        else:
            rows.append((cfg, mi_high_snr_approx(ch, cfg, lb, estimator), 0.0))
    return rows


def joint_processing_gain_mi(
    ch: ChannelRealization,
    lb: LinkBudget,
    rho_grid: Sequence[RhoLike],
    *,
    estimator: Literal["formula", "mc"] = "formula",
    form: Literal["ei", "log"] = "ei",
    noncoherent: Optional[Literal["bound", "exact"]] = None,
    samples: int = 1_000_000,
    bins: int = DEFAULT_BINS,
    seed: int = 0,
    workers: Optional[int] = 1,
    quadrature_tol: float = 1e-8,
) -> MiGain:
    """Best MI over the grid divided by the best conventional receiver."""
    noncoherent = noncoherent or ("bound" if estimator == "formula" else "exact")
    rows = mi_vs_rho(
        ch, lb, rho_grid,
        estimator="mc" if estimator == "mc" else form,
        noncoherent=noncoherent,
        samples=samples, bins=bins, seed=seed, workers=workers, quadrature_tol=quadrature_tol,
    )
    if noncoherent == "bound":
        mi_pd = mi_noncoherent_lower_bound(ch, lb)
    else:
        mi_pd = mi_noncoherent_exact(ch, lb, quadrature_tol)
    mi_cd = mi_coherent_closed_form(ch, lb)

    values = [bits for _, bits, _ in rows]
    best = int(np.argmax(values))
    denom = max(mi_pd, mi_cd)
    gain = values[best] / denom if denom > 0.0 else float("nan")
    logger.debug("MI gain %.4f at rho=%s", gain, rows[best][0].rho)
    return MiGain(
        gain=gain,
        argmax_rho=rows[best][0],
        best_bits=values[best],
        endpoint_bits=(mi_pd, mi_cd),
        grid_bits=tuple(values),
    )
