# modules/channel.py -> channel realizations, MRC combining and the splitting channel
#
# Role: turns per-antenna gains and splitting ratios into the two combined
# branch gains (Theta1 for the coherent branch, Theta2 for the power branch)
# and samples the resulting single-input, two-output channel.
#
# Used by: mi.py, optimize.py, modem.py, core/strategy.py

from typing import Optional, Sequence, Union

import numpy as np

from core.errors import ContractViolation
from models import ChannelRealization, LinkBudget, OperatingSnr, SplitConfig, SplitSample, ThetaPair


def sample_channel_iid_rayleigh(k: int, seed: int) -> ChannelRealization:
    """i.i.d. circularly-symmetric complex Gaussian gains, unit mean power."""
    if k < 1:
        raise ContractViolation(f"need at least one antenna, got k={k}")
    rng = np.random.default_rng(seed)
    gains = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2.0)
    return ChannelRealization(gains=gains)


def identical_gain_channel(k: int, gain: complex = 1.0) -> ChannelRealization:
    """Free-space (fully correlated) channel: every antenna sees the same gain."""
    if k < 1:
        raise ContractViolation(f"need at least one antenna, got k={k}")
    return ChannelRealization(gains=[complex(gain)] * k)


def channel_from_power_gains(
    power_gains: Sequence[float], phases: Optional[Sequence[float]] = None
) -> ChannelRealization:
    amp = np.sqrt(np.asarray(power_gains, dtype=float))
    if phases is None:
        return ChannelRealization(gains=amp.astype(np.complex128))
    return ChannelRealization(gains=amp * np.exp(1j * np.asarray(phases, dtype=float)))


def compute_theta(ch: ChannelRealization, cfg: SplitConfig) -> ThetaPair:
    """MRC-combined branch gains: Theta1 = sum rho|h|^2, Theta2 = sum (1-rho)^2 |h|^4."""
    if ch.k != cfg.k:
        raise ContractViolation(f"channel has {ch.k} antennas but split config has {cfg.k}")
    g2 = ch.power_gains
    rho = cfg.array
    theta1 = float(np.sum(rho * g2))
    theta2 = float(np.sum((1.0 - rho) ** 2 * g2 ** 2))
    return ThetaPair(theta1=theta1, theta2=theta2)


def operating_snr(ch: ChannelRealization, lb: LinkBudget) -> OperatingSnr:
    # the PD SNR divides by the noise standard deviation, not the variance
    snr_cd = ch.h2 * lb.power / lb.sigma1_sq
    snr_pd = np.sqrt(ch.h4) * lb.power / lb.sigma2
    return OperatingSnr(snr_cd=float(snr_cd), snr_pd=float(snr_pd), snr=float(min(snr_cd, snr_pd)))


def sample_splitting_batch(
    theta: ThetaPair, lb: LinkBudget, x: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized splitting channel.

    y1 = sqrt(Theta1 P) x + z,  z ~ CN(0, sigma1^2)
    y2 = sqrt(Theta2) P |x|^2 + n,  n ~ N(0, sigma2^2)
    """
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[0]
    half_sd = np.sqrt(lb.sigma1_sq / 2.0)
    z = half_sd * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    noise = lb.sigma2 * rng.standard_normal(n)
    y1 = np.sqrt(theta.theta1 * lb.power) * x + z
    y2 = np.sqrt(theta.theta2) * lb.power * np.abs(x) ** 2 + noise
    return y1, y2


def sample_splitting_channel(
    ch: ChannelRealization, cfg: SplitConfig, lb: LinkBudget, x: complex, noise_seed: int
) -> SplitSample:
    theta = compute_theta(ch, cfg)
    rng = np.random.default_rng(noise_seed)
    y1, y2 = sample_splitting_batch(theta, lb, np.array([x]), rng)
    return SplitSample(y1=complex(y1[0]), y2=float(y2[0]), x=complex(x))


def as_split_config(rho: Union[float, Sequence[float], SplitConfig], k: int) -> SplitConfig:
    """Accept a config, a scalar (same ratio on every antenna) or a per-antenna sequence."""
    if isinstance(rho, SplitConfig):
        return rho
    if np.ndim(rho) == 0:
        return SplitConfig.uniform(k, float(rho))
    return SplitConfig(rho=tuple(float(r) for r in rho))
