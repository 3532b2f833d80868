# modules/special.py -> scalar special functions for the analytic formulas
#
# Q-function, exponential integral E1 (plus its overflow-free scaled form),
# Euler's constant, and the exponentially modified Gaussian density of the
# combined power-detector output.

import math

import numpy as np
from scipy import special as sc

from core.errors import DomainError
from models import EmgParams

EULER_GAMMA = 0.57721566490153286061

# E1: power series below, continued fraction above
E1_SWITCH = 1.0
_EPS = 1e-16
_FPMIN = 1e-300
_MAX_ITER = 500


def q_func(x):
    """Gaussian tail probability Q(x) = erfc(x / sqrt(2)) / 2. Accepts scalars or arrays."""
    out = 0.5 * sc.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def _e1_series(x: float) -> float:
    # E1(x) = -gamma - ln x - sum_{n>=1} (-x)^n / (n * n!)
    total = 0.0
    term = 1.0
    for n in range(1, _MAX_ITER):
        term *= -x / n
        contrib = term / n
        total += contrib
        if abs(contrib) < _EPS * abs(total):
            break
    return -EULER_GAMMA - math.log(x) - total


def _e1_scaled_cf(x: float) -> float:
    # modified Lentz evaluation of exp(x) * E1(x)
    b = x + 1.0
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    return h


def _check_positive(x: float) -> float:
    x = float(x)
    if not x > 0.0 or not math.isfinite(x):
        raise DomainError(f"exponential integral needs a finite x > 0, got {x!r}")
    return x


def exp_integral_E1(x: float) -> float:
    """E1(x) = int_x^inf exp(-t)/t dt for x > 0."""
    x = _check_positive(x)
    if x < E1_SWITCH:
        return _e1_series(x)
    return _e1_scaled_cf(x) * math.exp(-x)


def exp_scaled_E1(x: float) -> float:
    """exp(x) * E1(x), finite for arbitrarily large x."""
    x = _check_positive(x)
    if x < E1_SWITCH:
        return math.exp(x) * _e1_series(x)
    return _e1_scaled_cf(x)


def _emg_check(p: EmgParams) -> None:
    # model_construct() skips pydantic validation
    if not (p.scale > 0.0 and p.noise_sd > 0.0):
        raise DomainError(f"EMG needs scale > 0 and noise_sd > 0, got {p}")


def emg_logpdf(p: EmgParams, y):
    """log f(y) for Y = s * Exp(1) + N(0, sd^2), stable for any (s, sd, y)."""
    _emg_check(p)
    s, sd = p.scale, p.noise_sd
    y = np.asarray(y, dtype=float)
    a = sd * sd / s
    w = (a - y) / (math.sqrt(2.0) * sd)
    # log erfc(w): erfcx keeps the right branch from underflowing
    wpos = np.maximum(w, 0.0)
    log_erfc = np.where(
        w > 0.0,
        np.log(sc.erfcx(wpos)) - wpos * wpos,
        np.log(sc.erfc(np.minimum(w, 0.0))),
    )
    out = -math.log(2.0 * s) + (a - 2.0 * y) / (2.0 * s) + log_erfc
    return float(out) if out.ndim == 0 else out


def emg_pdf(p: EmgParams, y):
    """Density of the combined PD output under Gaussian input."""
    out = np.exp(emg_logpdf(p, y))
    return float(out) if np.ndim(out) == 0 else out
