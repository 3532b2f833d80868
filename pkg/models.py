from functools import cached_property
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveFloat,
    PositiveInt,
    computed_field,
    field_validator,
    model_validator,
)

Scheme = Literal["PAM", "QAM", "IM"]


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True)


class _Strict(_Frozen):
    model_config = ConfigDict(frozen=True, extra="forbid")


# Special functions

class EmgParams(_Frozen):
    """Exponentially modified Gaussian: Y = scale * Exp(1) + N(0, noise_sd^2)."""
    scale: PositiveFloat
    noise_sd: PositiveFloat


# Channel / link

class ChannelRealization(_Frozen):
    gains: Tuple[complex, ...] = Field(min_length=1)

    @field_validator("gains", mode="before")
    @classmethod
    def _coerce_gains(cls, value: Any) -> Tuple[complex, ...]:
        out = []
        for g in value:
            if isinstance(g, (list, tuple)):
                re, im = g
                out.append(complex(float(re), float(im)))
            else:
                out.append(complex(g))
        return tuple(out)

    @property
    def k(self) -> int:
        return len(self.gains)

    @property
    def gain_array(self) -> np.ndarray:
        return np.asarray(self.gains, dtype=np.complex128)

    @property
    def power_gains(self) -> np.ndarray:
        """|h_k|^2 per antenna."""
        return np.abs(self.gain_array) ** 2

    @computed_field
    @cached_property
    def h2(self) -> float:
        return float(np.sum(self.power_gains))

    @computed_field
    @cached_property
    def h4(self) -> float:
        return float(np.sum(self.power_gains ** 2))

    def to_json(self) -> Dict[str, Any]:
        return {"gains": [[g.real, g.imag] for g in self.gains]}

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "ChannelRealization":
        return cls(gains=data["gains"])


class SplitConfig(_Frozen):
    rho: Tuple[float, ...] = Field(min_length=1)

    @field_validator("rho")
    @classmethod
    def _in_unit_box(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        bad = [r for r in value if not 0.0 <= r <= 1.0]
        if bad:
            raise ValueError(f"splitting ratios must lie in [0, 1], got {bad}")
        return value

    @property
    def k(self) -> int:
        return len(self.rho)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.rho, dtype=float)

    @property
    def is_all_coherent(self) -> bool:
        return all(r == 1.0 for r in self.rho)

    @property
    def is_all_power(self) -> bool:
        return all(r == 0.0 for r in self.rho)

    @classmethod
    def uniform(cls, k: int, value: float) -> "SplitConfig":
        return cls(rho=(float(value),) * k)

    @classmethod
    def binary(cls, k: int, k1: int) -> "SplitConfig":
        """Simplified receiver: antennas 1..k1 on the CD branch, the rest on PD."""
        return cls(rho=tuple(1.0 if i < k1 else 0.0 for i in range(k)))


class LinkBudget(_Frozen):
    power: float = Field(ge=0.0)
    sigma1_sq: PositiveFloat
    sigma2_sq: PositiveFloat
    eta: PositiveFloat = 1.0

    @property
    def sigma1(self) -> float:
        return float(np.sqrt(self.sigma1_sq))

    @property
    def sigma2(self) -> float:
        return float(np.sqrt(self.sigma2_sq))

    @classmethod
    def from_raw_pd_noise(
        cls, power: float, sigma1_sq: float, raw_sigma2_sq: float, eta: float
    ) -> "LinkBudget":
        # N = N'/eta, so the PD noise variance scales by 1/eta^2
        return cls(power=power, sigma1_sq=sigma1_sq, sigma2_sq=raw_sigma2_sq / eta ** 2, eta=eta)


class ThetaPair(_Frozen):
    theta1: float = Field(ge=0.0)
    theta2: float = Field(ge=0.0)

    @property
    def product(self) -> float:
        return self.theta1 * self.theta2


class SplitSample(_Frozen):
    y1: complex
    y2: float
    x: complex


class OperatingSnr(_Frozen):
    snr_cd: float
    snr_pd: float
    snr: float


# Mutual information

class MiEstimate(_Frozen):
    bits: float
    samples: int
    bins_per_axis: int
    std_err: float = Field(ge=0.0)
    dims: Literal[1, 2, 3] = 3
    undersampled: bool = False
    outliers: int = 0


class MiGain(_Frozen):
    gain: float
    argmax_rho: SplitConfig
    best_bits: float
    endpoint_bits: Tuple[float, float]  # (rho = 0, rho = 1)
    grid_bits: Tuple[float, ...] = ()


# Optimization

class RatioSolution(_Frozen):
    rho: SplitConfig
    objective: float
    method: Literal["closed_form_k1", "grid", "multistart_local"]
    degenerate: bool = False
    interior: bool = True
    boundary_objective: Optional[float] = None


class PartitionResult(_Frozen):
    k1: int
    objective: float


# Modulation

class Constellation(_Frozen):
    scheme: Scheme
    m: PositiveInt
    symbols: Tuple[Tuple[float, float], ...]
    k1: PositiveFloat

    @property
    def k2(self) -> float:
        return self.k1 ** 2

    @property
    def xy(self) -> np.ndarray:
        return np.asarray(self.symbols, dtype=float)

    @property
    def unit_symbols(self) -> np.ndarray:
        """Normalized complex symbols k1 * (x + jy)."""
        xy = self.xy
        return self.k1 * (xy[:, 0] + 1j * xy[:, 1])

    @model_validator(mode="after")
    def _check_power(self) -> "Constellation":
        if len(self.symbols) != self.m:
            raise ValueError(f"{self.scheme} of order {self.m} needs {self.m} symbols, got {len(self.symbols)}")
        mean_power = self.k2 * float(np.mean(np.sum(self.xy ** 2, axis=1)))
        if abs(mean_power - 1.0) > 1e-12:
            raise ValueError(f"constellation is not unit-power (mean power {mean_power!r})")
        return self


class ReceivedConstellation(_Frozen):
    points: Tuple[Tuple[float, float, float], ...]
    theta: ThetaPair
    budget: LinkBudget

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)


class SerResult(_Frozen):
    ser: float = Field(ge=0.0, le=1.0)
    trials: PositiveInt
    errors: int = Field(ge=0)
    ci95_halfwidth: float = Field(ge=0.0)

    @model_validator(mode="after")
    def _check_counts(self) -> "SerResult":
        if self.errors > self.trials:
            raise ValueError("errors cannot exceed trials")
        return self


class SerGain(_Frozen):
    gain: Optional[float]
    argmin_rho: Optional[SplitConfig]
    needs_more_trials: bool = False
    results: Tuple[SerResult, ...] = ()


class DominantPairs(_Frozen):
    w: int
    d_min_domain: Literal["iq", "power"]


class HalfSpace(_Frozen):
    """normal . (x, y, z) <= offset, separating symbol `symbol` from `neighbour`."""
    symbol: int
    neighbour: int
    normal: Tuple[float, float, float]
    offset: float


# Experiments

ExperimentKind = Literal[
    "mi-vs-rho",
    "mi-approx-vs-rho",
    "opt-rho-vs-power",
    "mi-vs-power",
    "gain-vs-power",
    "mi-vs-K",
    "partition-vs-K",
    "ser-vs-rho",
    "ser-gain-vs-power",
    "k1-vs-K",
]


class SweepGrid(_Strict):
    rho: List[float] = Field(default=[1.0 / 3.0], min_length=1)
    power: List[PositiveFloat] = Field(default=[10.0], min_length=1)
    k: List[PositiveInt] = Field(default=[1], min_length=1)
    m: List[PositiveInt] = Field(default=[16], min_length=1)
    scheme: List[Scheme] = Field(default=["QAM"], min_length=1)
    sigma1_sq: List[PositiveFloat] = Field(default=[1.0], min_length=1)
    sigma2_sq: List[PositiveFloat] = Field(default=[1.0], min_length=1)

    @field_validator("rho")
    @classmethod
    def _rho_in_unit(cls, value: List[float]) -> List[float]:
        if any(not 0.0 <= r <= 1.0 for r in value):
            raise ValueError("rho grid values must lie in [0, 1]")
        return value


class EstimatorKnobs(_Strict):
    samples: PositiveInt = 1_000_000
    bins: PositiveInt = 64
    batches: PositiveInt = 10
    trials: PositiveInt = 100_000
    realizations: PositiveInt = 100
    restarts: PositiveInt = 64
    resolution: float = Field(default=0.01, gt=0.0, le=0.5)
    quadrature_tol: PositiveFloat = 1e-8
    estimator: Literal["mc", "ei", "log"] = "mc"


class ExperimentSpec(_Strict):
    name: str = Field(pattern=r"^[A-Za-z0-9_.-]+$")
    kind: ExperimentKind
    figure: Optional[str] = None
    description: str = ""
    sweep: SweepGrid = SweepGrid()
    knobs: EstimatorKnobs = EstimatorKnobs()
    seed: int = Field(default=42, ge=0)
    output_path: Optional[str] = None
    runtime_budget_s: PositiveFloat = 600.0
