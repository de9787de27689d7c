"""Log-linear supply and demand simulator.

Demand and supply are structural (potential-outcome) functions of the log
price p, with an instrument shifting supply only:

    demand:  ln Q_d(p) = alpha_d + beta_d * p + eps_d
    supply:  ln Q_s(p) = alpha_s + beta_s * p + gamma_s * z + eps_s

With beta_d < 0 < beta_s the market-clearing price is unique and both the
equilibrium and the effect of an ad-valorem tax have closed forms.  The
simulator is the ground-truth engine for validating the estimators: the
instrumented data identify beta_d, plain price/quantity data identify only
the variance-weighted slope mix returned by :func:`working_slope`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .datasets import Dataset
from .errors import ValidationError

__all__ = [
    "MarketParams",
    "MarketDraw",
    "ZLaw",
    "TaxOutcome",
    "equilibrium",
    "simulate_markets",
    "working_slope",
    "tax_counterfactual",
]

# Default three-valued weather shares: 32 stormy and 34 mixed days out of 111.
DEFAULT_STORMY_SHARE = 32.0 / 111.0
DEFAULT_MIXED_SHARE = 34.0 / 111.0

@dataclass(frozen=True)
class MarketParams:
    """Structural parameters of the supply/demand system."""

    alpha_d: float
    beta_d: float
    alpha_s: float
    beta_s: float
    gamma_s: float = 0.0
    sigma_d: float = 0.0
    sigma_s: float = 0.0
    rho: float = 0.0

    def __post_init__(self):
        if not self.beta_s - self.beta_d > 0.0:
            raise ValidationError(
                f"beta_s - beta_d must be positive for a unique equilibrium "
                f"(got {self.beta_s} - {self.beta_d})"
            )
        if self.sigma_d < 0.0 or self.sigma_s < 0.0:
            raise ValidationError("shock standard deviations must be nonnegative")
        if not -1.0 <= self.rho <= 1.0:
            raise ValidationError("shock correlation must lie in [-1, 1]")

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "MarketParams":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(values) - known
        if unknown:
            raise ValidationError(f"unknown market parameter(s) {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in values.items()})

    @classmethod
    def from_file(cls, path) -> "MarketParams":
        return cls.from_mapping(read_key_value_file(path))

    def to_mapping(self) -> dict[str, float]:
        return {
            "alpha_d": self.alpha_d,
            "beta_d": self.beta_d,
            "alpha_s": self.alpha_s,
            "beta_s": self.beta_s,
            "gamma_s": self.gamma_s,
            "sigma_d": self.sigma_d,
            "sigma_s": self.sigma_s,
            "rho": self.rho,
        }


def read_key_value_file(path) -> dict[str, str]:
    """Parse a plain-text ``key = value`` file, ignoring blanks and # comments."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"file not found: {path}")
    values: dict[str, str] = {}
    for line_number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}: line {line_number} is not 'key = value': {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ValidationError(f"{path}: line {line_number} is not 'key = value': {raw!r}")
        values[key] = value
    return values


@dataclass(frozen=True)
class MarketDraw:
    """One market period in equilibrium."""

    log_price: float
    log_quantity: float
    instrument: float
    shocks: tuple[float, float]


@dataclass(frozen=True)
class TaxOutcome:
    """Equilibrium under an ad-valorem tax at rate r."""

    log_price_net: float
    log_price_gross: float
    log_quantity: float
    effect_on_log_quantity: float


def equilibrium(params: MarketParams, eps_d: float, eps_s: float, z: float) -> MarketDraw:
    """Solve for the market-clearing price and traded quantity."""
    spread = params.beta_s - params.beta_d
    log_price = (
        (params.alpha_d - params.alpha_s) / spread
        + (eps_d - eps_s) / spread
        - params.gamma_s * z / spread
    )
    log_quantity = (
        (params.beta_s * params.alpha_d - params.beta_d * params.alpha_s) / spread
        + (params.beta_s * eps_d - params.beta_d * eps_s) / spread
        - params.gamma_s * params.beta_d * z / spread
    )
    return MarketDraw(
        log_price=log_price,
        log_quantity=log_quantity,
        instrument=z,
        shocks=(eps_d, eps_s),
    )


@dataclass(frozen=True)
class ZLaw:
    """Distribution of the supply-shifting instrument.

    ``kind`` is one of ``"bernoulli"`` (success probability q),
    ``"normal"`` (standard normal) or ``"three_valued"`` (weather severity
    0 = fair, 1 = mixed, 2 = stormy, exported as two indicator columns
    with fair as the baseline).
    """

    kind: str
    q: float | None = None
    stormy_share: float = DEFAULT_STORMY_SHARE
    mixed_share: float = DEFAULT_MIXED_SHARE

    def __post_init__(self):
        if self.kind not in ("bernoulli", "normal", "three_valued"):
            raise ValidationError(f"unknown instrument law {self.kind!r}")
        if self.kind == "bernoulli":
            if self.q is None or not 0.0 < self.q < 1.0:
                raise ValidationError("bernoulli law needs a probability strictly inside (0, 1)")
        if self.kind == "three_valued":
            if min(self.stormy_share, self.mixed_share) <= 0.0 or (
                self.stormy_share + self.mixed_share >= 1.0
            ):
                raise ValidationError("three-valued shares must be positive and sum below 1")

    @classmethod
    def parse(cls, text: str) -> "ZLaw":
        """Parse CLI syntax: ``normal``, ``bernoulli:q``, ``three_valued[:ps,pm]``."""
        name, _, rest = text.partition(":")
        name = name.strip().replace("-", "_")
        if name == "normal":
            return cls(kind="normal")
        if name == "bernoulli":
            try:
                return cls(kind="bernoulli", q=float(rest))
            except ValueError:
                raise ValidationError(f"cannot parse bernoulli probability from {text!r}") from None
        if name == "three_valued":
            if not rest:
                return cls(kind="three_valued")
            try:
                stormy, mixed = (float(part) for part in rest.split(","))
            except ValueError:
                raise ValidationError(f"cannot parse three-valued shares from {text!r}") from None
            return cls(kind="three_valued", stormy_share=stormy, mixed_share=mixed)
        raise ValidationError(f"unknown instrument law {text!r}")

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "bernoulli":
            return (rng.random(size) < self.q).astype(float)
        if self.kind == "normal":
            return rng.standard_normal(size)
        u = rng.random(size)
        z = np.zeros(size)
        z[u < self.mixed_share] = 1.0
        z[u >= 1.0 - self.stormy_share] = 2.0
        return z


def simulate_markets(
    params: MarketParams, t_count: int, z_law: ZLaw, seed: int
) -> Dataset:
    """Simulate ``t_count`` market periods and package them as a Dataset.

    Shocks are jointly normal with standard deviations (sigma_d, sigma_s)
    and correlation rho; the instrument is drawn independently from
    ``z_law``.  The dataset has outcome = log quantity, treatment = log
    price, and the instrument column(s); a three-valued law is expanded to
    mixed/stormy indicators with fair weather as the baseline.
    Deterministic given the seed.
    """
    if t_count < 1:
        raise ValidationError("t_count must be at least 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    base = rng.standard_normal((t_count, 2))
    eps_d = params.sigma_d * base[:, 0]
    eps_s = params.sigma_s * (
        params.rho * base[:, 0] + math.sqrt(1.0 - params.rho**2) * base[:, 1]
    )
    shocks = np.column_stack([eps_d, eps_s])
    z = z_law.draw(rng, t_count)

    spread = params.beta_s - params.beta_d
    log_price = (
        (params.alpha_d - params.alpha_s) / spread
        + (shocks[:, 0] - shocks[:, 1]) / spread
        - params.gamma_s * z / spread
    )
    log_quantity = (
        (params.beta_s * params.alpha_d - params.beta_d * params.alpha_s) / spread
        + (params.beta_s * shocks[:, 0] - params.beta_d * shocks[:, 1]) / spread
        - params.gamma_s * params.beta_d * z / spread
    )

    if z_law.kind == "three_valued":
        instruments = np.column_stack([(z == 1.0).astype(float), (z == 2.0).astype(float)])
        instrument_names = ("z_mixed", "z_stormy")
    else:
        instruments = z[:, None]
        instrument_names = ("z",)

    return Dataset(
        outcome=log_quantity,
        treatment=log_price,
        instruments=instruments,
        outcome_name="log_quantity",
        treatment_name="log_price",
        instrument_names=instrument_names,
    )


def working_slope(params: MarketParams) -> float:
    """Population regression slope of log quantity on log price (no instrument).

    The statistical demand curve: a variance-weighted mix of the supply and
    demand elasticities,

        (beta_s * sigma_d^2 + beta_d * sigma_s^2 - rho sigma_d sigma_s (beta_d + beta_s))
        / (sigma_s^2 + sigma_d^2 - 2 rho sigma_d sigma_s).

    It approaches beta_d as sigma_d -> 0 and beta_s as sigma_s -> 0.
    """
    denom = params.sigma_s**2 + params.sigma_d**2 - 2.0 * params.rho * params.sigma_d * params.sigma_s
    if denom <= 0.0:
        raise ValidationError("price variance is zero; the regression slope is undefined")
    numer = (
        params.beta_s * params.sigma_d**2
        + params.beta_d * params.sigma_s**2
        - params.rho * params.sigma_d * params.sigma_s * (params.beta_d + params.beta_s)
    )
    return numer / denom


def tax_counterfactual(
    params: MarketParams, r: float, eps_d: float = 0.0, eps_s: float = 0.0
) -> TaxOutcome:
    """Equilibrium under a proportional tax r on the buyer price.

    Sellers receive the net price, buyers pay net * (1 + r).  The effect on
    log quantity, beta_s * beta_d * ln(1+r) / (beta_s - beta_d), does not
    depend on the shocks: it is the same in every market.
    """
    if r < 0.0:
        raise ValidationError("tax rate must be nonnegative")
    spread = params.beta_s - params.beta_d
    log_one_plus_r = math.log1p(r)
    log_price_net = (
        (params.alpha_d - params.alpha_s) / spread
        + params.beta_d * log_one_plus_r / spread
        + (eps_d - eps_s) / spread
    )
    effect = params.beta_s * params.beta_d * log_one_plus_r / spread
    log_quantity = (
        (params.beta_s * params.alpha_d - params.beta_d * params.alpha_s) / spread
        + effect
        + (params.beta_s * eps_d - params.beta_d * eps_s) / spread
    )
    return TaxOutcome(
        log_price_net=log_price_net,
        log_price_gross=log_price_net + log_one_plus_r,
        log_quantity=log_quantity,
        effect_on_log_quantity=effect,
    )
