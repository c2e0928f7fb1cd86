"""Parameterized measure families with named-parameter construction.

Each family keeps the decomposition discipline: `log_density_at` carries only
the data-dependent terms, while constant and parameter-dependent terms (the
normalization) are pushed to a Weighted base measure.  Outside the support the
data term is -inf, never an error.

Families register one or more parameterizations by name set; construction
dispatches on the names given and never converts between parameterizations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import rng
from .core import (
    COUNTING,
    LEBESGUE,
    Dirac,
    LogWeight,
    MeasureExpr,
    NEG_INF,
    Weighted,
    ZERO,
    _is_scalar,
)

_HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)


def _is_count(x) -> bool:
    """Nonnegative integer-valued scalar."""
    return _is_scalar(x) and x >= 0 and float(x) == math.floor(x)


def log_binomial(n: float, k: float) -> float:
    """log of the (generalized) binomial coefficient C(n, k) via log-gamma."""
    return math.lgamma(n + 1.0) - math.lgamma(k + 1.0) - math.lgamma(n - k + 1.0)


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Normal(MeasureExpr):
    """Gaussian with mean ``mu`` and scale ``sigma``.

    Data term: -((x - mu)/sigma)^2 / 2.  Base: Weighted(-log sigma -
    log(2 pi)/2, Lebesgue).
    """

    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "sigma", float(self.sigma))
        if not self.sigma > 0.0:
            raise ValueError(f"Normal requires sigma > 0, got {self.sigma}")

    def log_density_at(self, x) -> LogWeight:
        z = (x - self.mu) / self.sigma
        return LogWeight(-0.5 * z * z)

    def base_at(self, x) -> MeasureExpr:
        return Weighted(-math.log(self.sigma) - _HALF_LOG_TWO_PI, LEBESGUE)

    def log_total_mass(self):
        return 0.0

    def _sample_normalized(self, seed: int):
        stream = rng.RandomStream(seed)
        return self.mu + self.sigma * _standard_normal(stream)


@dataclass(frozen=True)
class Uniform01(MeasureExpr):
    """Restriction of Lebesgue measure to [0, 1]."""

    def log_density_at(self, x) -> LogWeight:
        return ZERO if 0.0 <= x <= 1.0 else NEG_INF

    def base_at(self, x) -> MeasureExpr:
        return LEBESGUE

    def log_total_mass(self):
        return 0.0

    def _sample_normalized(self, seed: int):
        return rng.RandomStream(seed).unit()


@dataclass(frozen=True)
class Exponential(MeasureExpr):
    """Exponential with rate parameter; density rate * exp(-rate x) on x >= 0."""

    rate: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "rate", float(self.rate))
        if not self.rate > 0.0:
            raise ValueError(f"Exponential requires rate > 0, got {self.rate}")

    def log_density_at(self, x) -> LogWeight:
        return LogWeight(-self.rate * x) if x >= 0.0 else NEG_INF

    def base_at(self, x) -> MeasureExpr:
        return Weighted(math.log(self.rate), LEBESGUE)

    def log_total_mass(self):
        return 0.0

    def _sample_normalized(self, seed: int):
        return -math.log(rng.RandomStream(seed).unit()) / self.rate


@dataclass(frozen=True)
class Bernoulli(MeasureExpr):
    """Coin flip on {0, 1} over counting measure."""

    p: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "p", float(self.p))
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"Bernoulli requires 0 <= p <= 1, got {self.p}")

    def log_density_at(self, x) -> LogWeight:
        if x == 1:
            return LogWeight(math.log(self.p)) if self.p > 0.0 else NEG_INF
        if x == 0:
            return LogWeight(math.log1p(-self.p)) if self.p < 1.0 else NEG_INF
        return NEG_INF

    def base_at(self, x) -> MeasureExpr:
        return COUNTING

    def log_total_mass(self):
        return 0.0

    def _sample_normalized(self, seed: int):
        return 1 if rng.RandomStream(seed).unit() < self.p else 0


@dataclass(frozen=True)
class Poisson(MeasureExpr):
    """Poisson counts with the given rate, over counting measure."""

    rate: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "rate", float(self.rate))
        if not self.rate > 0.0:
            raise ValueError(f"Poisson requires rate > 0, got {self.rate}")

    def log_density_at(self, x) -> LogWeight:
        if not _is_count(x):
            return NEG_INF
        k = float(x)
        return LogWeight(k * math.log(self.rate) - self.rate - math.lgamma(k + 1.0))

    def base_at(self, x) -> MeasureExpr:
        return COUNTING

    def log_total_mass(self):
        return 0.0

    def _sample_normalized(self, seed: int):
        return _poisson_draw(rng.RandomStream(seed), self.rate)


@dataclass(frozen=True)
class NegativeBinomial(MeasureExpr):
    """Negative binomial on the nonnegative integers, over counting measure.

    Two parameterizations coexist and are kept exactly as constructed:

    * ``(r, p)``: pmf C(y+r-1, r-1) p^r (1-p)^y
    * ``(alpha, beta)``: pmf C(y+alpha-1, alpha-1) (beta/(beta+1))^alpha
      (1/(beta+1))^y

    ``params`` is a name-sorted tuple of (name, value) pairs; use
    `make_negbinomial` to construct from keywords.
    """

    params: tuple

    def __post_init__(self):
        names = tuple(name for name, _ in self.params)
        values = {name: float(value) for name, value in self.params}
        if names == ("p", "r"):
            if not values["r"] > 0.0:
                raise ValueError(f"NegativeBinomial requires r > 0, got {values['r']}")
            if not 0.0 < values["p"] < 1.0:
                raise ValueError(f"NegativeBinomial requires 0 < p < 1, got {values['p']}")
        elif names == ("alpha", "beta"):
            if not values["alpha"] > 0.0:
                raise ValueError(
                    f"NegativeBinomial requires alpha > 0, got {values['alpha']}"
                )
            if not values["beta"] > 0.0:
                raise ValueError(
                    f"NegativeBinomial requires beta > 0, got {values['beta']}"
                )
        else:
            raise ValueError(
                "unknown parameterization {%s} for NegativeBinomial; "
                "expected {p,r} or {alpha,beta}" % ",".join(names)
            )
        object.__setattr__(
            self, "params", tuple((name, float(value)) for name, value in self.params)
        )

    def _param(self, name: str) -> float:
        for key, value in self.params:
            if key == name:
                return value
        raise KeyError(name)

    def log_density_at(self, x) -> LogWeight:
        if not _is_count(x):
            return NEG_INF
        y = float(x)
        names = tuple(name for name, _ in self.params)
        if names == ("p", "r"):
            r = self._param("r")
            p = self._param("p")
            return LogWeight(
                log_binomial(y + r - 1.0, r - 1.0) + r * math.log(p) + y * math.log1p(-p)
            )
        alpha = self._param("alpha")
        beta = self._param("beta")
        return LogWeight(
            log_binomial(y + alpha - 1.0, alpha - 1.0)
            + alpha * (math.log(beta) - math.log1p(beta))
            - y * math.log1p(beta)
        )

    def base_at(self, x) -> MeasureExpr:
        return COUNTING

    def log_total_mass(self):
        return 0.0

    def _sample_normalized(self, seed: int):
        names = tuple(name for name, _ in self.params)
        if names == ("p", "r"):
            r = self._param("r")
            p = self._param("p")
            scale = (1.0 - p) / p
        else:
            r = self._param("alpha")
            scale = 1.0 / self._param("beta")
        stream = rng.RandomStream(seed)
        lam = _gamma_draw(stream, r) * scale
        if lam == 0.0:
            return 0
        return _poisson_draw(stream, lam)


# ---------------------------------------------------------------------------
# Named-parameter constructors
# ---------------------------------------------------------------------------


def make_normal(**params) -> Normal:
    """Normal from named parameters (mu, sigma), with defaults mu=0, sigma=1."""
    unknown = set(params) - {"mu", "sigma"}
    if unknown:
        raise ValueError(
            "unknown parameterization {%s} for Normal; expected names from {mu,sigma}"
            % ",".join(sorted(params))
        )
    return Normal(mu=params.get("mu", 0.0), sigma=params.get("sigma", 1.0))


def make_negbinomial(**params) -> NegativeBinomial:
    """NegativeBinomial from named parameters: either (r, p) or (alpha, beta)."""
    return NegativeBinomial(params=tuple(sorted(params.items())))


def make_simple(kind: str, **params) -> MeasureExpr:
    """Construct one of the simple catalog measures by name."""
    try:
        factory = FAMILIES[kind]
    except KeyError:
        raise ValueError(f"unknown measure family {kind!r}") from None
    return factory(**params)


FAMILIES = {
    "Normal": make_normal,
    "NegativeBinomial": make_negbinomial,
    "Uniform01": Uniform01,
    "Bernoulli": Bernoulli,
    "Poisson": Poisson,
    "Exponential": Exponential,
    "Dirac": lambda a: Dirac(atom=a),
}


# ---------------------------------------------------------------------------
# Draw algorithms (deterministic given the stream)
# ---------------------------------------------------------------------------


def _standard_normal(stream: rng.RandomStream) -> float:
    """One standard normal variate from a pair of uniforms (Box-Muller)."""
    u1 = stream.unit()
    u2 = stream.unit()
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def _poisson_inversion(stream: rng.RandomStream, rate: float) -> int:
    # Sequential inversion of the CDF; only used for rate <= 30.
    u = stream.unit()
    p = math.exp(-rate)
    cum = p
    k = 0
    cap = int(rate) + 200
    while u > cum and k < cap:
        k += 1
        p *= rate / k
        cum += p
    return k


def _poisson_draw(stream: rng.RandomStream, rate: float) -> int:
    """Poisson draw: inversion for small rates, additivity chunking above."""
    total = 0
    while rate > 30.0:
        half = rate / 2.0
        total += _poisson_inversion(stream, half)
        rate -= half
    return total + _poisson_inversion(stream, rate)


def _gamma_draw(stream: rng.RandomStream, shape: float) -> float:
    """Gamma(shape, 1) via the Marsaglia-Tsang squeeze."""
    if shape < 1.0:
        boost = stream.unit() ** (1.0 / shape)
        return _gamma_draw(stream, shape + 1.0) * boost
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = _standard_normal(stream)
        v = (1.0 + c * x) ** 3
        if v <= 0.0:
            continue
        u = stream.unit()
        if u < 1.0 - 0.0331 * x ** 4:
            return d * v
        if math.log(u) < 0.5 * x * x + d * (1.0 - v + math.log(v)):
            return d * v
