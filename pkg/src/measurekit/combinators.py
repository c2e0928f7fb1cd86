"""Measure-forming operations.

Products, powers, indexed products, monadic bind, superposition, constant
scaling, pointwise products with likelihoods, density closures, integral
measures, and affine pushforwards.  All nodes are immutable; evaluation is
pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence, Tuple

from . import core, rng
from .core import (
    Dirac,
    LogWeight,
    MeasureExpr,
    NEG_INF,
    NotProbabilityError,
    ShapeError,
    UNDEFINED,
    UnrelatedPrimitivesError,
    Weighted,
    ZERO,
    logaddexp,
)

_LOG_TWO = math.log(2.0)


# ---------------------------------------------------------------------------
# Product measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Product(MeasureExpr):
    """Independent product; points are tuples with one slot per factor."""

    children: Tuple[MeasureExpr, ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("Product needs at least two factors")

    def check_point(self, x) -> None:
        if not isinstance(x, tuple) or len(x) != len(self.children):
            raise ShapeError(
                f"Product of {len(self.children)} factors expects a "
                f"{len(self.children)}-tuple, got {x!r}"
            )
        for child, xi in zip(self.children, x):
            child.check_point(xi)

    def log_density_at(self, x) -> LogWeight:
        total = ZERO
        for child, xi in zip(self.children, x):
            total = total + child.log_density_at(xi)
        return total

    def base_at(self, x) -> MeasureExpr:
        return Product(tuple(c.base_at(xi) for c, xi in zip(self.children, x)))

    def rule_vs(self, other, x) -> Optional[LogWeight]:
        # d(mu1 x mu2)/d(nu1 x nu2) factors coordinatewise.
        if isinstance(other, Product) and len(other.children) == len(self.children):
            targets = other.children
        elif isinstance(other, Power) and other.shape == (len(self.children),):
            targets = (other.child,) * len(self.children)
        else:
            return None
        total = ZERO
        for child, target, xi in zip(self.children, targets, x):
            total = total + core.log_density(child, xi, wrt=target)
        return total

    def rule_as_target(self, other, x) -> Optional[LogWeight]:
        if isinstance(other, Power) and other.shape == (len(self.children),):
            total = ZERO
            for child, xi in zip(self.children, x):
                total = total + core.log_density(other.child, xi, wrt=child)
            return total
        return None

    def reference_class(self):
        kinds = set()
        det = 0.0
        for child in self.children:
            ref = child.reference_class()
            if ref is None:
                return None
            kinds.add(ref[0])
            det += ref[1]
        if len(kinds) != 1:
            return None
        return (kinds.pop(), det)

    def log_total_mass(self):
        total = 0.0
        for child in self.children:
            lm = child.log_total_mass()
            if lm is None:
                return None
            total += lm
        return total

    def _sample_normalized(self, seed: int):
        return tuple(
            child._sample_normalized(rng.derive_key(seed, i))
            for i, child in enumerate(self.children)
        )


def product(mu: MeasureExpr, nu: MeasureExpr) -> Product:
    """Independent product measure on pair points."""
    return Product((mu, nu))


# ---------------------------------------------------------------------------
# Power measures
# ---------------------------------------------------------------------------


def _shape_size(shape: Tuple[int, ...]) -> int:
    n = 1
    for s in shape:
        n *= s
    return n


def _iter_shape(x, shape):
    """Yield the scalar-level entries of a nested tuple of the given shape."""
    if len(shape) == 1:
        yield from x
    else:
        for row in x:
            yield from _iter_shape(row, shape[1:])


def _check_shape(x, shape, child: MeasureExpr):
    if not isinstance(x, tuple) or len(x) != shape[0]:
        raise ShapeError(f"expected a tuple of length {shape[0]}, got {x!r}")
    if len(shape) == 1:
        for xi in x:
            child.check_point(xi)
    else:
        for row in x:
            _check_shape(row, shape[1:], child)


def _build_shape(shape, draw):
    if len(shape) == 1:
        return tuple(draw() for _ in range(shape[0]))
    return tuple(_build_shape(shape[1:], draw) for _ in range(shape[0]))


@dataclass(frozen=True)
class Power(MeasureExpr):
    """iid product of one measure over a shape.

    The base measure factors any constant weight once: the base of
    Normal^n is Weighted(n * w, Lebesgue^n) rather than a product of n
    weighted factors, so the normalization term is evaluated a single time
    regardless of n.
    """

    child: MeasureExpr
    shape: Tuple[int, ...]

    def __post_init__(self):
        if not self.shape:
            raise ValueError("Power needs a nonempty shape")
        if any(not isinstance(s, int) or s < 1 for s in self.shape):
            raise ValueError(f"invalid power shape {self.shape!r}")

    def check_point(self, x) -> None:
        _check_shape(x, self.shape, self.child)

    def log_density_at(self, x) -> LogWeight:
        total = ZERO
        for xi in _iter_shape(x, self.shape):
            total = total + self.child.log_density_at(xi)
        return total

    def base_at(self, x) -> MeasureExpr:
        first = next(_iter_shape(x, self.shape))
        child_base = self.child.base_at(first)
        if isinstance(child_base, Weighted):
            n = _shape_size(self.shape)
            return Weighted(n * child_base.logweight, Power(child_base.base, self.shape))
        return Power(child_base, self.shape)

    def reference_class(self):
        ref = self.child.reference_class()
        if ref is None:
            return None
        return (ref[0], _shape_size(self.shape) * ref[1])

    def fixed_pair_rule(self, other, x) -> Optional[LogWeight]:
        # Coordinatewise split once both chains are stuck (powers of atoms
        # against structured references the scalar classification misses).
        if isinstance(other, Power) and other.shape == self.shape:
            targets = (other.child for _ in range(_shape_size(self.shape)))
        elif isinstance(other, Product) and self.shape == (len(other.children),):
            targets = iter(other.children)
        else:
            return None
        total = ZERO
        for target, xi in zip(targets, _iter_shape(x, self.shape)):
            total = total + core.log_density(self.child, xi, wrt=target)
        return total

    def log_total_mass(self):
        lm = self.child.log_total_mass()
        return None if lm is None else _shape_size(self.shape) * lm

    def _sample_normalized(self, seed: int):
        counter = iter(range(_shape_size(self.shape)))

        def draw():
            return self.child._sample_normalized(rng.derive_key(seed, next(counter)))

        return _build_shape(self.shape, draw)


def power(mu: MeasureExpr, shape: Sequence[int]) -> Power:
    """iid product of mu over the given shape."""
    return Power(mu, tuple(shape))


# ---------------------------------------------------------------------------
# Indexed products and monadic bind
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ForProduct(MeasureExpr):
    """Product of kernel outputs over a finite index sequence."""

    indices: Tuple[Any, ...]
    kernel: Callable[[Any], MeasureExpr]

    def __post_init__(self):
        if not self.indices:
            raise ValueError("ForProduct needs at least one index")

    def check_point(self, x) -> None:
        if not isinstance(x, tuple) or len(x) != len(self.indices):
            raise ShapeError(
                f"ForProduct over {len(self.indices)} indices expects a "
                f"{len(self.indices)}-tuple, got {x!r}"
            )
        for i, xi in zip(self.indices, x):
            self.kernel(i).check_point(xi)

    def log_density_at(self, x) -> LogWeight:
        total = ZERO
        for i, xi in zip(self.indices, x):
            total = total + self.kernel(i).log_density_at(xi)
        return total

    def base_at(self, x) -> MeasureExpr:
        bases = tuple(
            self.kernel(i).base_at(xi) for i, xi in zip(self.indices, x)
        )
        if all(b == bases[0] for b in bases[1:]):
            return Power(bases[0], (len(bases),))
        return Product(bases)

    def log_total_mass(self):
        total = 0.0
        for i in self.indices:
            lm = self.kernel(i).log_total_mass()
            if lm is None:
                return None
            total += lm
        return total

    def _sample_normalized(self, seed: int):
        return tuple(
            self.kernel(i)._sample_normalized(rng.derive_key(seed, j))
            for j, i in enumerate(self.indices)
        )


def for_product(indices: Sequence[Any], kernel) -> ForProduct:
    """Product of kernel(i) over the indices; points are flat tuples."""
    return ForProduct(tuple(indices), kernel)


@dataclass(frozen=True)
class Bind(MeasureExpr):
    """Monadic bind: pair measure (x, y) with y drawn from kernel(x).

    The base measure at (x, y) is base(source, x) x base(kernel(x), y),
    assembled lazily at the evaluation point.
    """

    source: MeasureExpr
    kernel: Callable[[Any], MeasureExpr]

    def check_point(self, x) -> None:
        if not isinstance(x, tuple) or len(x) != 2:
            raise ShapeError(f"Bind expects a pair point, got {x!r}")
        self.source.check_point(x[0])
        self.kernel(x[0]).check_point(x[1])

    def log_density_at(self, x) -> LogWeight:
        first, second = x
        return self.source.log_density_at(first) + self.kernel(first).log_density_at(second)

    def base_at(self, x) -> MeasureExpr:
        first, second = x
        return Product((self.source.base_at(first), self.kernel(first).base_at(second)))

    def log_total_mass(self):
        # Assumes the kernel is Markov (unit-mass outputs); checked per draw.
        return self.source.log_total_mass()

    def _sample_normalized(self, seed: int):
        first = core.sample(self.source, rng.derive_key(seed, 0))
        second = core.sample(self.kernel(first), rng.derive_key(seed, 1))
        return (first, second)


def bind(mu: MeasureExpr, kernel) -> Bind:
    """Pair measure: x from mu, then y from kernel(x)."""
    return Bind(mu, kernel)


# ---------------------------------------------------------------------------
# Superposition and scaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Superposition(MeasureExpr):
    """Sum of two measures (the measure-theoretic mixture).

    Against an external target the log-density is the logaddexp of the
    component log-densities.  Against its own structural base a + b it uses
    the closed form f/(1 + (da/db)^-1) + g/(da/db + 1), computing da/db once;
    when the component bases coincide structurally this reduces to
    (f + g)/2.  At the atom of a spike-and-slab the density wrt Lebesgue is
    Undefined (neither side locally dominates).
    """

    left: MeasureExpr
    right: MeasureExpr

    def check_point(self, x) -> None:
        self.left.check_point(x)
        self.right.check_point(x)

    def log_density_at(self, x) -> LogWeight:
        alpha = self.left.base_at(x)
        beta = self.right.base_at(x)
        f = self.left.log_density_at(x)
        g = self.right.log_density_at(x)
        if alpha == beta:
            return logaddexp(f, g) + LogWeight(-_LOG_TWO)
        ratio = core.log_density(alpha, x, wrt=beta)  # computed once, reused
        if ratio.is_undefined:
            return UNDEFINED
        return logaddexp(f - logaddexp(ZERO, -ratio), g - logaddexp(ZERO, ratio))

    def base_at(self, x) -> MeasureExpr:
        return Superposition(self.left.base_at(x), self.right.base_at(x))

    def _componentwise(self, other, x) -> LogWeight:
        parts = []
        for component in (self.left, self.right):
            try:
                parts.append(core.log_density(component, x, wrt=other))
            except UnrelatedPrimitivesError:
                parts.append(None)
        if all(p is None for p in parts):
            raise UnrelatedPrimitivesError(
                f"no component of {self!r} is locally expressible against {other!r}"
            )
        total = NEG_INF
        for p in parts:
            total = logaddexp(total, NEG_INF if p is None else p)
        return total

    def rule_vs(self, other, x) -> Optional[LogWeight]:
        if other == self.base_at(x):
            return self.log_density_at(x)
        return self._componentwise(other, x)

    def rule_as_target(self, other, x) -> Optional[LogWeight]:
        if isinstance(other, Superposition):
            return None  # let the source-side rule handle it
        return -self._componentwise(other, x)

    def reference_class(self):
        left = self.left.reference_class()
        right = self.right.reference_class()
        if left is None or right is None or left[0] != right[0]:
            return None
        # exp(w1) ref + exp(w2) ref is still a rescaling of the same reference.
        return (left[0], logaddexp(left[1], right[1]).value)

    def log_total_mass(self):
        lm_left = self.left.log_total_mass()
        lm_right = self.right.log_total_mass()
        if lm_left is None or lm_right is None:
            return None
        return logaddexp(LogWeight(lm_left), LogWeight(lm_right)).value

    def _sample_normalized(self, seed: int):
        lm_left = self.left.log_total_mass()
        lm_right = self.right.log_total_mass()
        if lm_left is None or lm_right is None:
            raise NotProbabilityError("superposition component has unknown mass")
        total = logaddexp(LogWeight(lm_left), LogWeight(lm_right)).value
        p_left = math.exp(lm_left - total)
        u = rng.RandomStream(rng.derive_key(seed, 0)).unit()
        chosen = self.left if u < p_left else self.right
        return chosen._sample_normalized(rng.derive_key(seed, 1))


def superpose(mu: MeasureExpr, nu: MeasureExpr) -> Superposition:
    """Superposition (sum) of two measures on a common space."""
    return Superposition(mu, nu)


def scale(logw, mu: MeasureExpr) -> MeasureExpr:
    """Reweight mu by the constant exp(logw).

    scale(0, mu) is mu itself and nested scalings collapse additively, so
    scale(a, scale(b, mu)) == scale(a + b, mu) structurally.
    """
    w = core.as_log_weight(logw)
    if w.is_undefined or w.is_pos_inf:
        raise ValueError(f"invalid scaling weight {logw!r}")
    if w.value == 0.0:
        return mu
    if isinstance(mu, Weighted):
        return Weighted(w.value + mu.logweight, mu.base)
    return Weighted(w.value, mu)


# ---------------------------------------------------------------------------
# Likelihoods and pointwise products
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Likelihood:
    """A kernel evaluated toward fixed observed data.

    Not a measure: it participates only through `loglik` and
    `pointwise_product`.
    """

    kernel: Callable[[Any], MeasureExpr]
    x: Any

    def __call__(self, p) -> LogWeight:
        return loglik(self, p)


def loglik(lik: Likelihood, p) -> LogWeight:
    """Log-likelihood of the stored data under kernel(p)."""
    return core.log_density(lik.kernel(p), lik.x)


@dataclass(frozen=True)
class PointwiseProduct(MeasureExpr):
    """Prior-times-likelihood measure; keeps the prior's base measure."""

    prior: MeasureExpr
    likelihood: Likelihood

    def check_point(self, x) -> None:
        self.prior.check_point(x)

    def log_density_at(self, x) -> LogWeight:
        return self.prior.log_density_at(x) + loglik(self.likelihood, x)

    def base_at(self, x) -> MeasureExpr:
        return self.prior.base_at(x)


def pointwise_product(mu: MeasureExpr, lik: Likelihood) -> PointwiseProduct:
    """Unnormalized posterior: density of mu times the likelihood."""
    return PointwiseProduct(mu, lik)


# ---------------------------------------------------------------------------
# Density closures and integral measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DensityClosure:
    """Pointwise density of ``numerator`` against ``denominator``.

    Calling the closure evaluates the local log-density; in linear mode the
    value is exponentiated (undefined maps to nan).
    """

    numerator: MeasureExpr
    denominator: MeasureExpr
    logspace: bool = True

    def __call__(self, x):
        value = core.log_density(self.numerator, x, wrt=self.denominator)
        if self.logspace:
            return value
        return value.exp()


def rn_derivative(mu: MeasureExpr, nu: MeasureExpr, log: bool = True) -> DensityClosure:
    """Radon-Nikodym derivative of mu against nu as a closure.

    With ``log=True`` the closure returns log-densities; otherwise plain
    densities.  Evaluation may still produce special values pointwise.
    """
    return DensityClosure(mu, nu, logspace=log)


@dataclass(frozen=True, eq=False)
class IntegralMeasure(MeasureExpr):
    """Measure defined by a log-density function over a reference measure."""

    log_fn: Callable[[Any], float]
    reference: MeasureExpr

    def check_point(self, x) -> None:
        self.reference.check_point(x)

    def log_density_at(self, x) -> LogWeight:
        return core.as_log_weight(self.log_fn(x))

    def base_at(self, x) -> MeasureExpr:
        return self.reference


def integrate(f: Callable[[Any], float], nu: MeasureExpr) -> IntegralMeasure:
    """Measure with density f against nu.

    f must be nonnegative on nu's support; negative values raise at
    evaluation time.
    """

    def log_fn(x):
        v = f(x)
        if v < 0.0:
            raise ValueError(f"density function returned a negative value at {x!r}")
        return math.log(v) if v > 0.0 else -math.inf

    return IntegralMeasure(log_fn, nu)


def integrate_exp(log_f: Callable[[Any], float], nu: MeasureExpr) -> IntegralMeasure:
    """Measure with log-density log_f against nu."""

    def log_fn(x):
        v = log_f(x)
        return v.value if isinstance(v, LogWeight) else float(v)

    return IntegralMeasure(log_fn, nu)


# ---------------------------------------------------------------------------
# Affine pushforwards
# ---------------------------------------------------------------------------


def _as_matrix(m):
    return tuple(tuple(float(v) for v in row) for row in m)


def _check_lower_triangular(m):
    k = len(m)
    for i, row in enumerate(m):
        if len(row) != k:
            raise ValueError("affine factor must be square")
        for j in range(i + 1, k):
            if row[j] != 0.0:
                raise ValueError("affine factor must be lower triangular")
        if not row[i] > 0.0:
            raise ValueError("affine factor must have a positive diagonal")


def _matvec(m, v):
    return tuple(
        sum(m[i][j] * v[j] for j in range(i + 1)) for i in range(len(m))
    )


def _solve_lower(m, v):
    out = []
    for i in range(len(m)):
        s = v[i] - sum(m[i][j] * out[j] for j in range(i))
        out.append(s / m[i][i])
    return tuple(out)


def _log_det(m) -> float:
    if isinstance(m, tuple):
        return sum(math.log(m[i][i]) for i in range(len(m)))
    return math.log(m)


@dataclass(frozen=True)
class AffineMap:
    """Invertible affine change of coordinates, scalar or lower-triangular.

    * ``forward`` mode stores (factor=sigma, offset=x0) and maps source
      points z to sigma z + x0.
    * ``inverse`` mode stores (factor=psi, offset=mu0) and maps target points
      x back to psi (x - mu0); going from source to target solves the
      triangular system.
    """

    mode: str
    factor: Any
    offset: Any

    def __post_init__(self):
        if self.mode not in ("forward", "inverse"):
            raise ValueError(f"unknown affine mode {self.mode!r}")
        if isinstance(self.factor, (tuple, list)):
            m = _as_matrix(self.factor)
            _check_lower_triangular(m)
            off = self.offset
            if not isinstance(off, (tuple, list)) or len(off) != len(m):
                raise ValueError("affine offset does not match the factor dimension")
            object.__setattr__(self, "factor", m)
            object.__setattr__(self, "offset", tuple(float(v) for v in off))
        else:
            f = float(self.factor)
            if not f > 0.0:
                raise ValueError(f"affine factor must be positive, got {self.factor!r}")
            object.__setattr__(self, "factor", f)
            object.__setattr__(self, "offset", float(self.offset))

    @property
    def is_matrix(self) -> bool:
        return isinstance(self.factor, tuple)

    def from_source(self, z):
        """Map a source-space point to the transformed space."""
        if self.mode == "forward":
            if self.is_matrix:
                return tuple(a + b for a, b in zip(_matvec(self.factor, z), self.offset))
            return self.factor * z + self.offset
        if self.is_matrix:
            return tuple(a + b for a, b in zip(_solve_lower(self.factor, z), self.offset))
        return z / self.factor + self.offset

    def to_source(self, x):
        """Map a transformed-space point back to the source space."""
        if self.mode == "forward":
            if self.is_matrix:
                return _solve_lower(self.factor, tuple(a - b for a, b in zip(x, self.offset)))
            return (x - self.offset) / self.factor
        if self.is_matrix:
            return _matvec(self.factor, tuple(a - b for a, b in zip(x, self.offset)))
        return self.factor * (x - self.offset)

    def log_det_forward(self) -> float:
        """log |d(transformed)/d(source)|."""
        d = _log_det(self.factor)
        return d if self.mode == "forward" else -d

    def inverse(self) -> "AffineMap":
        """The inverse map, with the modes swapped (one triangular solve)."""
        if self.mode == "forward":
            if self.is_matrix:
                shift = tuple(-v for v in _solve_lower(self.factor, self.offset))
            else:
                shift = -self.offset / self.factor
            return AffineMap("inverse", self.factor, shift)
        if self.is_matrix:
            shift = tuple(-v for v in _matvec(self.factor, self.offset))
        else:
            shift = -self.factor * self.offset
        return AffineMap("forward", self.factor, shift)


def forward_map(factor, offset=None) -> AffineMap:
    """Affine map z -> factor z + offset (sampling-friendly form)."""
    if offset is None:
        offset = (0.0,) * len(factor) if isinstance(factor, (tuple, list)) else 0.0
    return AffineMap("forward", factor, offset)


def inverse_map(factor, offset=None) -> AffineMap:
    """Affine map given by x -> factor (x - offset) (density-friendly form)."""
    if offset is None:
        offset = (0.0,) * len(factor) if isinstance(factor, (tuple, list)) else 0.0
    return AffineMap("inverse", factor, offset)


@dataclass(frozen=True)
class Pushforward(MeasureExpr):
    """Image of a measure under an invertible affine map.

    The log-density against its own (transformed) base has no determinant
    factor; the determinant enters only through the fixed-point rule when the
    density is taken across the transform against an untransformed Lebesgue
    reference, and is absent when the inner reference is purely atomic.
    """

    map: AffineMap
    inner: MeasureExpr

    def check_point(self, x) -> None:
        try:
            z = self.map.to_source(x)
        except (TypeError, IndexError):
            raise ShapeError(f"point {x!r} does not match the affine map") from None
        self.inner.check_point(z)

    def log_density_at(self, x) -> LogWeight:
        return self.inner.log_density_at(self.map.to_source(x))

    def base_at(self, x) -> MeasureExpr:
        return pushforward(self.map, self.inner.base_at(self.map.to_source(x)))

    def reference_class(self):
        ref = self.inner.reference_class()
        if ref is None:
            return None
        if ref[0] == "lebesgue":
            # t* (exp(w) lambda) = exp(w) / |J| lambda.
            return ("lebesgue", ref[1] - self.map.log_det_forward())
        return ref

    def log_total_mass(self):
        return self.inner.log_total_mass()

    def _sample_normalized(self, seed: int):
        return self.map.from_source(self.inner._sample_normalized(seed))


def pushforward(t: AffineMap, mu: MeasureExpr) -> MeasureExpr:
    """Pushforward of mu through the affine map t.

    Dirac measures are transported directly to their image atom.
    """
    if isinstance(mu, Dirac):
        return Dirac(t.from_source(mu.atom))
    if isinstance(mu, Weighted):
        return Weighted(mu.logweight, pushforward(t, mu.base))
    return Pushforward(t, mu)
