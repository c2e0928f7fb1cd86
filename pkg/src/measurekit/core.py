"""Measure expressions, extended log-weights, and the density recursion engine.

A measure is an immutable expression tree.  Every node reports a base measure
near a point (`base_at`) and its own log-density against that base
(`log_density_at`, the data-dependent terms).  The log-density between two
arbitrary measures is computed by `log_density(mu, x, wrt=nu)`: telescope both
base-measure chains until the nodes coincide structurally, a direct rule
applies, or two chain fixed points are reached.  Primitive measures (Lebesgue,
counting, Dirac) are their own base measures and terminate every chain.

Non-domination is reported through `LogWeight` special values: -inf when the
left measure vanishes locally but the right does not, +inf in the reverse
case, and a tagged Undefined value when neither measure locally dominates.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from typing import Any, Optional, Tuple

_MAX_CHAIN_STEPS = 10_000


class MeasureError(Exception):
    """Base class for measure-theoretic failures."""


class ShapeError(MeasureError):
    """Point does not match the measure's sample space."""


class UnrelatedPrimitivesError(MeasureError):
    """Reached two distinct primitive measures with no density rule."""


class NotProbabilityError(MeasureError):
    """Operation requires a probability measure."""


class UndefinedDensityError(MeasureError):
    """A computation required a density where none is defined."""


# ---------------------------------------------------------------------------
# Extended-real log weights
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LogWeight:
    """Extended-real log weight: finite float, +inf, -inf, or undefined.

    Undefined is a tagged state distinct from a float NaN so callers can
    branch on it reliably.  Arithmetic follows the extended rules: negation
    swaps the infinities, finite + (-inf) = -inf, (+inf) + (-inf) is
    undefined, and undefined absorbs everything.
    """

    value: float = 0.0
    defined: bool = True

    def __post_init__(self):
        v = float(self.value)
        if math.isnan(v):
            object.__setattr__(self, "value", 0.0)
            object.__setattr__(self, "defined", False)
        else:
            object.__setattr__(self, "value", v)

    # -- predicates --------------------------------------------------------

    @property
    def is_undefined(self) -> bool:
        return not self.defined

    @property
    def is_finite(self) -> bool:
        return self.defined and math.isfinite(self.value)

    @property
    def is_neg_inf(self) -> bool:
        return self.defined and self.value == -math.inf

    @property
    def is_pos_inf(self) -> bool:
        return self.defined and self.value == math.inf

    # -- arithmetic ---------------------------------------------------------

    def __neg__(self) -> "LogWeight":
        if not self.defined:
            return UNDEFINED
        return LogWeight(-self.value)

    def __add__(self, other) -> "LogWeight":
        other = as_log_weight(other)
        if not (self.defined and other.defined):
            return UNDEFINED
        return LogWeight(self.value + other.value)  # inf + -inf -> NaN -> undefined

    __radd__ = __add__

    def __sub__(self, other) -> "LogWeight":
        return self + (-as_log_weight(other))

    def exp(self) -> float:
        """Linear-space weight; 0.0 for -inf, nan for undefined."""
        if not self.defined:
            return math.nan
        if self.value == -math.inf:
            return 0.0
        return math.exp(self.value)

    # -- comparison ---------------------------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, LogWeight):
            if not (self.defined and other.defined):
                return self.defined == other.defined
            return self.value == other.value
        if isinstance(other, numbers.Real):
            return self.defined and self.value == float(other)
        return NotImplemented

    def __hash__(self):
        # Equal values hash equal, including LogWeight(v) == v for floats.
        return hash(self.value) if self.defined else hash("LogWeight.undefined")

    def __repr__(self):
        if not self.defined:
            return "LogWeight(undefined)"
        return f"LogWeight({self.value!r})"


ZERO = LogWeight(0.0)
NEG_INF = LogWeight(-math.inf)
POS_INF = LogWeight(math.inf)
UNDEFINED = LogWeight(0.0, defined=False)


def as_log_weight(v) -> LogWeight:
    if isinstance(v, LogWeight):
        return v
    if isinstance(v, numbers.Real):
        return LogWeight(float(v))
    raise TypeError(f"cannot interpret {v!r} as a log weight")


def logaddexp(a, b) -> LogWeight:
    """log(e^a + e^b), overflow-safe via max-shift.

    Finite whenever either argument is finite; -inf acts as the identity;
    undefined propagates.
    """
    a = as_log_weight(a)
    b = as_log_weight(b)
    if a.is_undefined or b.is_undefined:
        return UNDEFINED
    if a.value == -math.inf:
        return b
    if b.value == -math.inf:
        return a
    if a.value == math.inf or b.value == math.inf:
        return POS_INF
    hi = a.value if a.value >= b.value else b.value
    lo = b.value if a.value >= b.value else a.value
    return LogWeight(hi + math.log1p(math.exp(lo - hi)))


# ---------------------------------------------------------------------------
# Instrumentation
# ---------------------------------------------------------------------------

_weight_evaluations = 0


def reset_weight_evaluations() -> None:
    """Reset the counter of constant base-weight term evaluations."""
    global _weight_evaluations
    _weight_evaluations = 0


def weight_evaluations() -> int:
    """Number of times a Weighted node contributed its constant term."""
    return _weight_evaluations


def _count_weight_evaluation() -> None:
    global _weight_evaluations
    _weight_evaluations += 1


# ---------------------------------------------------------------------------
# Measure expressions
# ---------------------------------------------------------------------------


def _is_scalar(x) -> bool:
    return isinstance(x, numbers.Real) and not isinstance(x, bool)


class MeasureExpr:
    """Base class for measure expression nodes.

    Subclasses are frozen dataclasses; structural equality is the generated
    field equality.  All evaluation methods are pure, so values are safely
    shareable across threads.
    """

    def check_point(self, x) -> None:
        """Raise ShapeError when x is not in this measure's sample space."""
        if not _is_scalar(x):
            raise ShapeError(f"{type(self).__name__} expects a scalar point, got {x!r}")

    def log_density_at(self, x) -> LogWeight:
        """Log-density against this measure's own base measure at x."""
        raise NotImplementedError

    def base_at(self, x) -> "MeasureExpr":
        """Base measure near x.  Primitives return themselves."""
        raise NotImplementedError

    # Optional hooks for the recursion engine ------------------------------

    def rule_vs(self, other: "MeasureExpr", x) -> Optional[LogWeight]:
        """Direct rule for d(self)/d(other) at x, or None."""
        return None

    def rule_as_target(self, other: "MeasureExpr", x) -> Optional[LogWeight]:
        """Direct rule for d(other)/d(self) at x, or None."""
        return None

    def reference_class(self) -> Optional[Tuple[str, float]]:
        """Classification of a base-chain fixed point.

        A recognizable fixed point equals exp(logscale) times a primitive
        reference; the return value is ("lebesgue" | "counting", logscale).
        Returns None when the node is not a recognizable reference, in which
        case an unmatched fixed-point pair raises.
        """
        return None

    def fixed_pair_rule(self, other: "MeasureExpr", x) -> Optional[LogWeight]:
        """Last-resort rule between two base-chain fixed points.

        Consulted only when scalar classification fails; lets structured
        fixed points (powers of atoms, for instance) split coordinatewise.
        """
        return None

    # Mass and sampling -----------------------------------------------------

    def log_total_mass(self) -> Optional[float]:
        """Log of the total mass when statically known, else None."""
        return None

    def _sample_normalized(self, seed: int):
        raise NotProbabilityError(f"cannot sample from {type(self).__name__}")


@dataclass(frozen=True)
class Lebesgue(MeasureExpr):
    """Length/volume on the real line; a primitive measure."""

    def log_density_at(self, x) -> LogWeight:
        return ZERO

    def base_at(self, x) -> MeasureExpr:
        return self

    def reference_class(self):
        return ("lebesgue", 0.0)


@dataclass(frozen=True)
class Counting(MeasureExpr):
    """Unit mass on every point of a countable carrier; a primitive measure."""

    def log_density_at(self, x) -> LogWeight:
        return ZERO

    def base_at(self, x) -> MeasureExpr:
        return self

    def reference_class(self):
        return ("counting", 0.0)


@dataclass(frozen=True)
class Dirac(MeasureExpr):
    """Unit point mass at ``atom``; a primitive measure."""

    atom: Any

    def check_point(self, x) -> None:
        if isinstance(self.atom, tuple):
            if not isinstance(x, tuple) or len(x) != len(self.atom):
                raise ShapeError(f"Dirac atom has shape {self.atom!r}, got point {x!r}")
        elif not _is_scalar(x):
            raise ShapeError(f"Dirac expects a scalar point, got {x!r}")

    def log_density_at(self, x) -> LogWeight:
        return ZERO if x == self.atom else NEG_INF

    def base_at(self, x) -> MeasureExpr:
        return self

    def log_total_mass(self):
        return 0.0

    def _sample_normalized(self, seed: int):
        return self.atom


LEBESGUE = Lebesgue()
COUNTING = Counting()


@dataclass(frozen=True)
class Weighted(MeasureExpr):
    """Constant reweighting of another measure.

    The density with respect to ``base`` is the constant ``logweight``; this
    is the carrier for normalization and parameter-dependent terms pushed out
    of a family's data-dependent log-density.  ``logweight`` may be -inf (the
    zero measure) but not +inf or NaN.
    """

    logweight: float
    base: MeasureExpr

    def __post_init__(self):
        w = float(self.logweight)
        if math.isnan(w) or w == math.inf:
            raise ValueError(f"invalid log weight {self.logweight!r}")
        object.__setattr__(self, "logweight", w)

    def check_point(self, x) -> None:
        self.base.check_point(x)

    def log_density_at(self, x) -> LogWeight:
        _count_weight_evaluation()
        return LogWeight(self.logweight)

    def base_at(self, x) -> MeasureExpr:
        return self.base

    def log_total_mass(self):
        inner = self.base.log_total_mass()
        return None if inner is None else self.logweight + inner

    def _sample_normalized(self, seed: int):
        return self.base._sample_normalized(seed)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def is_primitive(m: MeasureExpr) -> bool:
    """True exactly for the primitive measures: Lebesgue, Counting, Dirac."""
    return isinstance(m, (Lebesgue, Counting, Dirac))


def base_measure(m: MeasureExpr, x) -> MeasureExpr:
    """Base measure of m near x; primitives are their own base measure."""
    m.check_point(x)
    return m.base_at(x)


def log_density(m: MeasureExpr, x, wrt: Optional[MeasureExpr] = None) -> LogWeight:
    """Local log-density of m at x.

    With ``wrt=None`` this is the density against m's own base measure (the
    data-dependent terms only).  With an explicit reference it is the density
    d(m)/d(wrt) near x, computed by density recursion.

    Raises UnrelatedPrimitivesError when the recursion bottoms out at two
    distinct primitive measures with no rule (e.g. Lebesgue vs Counting).
    """
    m.check_point(x)
    if wrt is None:
        return m.log_density_at(x)
    wrt.check_point(x)
    return _recurse(m, wrt, x)


def _recurse(mu: MeasureExpr, nu: MeasureExpr, x) -> LogWeight:
    # The source-chain and target-chain sums are accumulated separately and
    # combined once, so swapping the arguments negates the result bitwise.
    num = ZERO
    den = ZERO
    for _ in range(_MAX_CHAIN_STEPS):
        if mu == nu:
            return (num - den) + ZERO
        rule = mu.rule_vs(nu, x)
        if rule is None:
            rule = nu.rule_as_target(mu, x)
        if rule is not None:
            return (num - den) + rule
        mu_base = mu.base_at(x)
        if mu_base != mu:
            num = num + mu.log_density_at(x)
            mu = mu_base
        else:
            nu_base = nu.base_at(x)
            if nu_base != nu:
                den = den + nu.log_density_at(x)
                nu = nu_base
            else:
                rule = _fixed_point_rule(mu, nu, x)
                if rule is None:
                    raise UnrelatedPrimitivesError(
                        f"unrelated primitive measures: {mu!r} vs {nu!r}"
                    )
                return (num - den) + rule
        if num.is_undefined or den.is_undefined:
            return UNDEFINED
        if num.is_neg_inf and den.is_neg_inf:
            # Both measures vanish locally: neither dominates.
            return UNDEFINED
    raise RuntimeError("base-measure recursion did not terminate")


def _fixed_point_rule(mu: MeasureExpr, nu: MeasureExpr, x) -> Optional[LogWeight]:
    """Density between two base-chain fixed points, or None when unrelated.

    Structural equality was already ruled out by the caller.
    """
    if isinstance(mu, Dirac) and isinstance(nu, Dirac):
        # Distinct atoms: neither measure dominates the other anywhere.
        return UNDEFINED
    if isinstance(mu, Dirac):
        ref = nu.reference_class()
        if ref is None:
            return None
        if ref[0] == "counting":
            return LogWeight(-ref[1]) if x == mu.atom else NEG_INF
        return UNDEFINED if x == mu.atom else NEG_INF
    if isinstance(nu, Dirac):
        ref = mu.reference_class()
        if ref is None:
            return None
        if ref[0] == "counting":
            return LogWeight(ref[1]) if x == nu.atom else POS_INF
        return UNDEFINED if x == nu.atom else POS_INF
    mu_ref = mu.reference_class()
    nu_ref = nu.reference_class()
    if mu_ref is not None and nu_ref is not None and mu_ref[0] == nu_ref[0]:
        # Both sides are rescalings of the same primitive reference.
        return LogWeight(mu_ref[1] - nu_ref[1])
    rule = mu.fixed_pair_rule(nu, x)
    if rule is not None:
        return rule
    rule = nu.fixed_pair_rule(mu, x)
    if rule is not None:
        return -rule
    return None


def sample(m: MeasureExpr, seed: int):
    """Deterministic draw from a probability measure.

    The result is a pure function of (m, seed).  Raises NotProbabilityError
    for improper measures (unknown or non-unit total mass).
    """
    lm = m.log_total_mass()
    if lm is None or not abs(lm) <= 1e-9:
        raise NotProbabilityError(f"not a probability measure: {m!r}")
    return m._sample_normalized(int(seed))
