"""Kernels (measure-valued functions) and Markov chains.

A kernel maps points to measures, either through a family constructor with
per-parameter maps or as an opaque function.  Chains pair a starting
probability measure with a kernel on the state space; sampling a chain gives
a seed-carrying lazy infinite iterator, and finite prefixes have
data-dependent log-densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence, Tuple

from . import catalog, core, rng
from .combinators import Power, Product
from .core import LogWeight, MeasureExpr, NotProbabilityError, ShapeError

# Closed vocabulary of serializable parameter maps.


def resolve_map(spec):
    """Resolve a parameter map: a callable, or one of the named forms
    "identity", "sqrt", "const:<v>", "affine:<a>:<b>"."""
    if callable(spec):
        return spec
    if spec == "identity":
        return lambda x: x
    if spec == "sqrt":
        return math.sqrt
    if isinstance(spec, str) and spec.startswith("const:"):
        value = float(spec.split(":", 1)[1])
        return lambda x: value
    if isinstance(spec, str) and spec.startswith("affine:"):
        _, a, b = spec.split(":")
        a, b = float(a), float(b)
        return lambda x: a * x + b
    raise ValueError(f"unknown parameter map {spec!r}")


@dataclass(frozen=True)
class Kernel:
    """Measure-valued function of a point.

    Either a registered family name plus per-parameter maps, or an opaque
    function.  Application is deterministic and yields structurally equal
    measures for equal inputs.
    """

    family: Optional[str] = None
    maps: Tuple[Tuple[str, Any], ...] = ()
    fn: Optional[Callable[[Any], MeasureExpr]] = None

    def __call__(self, x) -> MeasureExpr:
        if self.fn is not None:
            return self.fn(x)
        factory = catalog.FAMILIES[self.family]
        return factory(**{name: resolve_map(spec)(x) for name, spec in self.maps})


def make_kernel(family: str, **param_maps) -> Kernel:
    """Kernel from a family name and per-parameter maps.

    Maps may be callables or entries of the closed vocabulary understood by
    `resolve_map`.  The family must be registered and the map names must form
    a valid parameterization of it.
    """
    if family not in catalog.FAMILIES:
        raise ValueError(f"unknown measure family {family!r}")
    for spec in param_maps.values():
        resolve_map(spec)  # validates named forms eagerly
    _validate_param_names(family, set(param_maps))
    return Kernel(family=family, maps=tuple(sorted(param_maps.items())))


_PARAMETERIZATIONS = {
    "Normal": [{"mu"}, {"sigma"}, {"mu", "sigma"}, set()],
    "NegativeBinomial": [{"r", "p"}, {"alpha", "beta"}],
    "Uniform01": [set()],
    "Bernoulli": [{"p"}, set()],
    "Poisson": [{"rate"}, set()],
    "Exponential": [{"rate"}, set()],
    "Dirac": [{"a"}],
}


def _validate_param_names(family: str, names: set) -> None:
    if names not in _PARAMETERIZATIONS.get(family, [names]):
        raise ValueError(
            "unknown parameterization {%s} for %s" % (",".join(sorted(names)), family)
        )


def as_kernel(k) -> Kernel:
    """Coerce a Kernel or plain callable into a Kernel."""
    if isinstance(k, Kernel):
        return k
    if callable(k):
        return Kernel(fn=k)
    raise TypeError(f"not a kernel: {k!r}")


def apply_kernel(k, x) -> MeasureExpr:
    """Apply a kernel at a point, yielding a measure."""
    return as_kernel(k)(x)


# ---------------------------------------------------------------------------
# Markov chains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Chain(MeasureExpr):
    """Markov chain: initial probability measure plus a step kernel.

    As a measure expression it is evaluated at finite prefixes: the
    log-density of a length-n prefix is the data-dependent sum
    log p(x1) + sum_i log p(x_{i+1} | x_i), and the base measure at the
    prefix is assembled from the initial and per-step bases, so densities
    against Lebesgue^n work through the ordinary recursion.
    """

    initial: MeasureExpr
    step: Kernel

    def check_point(self, x) -> None:
        if not isinstance(x, (tuple, list)) or len(x) == 0:
            raise ShapeError(f"Chain expects a nonempty finite prefix, got {x!r}")
        self.initial.check_point(x[0])
        for prev, cur in zip(x, x[1:]):
            self.step(prev).check_point(cur)

    def log_density_at(self, x) -> LogWeight:
        total = self.initial.log_density_at(x[0])
        for prev, cur in zip(x, x[1:]):
            total = total + self.step(prev).log_density_at(cur)
        return total

    def base_at(self, x) -> MeasureExpr:
        bases = [self.initial.base_at(x[0])]
        for prev, cur in zip(x, x[1:]):
            bases.append(self.step(prev).base_at(cur))
        if len(bases) == 1:
            return bases[0]
        if all(b == bases[0] for b in bases[1:]):
            return Power(bases[0], (len(bases),))
        return Product(tuple(bases))

    def log_total_mass(self):
        # Assumes the step kernel is Markov; each element draw re-checks it.
        return self.initial.log_total_mass()

    def _sample_normalized(self, seed: int):
        return ChainSample(self, seed)


def chain(step, initial: MeasureExpr) -> Chain:
    """Markov chain with the given step kernel and initial distribution."""
    lm = initial.log_total_mass()
    if lm is None or not abs(lm) <= 1e-9:
        raise NotProbabilityError(f"improper initial measure: {initial!r}")
    return Chain(initial=initial, step=as_kernel(step))


@dataclass(frozen=True)
class ChainSample:
    """Seed-carrying lazy realization of a chain.

    Element i is a deterministic function of (chain, seed, i); iterating the
    same ChainSample twice reproduces the sequence exactly, and concurrent
    iterators are independent.
    """

    spec: Chain
    seed: int

    def __iter__(self):
        state = core.sample(self.spec.initial, rng.derive_key(self.seed, 0))
        yield state
        i = 1
        while True:
            state = core.sample(self.spec.step(state), rng.derive_key(self.seed, i))
            yield state
            i += 1


def sample_chain(spec: Chain, seed: int) -> ChainSample:
    """Reproducible infinite sample of a chain as a lazy iterator."""
    return ChainSample(spec, int(seed))


def chain_logdensity(spec: Chain, prefix: Sequence) -> LogWeight:
    """Data-dependent log-density of a finite chain prefix."""
    return core.log_density(spec, tuple(prefix))
