"""The four recursion maps and their Lipschitz data.

============  =============================================
family        value
============  =============================================
linear        ``q + sum_i c_i x_i``
max           ``q v max_i c_i x_i``
tree_sum      ``q + max_i c_i x_i`` (empty maximum is 0)
free_entropy  ``q + sum_i artanh(tanh(beta) tanh(x_i))``
============  =============================================

:func:`apply_map` evaluates one realization with plain floats;
:func:`apply_map_batch` evaluates a whole :class:`BranchingBatch` with numpy.
The two are kept independent on purpose and cross-checked in the tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .branching import BranchingBatch, BranchingRealization, BranchingVectorSpec, Kind
from .errors import ConfigError, NumericOverflowError

# above this |x| the log form of artanh(c tanh x) is used
FREE_ENTROPY_CROSSOVER = 18.0


class Family(str, Enum):
    LINEAR = "linear"
    MAX = "max"
    TREE_SUM = "tree_sum"
    FREE_ENTROPY = "free_entropy"


@dataclass(frozen=True)
class SfpeMap:
    family: Family
    beta: float | None = None
    linear_zero_mean: bool = False

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if (fam == Family.FREE_ENTROPY) != (self.beta is not None):
            raise ConfigError("beta must be given exactly for the free_entropy family", key="beta")
        if fam == Family.FREE_ENTROPY and not (math.isfinite(self.beta) and self.beta >= 0):
            raise ConfigError("β must be ≥ 0 (beta)", key="beta")
        if self.linear_zero_mean and fam != Family.LINEAR:
            raise ConfigError("linear_zero_mean only applies to the linear family",
                              key="linear_zero_mean")

    @classmethod
    def linear(cls, zero_mean=False):
        return cls(Family.LINEAR, linear_zero_mean=zero_mean)

    @classmethod
    def max(cls):
        return cls(Family.MAX)

    @classmethod
    def tree_sum(cls):
        return cls(Family.TREE_SUM)

    @classmethod
    def free_entropy(cls, beta):
        return cls(Family.FREE_ENTROPY, beta=float(beta))

    @property
    def label(self):
        if self.family == Family.FREE_ENTROPY:
            return f"free_entropy(beta={self.beta!r})"
        return self.family.value

    def to_mapping(self):
        out = {"family": self.family.value}
        if self.beta is not None:
            out["beta"] = repr(self.beta)
        if self.linear_zero_mean:
            out["linear_zero_mean"] = "true"
        return out

    @classmethod
    def from_mapping(cls, mapping):
        mapping = {k.strip().lower(): str(v).strip() for k, v in mapping.items()}
        try:
            fam = Family(mapping.get("family", "").lower())
        except ValueError:
            raise ConfigError("unknown map family", key="family") from None
        beta = mapping.get("beta")
        if beta is not None:
            try:
                beta = float(beta)
            except ValueError:
                raise ConfigError("beta must be numeric", key="beta") from None
        flag = mapping.get("linear_zero_mean", "false").lower() in ("1", "true", "yes", "on")
        extra = set(mapping) - {"family", "beta", "linear_zero_mean"}
        if extra:
            key = sorted(extra)[0]
            raise ConfigError(f"unknown map key {key!r}", key=key)
        return cls(fam, beta, flag)


def free_entropy_term(x, c):
    """``artanh(c * tanh(x))`` for a scalar, stable for large ``|x|``."""
    if abs(x) <= FREE_ENTROPY_CROSSOVER:
        return math.atanh(c * math.tanh(x))
    e = math.exp(-2.0 * abs(x))
    val = 0.5 * math.log(((1.0 + c) + (1.0 - c) * e) / ((1.0 - c) + (1.0 + c) * e))
    return math.copysign(val, x)


def free_entropy_terms(x, c):
    """Vectorized :func:`free_entropy_term`."""
    x = np.asarray(x, dtype=np.float64)
    ax = np.abs(x)
    small = ax <= FREE_ENTROPY_CROSSOVER
    out = np.empty_like(x)
    out[small] = np.arctanh(c * np.tanh(x[small]))
    big = ~small
    if big.any():
        e = np.exp(-2.0 * ax[big])
        out[big] = np.copysign(
            0.5 * np.log(((1.0 + c) + (1.0 - c) * e) / ((1.0 - c) + (1.0 + c) * e)), x[big])
    return out


def apply_map(map: SfpeMap, real: BranchingRealization, children, *, level=None, index=None) -> float:
    """Evaluate the map on one realization and its ``n`` children."""
    children = [float(x) for x in children]
    if len(children) != real.n:
        raise ValueError(f"expected {real.n} children, got {len(children)}")
    fam = map.family
    if fam == Family.LINEAR:
        val = real.q + sum(c * x for c, x in zip(real.c, children))
    elif fam == Family.MAX:
        val = max([real.q] + [c * x for c, x in zip(real.c, children)])
    elif fam == Family.TREE_SUM:
        val = real.q + (max(c * x for c, x in zip(real.c, children)) if real.n else 0.0)
    else:
        t = math.tanh(map.beta)
        val = real.q + sum(free_entropy_term(x, t) for x in children)
    if not math.isfinite(val):
        raise NumericOverflowError("map evaluation is not finite", level=level, index=index)
    return val


def apply_map_batch(map: SfpeMap, batch: BranchingBatch, children, *, level=None, index_offset=0):
    """Evaluate the map row-wise; ``children`` is flat, aligned with ``batch.c``."""
    children = np.asarray(children, dtype=np.float64)
    if children.shape != batch.c.shape:
        raise ValueError("children must align with the flat weight array")
    fam = map.family
    nz = batch.n > 0
    starts = batch.offsets[:-1][nz]
    with np.errstate(over="ignore", invalid="ignore"):
        if fam == Family.FREE_ENTROPY:
            terms = free_entropy_terms(children, math.tanh(map.beta))
        else:
            terms = batch.c * children
        if fam in (Family.LINEAR, Family.FREE_ENTROPY):
            acc = np.zeros(batch.size)
            if terms.size:
                acc[nz] = np.add.reduceat(terms, starts)
            out = batch.q + acc
        else:
            acc = np.full(batch.size, -np.inf if fam == Family.MAX else 0.0)
            if terms.size:
                acc[nz] = np.maximum.reduceat(terms, starts)
            out = np.maximum(batch.q, acc) if fam == Family.MAX else batch.q + acc
    bad = ~np.isfinite(out)
    if bad.any():
        i = int(np.argmax(bad))
        raise NumericOverflowError("map evaluation is not finite", level=level,
                                   index=index_offset + i)
    return out


def phi(map: SfpeMap, c: float) -> float:
    """Per-weight Lipschitz factor; ``|c|`` for every built-in family."""
    return abs(float(c))


def map_at_zero(map: SfpeMap, real: BranchingRealization) -> float:
    """The map evaluated with every child equal to zero."""
    return apply_map(map, real, [0.0] * real.n)


def closed_form_Hp(map: SfpeMap, spec: BranchingVectorSpec, p: float):
    """Closed-form mean-Lipschitz constant, or ``None`` when only an estimate exists.

    Known cases: Quicksort with the linear map, ``(p - 1) / (p + 1)`` for
    ``p > 1``; FIND with the tree-sum map, ``2 / (p + 1)``; the Ising driver
    with the free-entropy map at ``p = 1``, ``E[N] tanh(beta)``; the
    PageRank-like driver with the linear map at ``p = 1``, ``E[N] E|C_1|``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    fam, kind = map.family, spec.kind
    if kind == Kind.QUICKSORT and fam == Family.LINEAR and p > 1:
        # at p = 1 the expression collapses to 0, which is not a Lipschitz constant
        return (p - 1.0) / (p + 1.0)
    if kind == Kind.FIND and fam == Family.TREE_SUM:
        return 2.0 / (p + 1.0)
    if kind == Kind.ISING and fam == Family.FREE_ENTROPY and p == 1:
        return spec.offspring_law().mean() * math.tanh(map.beta)
    if kind == Kind.PAGERANK_LIKE and fam == Family.LINEAR and p == 1:
        return spec.param("mean_offspring") * spec.weight_halfwidth() / 2.0
    return None
