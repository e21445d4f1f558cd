"""Generic branching vectors ``(Q, N, {C_i})`` and their samplers.

A realization only materializes the ``n`` weights that are actually read;
none of the maps look past ``N``.  Batches of realizations are stored in a
flat ragged layout (``c`` concatenated, ``offsets`` delimiting each row) so
whole pool levels can be sampled with a handful of numpy calls.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping

import numpy as np

from .errors import BudgetExceededError, ConfigError

DEFAULT_MAX_OFFSPRING = 10**6


class Kind(str, Enum):
    QUICKSORT = "quicksort"
    FIND = "find"
    ISING = "ising"
    PAGERANK_LIKE = "pagerank_like"
    CUSTOM = "custom"


# ---------------------------------------------------------------------------
# primitive laws
# ---------------------------------------------------------------------------

_LAW_ARITY = {"constant": 1, "uniform": 2, "bernoulli": 1, "poisson": 1, "geometric": 1}


@dataclass(frozen=True)
class Law:
    """A primitive one-dimensional law.

    ``geometric(q)`` counts failures before the first success when each trial
    succeeds with probability ``q``, so its support is ``{0, 1, 2, ...}``.
    ``function`` applies a vectorized callable to i.i.d. Uniform(0, 1) draws
    and cannot be serialized.
    """

    kind: str
    params: tuple = ()
    fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    @classmethod
    def constant(cls, value):
        return cls("constant", (float(value),))

    @classmethod
    def uniform(cls, a, b):
        return cls("uniform", (float(a), float(b)))

    @classmethod
    def bernoulli(cls, p):
        return cls("bernoulli", (float(p),))

    @classmethod
    def poisson(cls, lam):
        return cls("poisson", (float(lam),))

    @classmethod
    def geometric(cls, q):
        return cls("geometric", (float(q),))

    @classmethod
    def function(cls, fn, name="function"):
        return cls("function", (name,), fn)

    def sample(self, rng, size):
        k, p = self.kind, self.params
        if k == "constant":
            return np.full(size, p[0])
        if k == "uniform":
            return rng.uniform(p[0], p[1], size)
        if k == "bernoulli":
            return (rng.random(size) < p[0]).astype(np.float64)
        if k == "poisson":
            return rng.poisson(p[0], size).astype(np.float64)
        if k == "geometric":
            return (rng.geometric(p[0], size) - 1).astype(np.float64)
        if k == "function":
            return np.asarray(self.fn(rng.random(size)), dtype=np.float64).reshape(size)
        raise ConfigError(f"unknown law {k!r}")

    def mean(self):
        """Analytic mean, or ``None`` for ``function`` laws."""
        k, p = self.kind, self.params
        if k == "constant":
            return p[0]
        if k == "uniform":
            return 0.5 * (p[0] + p[1])
        if k in ("bernoulli", "poisson"):
            return p[0]
        if k == "geometric":
            return (1.0 - p[0]) / p[0]
        return None

    def abs_moment(self, r):
        """Analytic ``E|X|^r`` for the laws where it is elementary, else ``None``."""
        k, p = self.kind, self.params
        if k == "constant":
            return abs(p[0]) ** r
        if k == "uniform":
            a, b = p
            if a == b:
                return abs(a) ** r
            prim = lambda x: math.copysign(abs(x) ** (r + 1), x) / (r + 1)
            return (prim(b) - prim(a)) / (b - a)
        if k == "bernoulli":
            return p[0]
        return None

    @property
    def is_deterministic(self):
        return self.kind == "constant"

    def problems(self, integer=False):
        msgs = []
        k, p = self.kind, self.params
        if k not in _LAW_ARITY and k != "function":
            return [f"unknown law {k!r}"]
        if k == "function":
            if self.fn is None:
                msgs.append("function law needs a callable")
            return msgs
        if len(p) != _LAW_ARITY[k]:
            return [f"{k} law takes {_LAW_ARITY[k]} parameter(s)"]
        if not all(math.isfinite(v) for v in p):
            msgs.append(f"{k} law parameters must be finite")
        if k == "uniform" and p[0] > p[1]:
            msgs.append("uniform(a, b) requires a <= b")
        if k == "bernoulli" and not 0.0 <= p[0] <= 1.0:
            msgs.append("bernoulli(p) requires 0 <= p <= 1")
        if k == "poisson" and p[0] < 0:
            msgs.append("poisson(lambda) requires lambda >= 0")
        if k == "geometric" and not 0.0 < p[0] <= 1.0:
            msgs.append("geometric(q) requires 0 < q <= 1")
        if integer:
            if k == "uniform":
                msgs.append("offspring law must be integer-valued; uniform is continuous")
            if k == "constant" and (p[0] < 0 or p[0] != int(p[0])):
                msgs.append("offspring constant must be a nonnegative integer")
        return msgs

    def to_text(self):
        if self.kind == "function":
            raise ConfigError("function laws cannot be serialized")
        return f"{self.kind}({', '.join(repr(v) for v in self.params)})"

    @classmethod
    def from_text(cls, text):
        m = re.fullmatch(r"\s*([a-z_]+)\s*\((.*)\)\s*", text)
        if not m:
            raise ConfigError(f"cannot parse law {text!r}")
        name, args = m.group(1), m.group(2).strip()
        if name not in _LAW_ARITY:
            raise ConfigError(f"unknown law {name!r}")
        try:
            vals = tuple(float(a) for a in args.split(",")) if args else ()
        except ValueError:
            raise ConfigError(f"non-numeric law parameter in {text!r}") from None
        if len(vals) != _LAW_ARITY[name]:
            raise ConfigError(f"{name} law takes {_LAW_ARITY[name]} parameter(s)")
        return cls(name, vals)


# ---------------------------------------------------------------------------
# spec
# ---------------------------------------------------------------------------

_DEFAULT_PARAMS = {
    Kind.QUICKSORT: {},
    Kind.FIND: {},
    Kind.ISING: {"beta": 0.5, "mean_degree": 2.0, "offspring": "poisson",
                 "field": 0.0, "field_spread": 0.0},
    Kind.PAGERANK_LIKE: {"cap": 0.5, "mean_offspring": 3.0, "q": None},
    Kind.CUSTOM: {},
}


@dataclass(frozen=True)
class BranchingVectorSpec:
    """Distributional description of the generic branching vector.

    Use the named constructors (:meth:`quicksort`, :meth:`find`,
    :meth:`ising`, :meth:`pagerank_like`, :meth:`custom`).  Custom specs draw
    ``N`` first, then each ``C_i`` i.i.d., then ``Q`` independently of both.
    """

    kind: Kind
    params: tuple = ()
    n_law: Law | None = None
    c_law: Law | None = None
    q_law: Law | None = None
    max_offspring: int = DEFAULT_MAX_OFFSPRING

    @classmethod
    def quicksort(cls):
        return cls(Kind.QUICKSORT)

    @classmethod
    def find(cls):
        return cls(Kind.FIND)

    @classmethod
    def ising(cls, beta, mean_degree=2.0, offspring="poisson", field=0.0, field_spread=0.0):
        """Ising free-entropy driver: ``C_i = tanh(beta)``, ``Q`` the external field.

        ``offspring`` is ``"poisson"`` (mean ``mean_degree``) or ``"fixed"``
        (exactly ``mean_degree`` children).  A positive ``field_spread`` makes
        the field Uniform(field - spread, field + spread).
        """
        return cls(Kind.ISING, _freeze(beta=beta, mean_degree=mean_degree, offspring=offspring,
                                       field=field, field_spread=field_spread))

    @classmethod
    def pagerank_like(cls, cap=0.5, mean_offspring=3.0, q=None):
        """PageRank-style linear driver with ``N ~ Poisson`` and ``|C_i| <= cap``.

        Weights are Uniform(-a, a) with ``a = cap * min(1, 2 / mean_offspring)``,
        which gives ``E|C_1|^p <= cap^p / E[N]`` for every ``p >= 1``.
        ``Q`` is the constant ``q`` (default ``1 - cap``).
        """
        extra = {} if q is None else {"q": q}
        return cls(Kind.PAGERANK_LIKE, _freeze(cap=cap, mean_offspring=mean_offspring, **extra))

    @classmethod
    def custom(cls, n_law, c_law, q_law, max_offspring=DEFAULT_MAX_OFFSPRING):
        return cls(Kind.CUSTOM, (), n_law, c_law, q_law, max_offspring)

    def param(self, name):
        p = dict(_DEFAULT_PARAMS[self.kind])
        p.update(dict(self.params))
        return p[name]

    @property
    def all_params(self):
        p = dict(_DEFAULT_PARAMS[self.kind])
        p.update(dict(self.params))
        return p

    @property
    def label(self):
        return self.kind.value

    # -- analytic facts used by diagnostics ---------------------------------

    def offspring_law(self):
        k = self.kind
        if k in (Kind.QUICKSORT, Kind.FIND):
            return Law.constant(2)
        if k == Kind.ISING:
            d = self.param("mean_degree")
            return Law.constant(d) if self.param("offspring") == "fixed" else Law.poisson(d)
        if k == Kind.PAGERANK_LIKE:
            return Law.poisson(self.param("mean_offspring"))
        return self.n_law

    def weight_halfwidth(self):
        """Half-width of the PageRank-like weight law."""
        cap, lam = self.param("cap"), self.param("mean_offspring")
        return cap * min(1.0, 2.0 / lam) if lam > 0 else cap

    # -- serialization -------------------------------------------------------

    def to_text(self):
        """Serialize as ``key = value`` lines (see README for the grammar)."""
        lines = [f"kind = {self.kind.value}"]
        if self.kind == Kind.CUSTOM:
            lines += [f"n_law = {self.n_law.to_text()}",
                      f"c_law = {self.c_law.to_text()}",
                      f"q_law = {self.q_law.to_text()}"]
            if self.max_offspring != DEFAULT_MAX_OFFSPRING:
                lines.append(f"max_offspring = {self.max_offspring}")
        else:
            for key in sorted(_DEFAULT_PARAMS[self.kind]):
                val = self.param(key)
                if val is not None:
                    lines.append(f"{key} = {_fmt(val)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_mapping(cls, mapping):
        """Build a spec from parsed ``key -> string`` pairs."""
        mapping = {k.strip().lower(): str(v).strip() for k, v in mapping.items()}
        if "kind" not in mapping:
            raise ConfigError("branching spec needs a 'kind' key", key="kind")
        try:
            kind = Kind(mapping.pop("kind").lower())
        except ValueError:
            raise ConfigError(f"unknown branching kind", key="kind") from None
        if kind == Kind.CUSTOM:
            missing = [k for k in ("n_law", "c_law", "q_law") if k not in mapping]
            if missing:
                raise ConfigError(f"custom spec missing {missing[0]}", key=missing[0])
            laws = {}
            for k in ("n_law", "c_law", "q_law"):
                try:
                    laws[k] = Law.from_text(mapping.pop(k))
                except ConfigError as exc:
                    raise ConfigError(f"{k}: {exc}", key=k) from None
            cap = int(_num(mapping.pop("max_offspring", DEFAULT_MAX_OFFSPRING), "max_offspring"))
            _reject_extra(mapping)
            return cls.custom(laws["n_law"], laws["c_law"], laws["q_law"], cap)
        allowed = _DEFAULT_PARAMS[kind]
        params = {}
        for key, raw in mapping.items():
            if key not in allowed:
                raise ConfigError(f"unknown parameter {key!r} for {kind.value}", key=key)
            params[key] = raw if key == "offspring" else _num(raw, key)
        return cls(kind, _freeze(**params))

    @classmethod
    def from_text(cls, text):
        mapping = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, val = line.split("=", 1)
            mapping[key.strip()] = val.strip()
        return cls.from_mapping(mapping)


def _freeze(**kw):
    return tuple(sorted(kw.items()))


def _fmt(v):
    return repr(float(v)) if isinstance(v, (int, float)) and not isinstance(v, bool) else str(v)


def _num(raw, key):
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"parameter {key!r} must be numeric, got {raw!r}", key=key) from None


def _reject_extra(mapping):
    if mapping:
        key = sorted(mapping)[0]
        raise ConfigError(f"unknown parameter {key!r}", key=key)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    ok: bool
    messages: list

    def __bool__(self):
        return self.ok


def validate_spec(spec: BranchingVectorSpec) -> ValidationReport:
    """Check parameter ranges; failures are reported, never raised."""
    msgs = []
    k = spec.kind
    if k == Kind.ISING:
        beta = spec.param("beta")
        if not (isinstance(beta, (int, float)) and math.isfinite(beta)) or beta < 0:
            msgs.append("β must be ≥ 0 (beta)")
        if spec.param("mean_degree") < 0:
            msgs.append("mean_degree must be ≥ 0")
        if spec.param("offspring") not in ("poisson", "fixed"):
            msgs.append("offspring must be 'poisson' or 'fixed'")
        elif spec.param("offspring") == "fixed" and spec.param("mean_degree") != int(spec.param("mean_degree")):
            msgs.append("fixed offspring needs an integer mean_degree")
        if spec.param("field_spread") < 0:
            msgs.append("field_spread must be ≥ 0")
    elif k == Kind.PAGERANK_LIKE:
        cap = spec.param("cap")
        if not 0.0 < cap < 1.0:
            msgs.append("cap must lie in (0, 1)")
        if not spec.param("mean_offspring") > 0:
            msgs.append("mean_offspring must be > 0")
    elif k == Kind.CUSTOM:
        for name, law, integer in (("n_law", spec.n_law, True), ("c_law", spec.c_law, False),
                                   ("q_law", spec.q_law, False)):
            if law is None:
                msgs.append(f"{name} is required for custom specs")
            else:
                msgs += [f"{name}: {m}" for m in law.problems(integer=integer)]
        if spec.max_offspring < 1:
            msgs.append("max_offspring must be ≥ 1")
    for key, val in spec.params:
        if isinstance(val, float) and not math.isfinite(val):
            msgs.append(f"{key} must be finite")
    return ValidationReport(not msgs, msgs)


# ---------------------------------------------------------------------------
# realizations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BranchingRealization:
    q: float
    n: int
    c: tuple

    def __post_init__(self):
        if len(self.c) != self.n:
            raise ValueError("len(c) must equal n")


@dataclass
class BranchingBatch:
    """``size`` realizations in ragged layout: row ``i`` owns ``c[offsets[i]:offsets[i+1]]``."""

    q: np.ndarray
    n: np.ndarray
    c: np.ndarray

    @property
    def size(self):
        return self.q.shape[0]

    @property
    def offsets(self):
        off = np.zeros(self.size + 1, dtype=np.int64)
        np.cumsum(self.n, out=off[1:])
        return off

    @property
    def owner(self):
        """Row index of every flat weight entry."""
        return np.repeat(np.arange(self.size), self.n)

    def realization(self, i):
        off = self.offsets
        return BranchingRealization(float(self.q[i]), int(self.n[i]),
                                    tuple(float(x) for x in self.c[off[i]:off[i + 1]]))


def sample_branching_batch(spec: BranchingVectorSpec, size: int, rng) -> BranchingBatch:
    """Draw ``size`` i.i.d. realizations.

    Draw order per call (part of the reproducibility contract): offspring
    counts, then flat weights, then ``Q``.
    """
    k = spec.kind
    if k in (Kind.QUICKSORT, Kind.FIND):
        u = rng.random(size)
        n = np.full(size, 2, dtype=np.int64)
        c = np.empty(2 * size)
        c[0::2] = u
        c[1::2] = 1.0 - u
        if k == Kind.QUICKSORT:
            q = 2.0 * _xlogx(u) + 2.0 * _xlogx(1.0 - u) + 1.0
        else:
            q = np.ones(size)
        return BranchingBatch(q, n, c)
    if k == Kind.ISING:
        n = _offspring(spec, spec.offspring_law(), size, rng)
        c = np.full(int(n.sum()), math.tanh(spec.param("beta")))
        h, s = spec.param("field"), spec.param("field_spread")
        q = rng.uniform(h - s, h + s, size) if s > 0 else np.full(size, float(h))
        return BranchingBatch(q, n, c)
    if k == Kind.PAGERANK_LIKE:
        n = _offspring(spec, spec.offspring_law(), size, rng)
        a = spec.weight_halfwidth()
        c = rng.uniform(-a, a, int(n.sum()))
        q0 = spec.param("q")
        q = np.full(size, 1.0 - spec.param("cap") if q0 is None else float(q0))
        return BranchingBatch(q, n, c)
    n = _offspring(spec, spec.n_law, size, rng)
    c = spec.c_law.sample(rng, int(n.sum()))
    q = spec.q_law.sample(rng, size)
    return BranchingBatch(np.asarray(q, dtype=np.float64), n, np.asarray(c, dtype=np.float64))


def sample_branching_vector(spec: BranchingVectorSpec, rng) -> BranchingRealization:
    """Draw one fresh realization."""
    return sample_branching_batch(spec, 1, rng).realization(0)


def _xlogx(x):
    # x log x with the continuous extension 0 at x = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)


def _offspring(spec, law, size, rng):
    raw = law.sample(rng, size)
    if raw.size and (not np.all(np.isfinite(raw)) or np.any(raw < 0) or np.any(raw != np.floor(raw))):
        raise ConfigError("offspring law produced a value that is not a nonnegative integer")
    if raw.size and raw.max() > spec.max_offspring:
        idx = int(np.argmax(raw > spec.max_offspring))
        raise BudgetExceededError(
            f"offspring draw {int(raw[idx])} exceeds the cap {spec.max_offspring}",
            nodes=int(raw[idx]), index=idx)
    return raw.astype(np.int64)


def mean_offspring(spec: BranchingVectorSpec, trials: int, rng) -> float:
    """``E[N]``: exact for deterministic offspring, Monte Carlo otherwise."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    law = spec.offspring_law()
    if law.is_deterministic:
        return float(law.params[0])
    return float(_offspring(spec, law, trials, rng).mean())
