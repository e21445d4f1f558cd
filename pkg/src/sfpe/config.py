"""Experiment configuration documents.

A config is an INI-style file with sections ``[map]``, ``[branching]``,
``[init]``, ``[run]`` and ``[output]``; see the README for every key.  A
``preset`` key in ``[run]`` fills in ``[map]`` and ``[branching]``.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

from .branching import BranchingVectorSpec, Kind, Law, validate_spec
from .errors import ConfigError
from .maps import Family, SfpeMap
from .popdyn import InitialDistribution

PRESETS = {
    "quicksort": ({"family": "linear", "linear_zero_mean": "true"}, {"kind": "quicksort"}),
    "find": ({"family": "tree_sum"}, {"kind": "find"}),
    "free_entropy_beta0": ({"family": "free_entropy", "beta": "0.0"},
                           {"kind": "ising", "beta": "0.0", "field": "0.5", "field_spread": "0.5"}),
    "ising": ({"family": "free_entropy", "beta": "0.3"},
              {"kind": "ising", "beta": "0.3", "field": "0.2", "field_spread": "0.2"}),
    "pagerank_like": ({"family": "linear"}, {"kind": "pagerank_like"}),
}

_RUN_KEYS = {"preset", "k", "m", "m_grid", "replications", "oracle_size", "n", "p", "q", "seed",
             "threads", "max_nodes", "contraction_size", "trials"}
_OUTPUT_KEYS = {"directory", "pools"}
_SECTIONS = ("map", "branching", "init", "run", "output")


@dataclass
class ExperimentConfig:
    map: SfpeMap
    spec: BranchingVectorSpec
    init: InitialDistribution
    k: int
    m: int
    seed: int | None
    m_grid: list = field(default_factory=lambda: [100, 1000, 10000])
    replications: int = 20
    oracle_size: int = 100_000
    n: int = 1000
    p: float = 1.0
    q: float = math.inf
    threads: int = 1
    max_nodes: int = 10**7
    contraction_size: int | None = None
    trials: int = 200_000
    directory: str = "out"
    pools: str = "all"
    source: str = ""

    def to_text(self):
        """Canonical echo used in run metadata."""
        cp = configparser.ConfigParser(interpolation=None)
        cp["map"] = self.map.to_mapping()
        cp["branching"] = dict(line.split(" = ", 1) for line in self.spec.to_text().splitlines())
        cp["init"] = {"law": self.init.label}
        run = {"k": str(self.k), "m": str(self.m), "m_grid": ", ".join(map(str, self.m_grid)),
               "replications": str(self.replications), "oracle_size": str(self.oracle_size),
               "n": str(self.n), "p": repr(self.p), "q": repr(self.q), "seed": str(self.seed),
               "max_nodes": str(self.max_nodes), "trials": str(self.trials)}
        if self.contraction_size is not None:
            run["contraction_size"] = str(self.contraction_size)
        cp["run"] = run
        cp["output"] = {"directory": self.directory, "pools": self.pools}
        lines = []
        for sec in cp.sections():
            lines.append(f"[{sec}]")
            lines += [f"{k} = {v}" for k, v in cp[sec].items()]
            lines.append("")
        return "\n".join(lines)


def _int(sec, key, default=None, minimum=None):
    raw = sec.get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"missing required key {key!r}", key=key)
        return default
    try:
        val = int(raw)
    except ValueError:
        raise ConfigError(f"{key!r} must be an integer, got {raw!r}", key=key) from None
    if minimum is not None and val < minimum:
        raise ConfigError(f"{key!r} must be >= {minimum}", key=key)
    return val


def _float(sec, key, default):
    raw = sec.get(key)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key!r} must be numeric, got {raw!r}", key=key) from None


def parse_config(text: str, *, require_seed: bool = True) -> ExperimentConfig:
    """Parse and validate a config document."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    unknown = [sec for sec in cp.sections() if sec not in _SECTIONS]
    if unknown:
        raise ConfigError(f"unknown section [{unknown[0]}]", key=unknown[0])
    run = dict(cp["run"]) if cp.has_section("run") else {}
    extra = set(run) - _RUN_KEYS
    if extra:
        key = sorted(extra)[0]
        raise ConfigError(f"unknown [run] key {key!r}", key=key)
    map_sec = dict(cp["map"]) if cp.has_section("map") else None
    br_sec = dict(cp["branching"]) if cp.has_section("branching") else None
    if "preset" in run:
        try:
            pm, pb = PRESETS[run["preset"].strip().lower()]
        except KeyError:
            raise ConfigError(f"unknown preset {run['preset']!r}", key="preset") from None
        map_sec = {**pm, **(map_sec or {})}
        br_sec = {**pb, **(br_sec or {})}
    if map_sec is None:
        raise ConfigError("missing [map] section", key="map")
    if br_sec is None:
        raise ConfigError("missing [branching] section", key="branching")
    mp = SfpeMap.from_mapping(map_sec)
    spec = BranchingVectorSpec.from_mapping(br_sec)
    report = validate_spec(spec)
    if not report.ok:
        msg = report.messages[0]
        key = "beta" if "beta" in msg or "β" in msg else msg.split()[0]
        raise ConfigError(f"invalid [branching]: {msg}", key=key)
    if mp.family == Family.FREE_ENTROPY and spec.kind == Kind.ISING \
            and not math.isclose(mp.beta, spec.param("beta")):
        raise ConfigError("[map] beta and [branching] beta disagree", key="beta")

    init = InitialDistribution()
    if cp.has_section("init"):
        sec = dict(cp["init"])
        if set(sec) - {"law"}:
            key = sorted(set(sec) - {"law"})[0]
            raise ConfigError(f"unknown [init] key {key!r}", key=key)
        if "law" in sec:
            try:
                init = InitialDistribution(Law.from_text(sec["law"]))
            except ConfigError as exc:
                raise ConfigError(f"[init] law: {exc}", key="law") from None
            probs = init.law.problems()
            if probs:
                raise ConfigError(f"[init] law: {probs[0]}", key="law")

    seed = run.get("seed")
    if seed is None:
        if require_seed:
            raise ConfigError("missing required key 'seed' (use --entropy to draw one)", key="seed")
    else:
        seed = _int(run, "seed", minimum=0)
    m_grid = [100, 1000, 10000]
    if "m_grid" in run:
        try:
            m_grid = [int(x) for x in run["m_grid"].replace(",", " ").split()]
        except ValueError:
            raise ConfigError("'m_grid' must be a list of integers", key="m_grid") from None
        if not m_grid or min(m_grid) < 1:
            raise ConfigError("'m_grid' entries must be >= 1", key="m_grid")
    p = _float(run, "p", 1.0)
    if not p >= 1:
        raise ConfigError("'p' must be >= 1", key="p")
    q = _float(run, "q", math.inf)
    if not q > p or q == 2 * p:
        raise ConfigError("'q' must exceed p and differ from 2p", key="q")
    out = dict(cp["output"]) if cp.has_section("output") else {}
    extra = set(out) - _OUTPUT_KEYS
    if extra:
        key = sorted(extra)[0]
        raise ConfigError(f"unknown [output] key {key!r}", key=key)
    pools = out.get("pools", "all").strip().lower()
    if pools not in ("all", "last"):
        raise ConfigError("'pools' must be 'all' or 'last'", key="pools")
    cs = run.get("contraction_size")
    return ExperimentConfig(
        map=mp, spec=spec, init=init,
        k=_int(run, "k", 5, minimum=0), m=_int(run, "m", 1000, minimum=1), seed=seed,
        m_grid=m_grid, replications=_int(run, "replications", 20, minimum=1),
        oracle_size=_int(run, "oracle_size", 100_000, minimum=1), n=_int(run, "n", 1000, minimum=0),
        p=p, q=q, threads=_int(run, "threads", 1, minimum=1),
        max_nodes=_int(run, "max_nodes", 10**7, minimum=1),
        contraction_size=None if cs is None else _int(run, "contraction_size", minimum=1),
        trials=_int(run, "trials", 200_000, minimum=1),
        directory=out.get("directory", "out"), pools=pools, source=text)
