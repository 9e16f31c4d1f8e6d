"""Simulation-based goodness of fit on auxiliary network statistics.

Four families are available: cumulative indegree and outdegree
distributions (actors with degree <= k for k = 0..8), the geodesic
distribution (ordered pairs at distance 1..5, an overflow bucket for
distance >= 6, and unreachable pairs) and the 16-class directed triad
census. The observed vector, summed over periods, is compared with the
distribution of the same vector for networks simulated from the fitted
model through a Mahalanobis distance.
"""

from __future__ import annotations

import csv
import itertools
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .effects import ParameterVector
from .estimation import MoMResult
from .network import DirectedNetwork, NetworkPanel
from .simulation import CompiledModel, replicate_rng, run_period

FAMILIES = ("indegree_distribution", "outdegree_distribution", "geodesic_distribution",
            "triad_census")

DEGREE_MAX = 8
GEODESIC_MAX = 5
PINV_RCOND = 1e-8
MIN_SIMULATIONS = 20

TRIAD_TYPES = ("003", "012", "102", "021D", "021U", "021C", "111D", "111U", "030T", "030C",
               "201", "120D", "120U", "120C", "210", "300")
# classes with at least one two-path in which every two-path is closed
TRANSITIVE_TYPES = ("030T", "120D", "120U", "300")


def _classify(code: int) -> str:
    # bits: ab, ba, ac, ca, bc, cb
    a, b, c = 0, 1, 2
    bits = [(a, b), (b, a), (a, c), (c, a), (b, c), (c, b)]
    t = {bits[k] for k in range(6) if code >> k & 1}
    pairs = [(a, b), (a, c), (b, c)]
    mutual = [p for p in pairs if p in t and p[::-1] in t]
    asym = [p if p in t else p[::-1] for p in pairs if (p in t) != (p[::-1] in t)]
    m, s = len(mutual), len(asym)
    out = {v: sum(1 for e in t if e[0] == v) for v in (a, b, c)}
    inn = {v: sum(1 for e in t if e[1] == v) for v in (a, b, c)}
    if (m, s) == (0, 0):
        return "003"
    if (m, s) == (0, 1):
        return "012"
    if (m, s) == (1, 0):
        return "102"
    if (m, s) == (0, 2):
        if max(out.values()) == 2:
            return "021D"
        if max(inn.values()) == 2:
            return "021U"
        return "021C"
    if (m, s) == (1, 1):
        third = ({a, b, c} - set(mutual[0])).pop()
        return "111D" if asym[0][0] == third else "111U"
    if (m, s) == (0, 3):
        return "030T" if max(out.values()) == 2 else "030C"
    if (m, s) == (2, 0):
        return "201"
    if (m, s) == (1, 2):
        third = ({a, b, c} - set(mutual[0])).pop()
        if all(e[0] == third for e in asym):
            return "120D"
        if all(e[1] == third for e in asym):
            return "120U"
        return "120C"
    if (m, s) == (2, 1):
        return "210"
    return "300"


TRIAD_LOOKUP = np.array([TRIAD_TYPES.index(_classify(code)) for code in range(64)])


@lru_cache(maxsize=8)
def _triples(n: int):
    idx = np.array(list(itertools.combinations(range(n), 3)), dtype=np.intp).reshape(-1, 3)
    return idx[:, 0], idx[:, 1], idx[:, 2]


def triad_census(ties) -> np.ndarray:
    """Counts of the 16 directed triad classes, in the order of ``TRIAD_TYPES``."""
    x = np.asarray(ties, dtype=np.int64)
    i, j, k = _triples(x.shape[0])
    code = (x[i, j] + 2 * x[j, i] + 4 * x[i, k] + 8 * x[k, i] + 16 * x[j, k] + 32 * x[k, j])
    return np.bincount(TRIAD_LOOKUP[code], minlength=16)


def transitive_summary(census) -> dict:
    """Counts of the transitive triad classes and their total."""
    census = np.asarray(census)
    out = {t: float(census[TRIAD_TYPES.index(t)]) for t in TRANSITIVE_TYPES}
    out["total"] = float(sum(out.values()))
    return out


def _cumulative_degrees(deg) -> np.ndarray:
    counts = np.bincount(np.minimum(deg, DEGREE_MAX + 1), minlength=DEGREE_MAX + 2)
    return np.cumsum(counts)[: DEGREE_MAX + 1]


def geodesic_distribution(ties) -> np.ndarray:
    """Ordered pairs at distance 1..5, at distance >= 6, and unreachable."""
    x = np.asarray(ties, dtype=float)
    d = shortest_path(x, method="D", directed=True, unweighted=True)
    off = d[~np.eye(x.shape[0], dtype=bool)]
    finite = off[np.isfinite(off)].astype(np.int64)
    counts = np.bincount(np.minimum(finite, GEODESIC_MAX + 1), minlength=GEODESIC_MAX + 2)
    return np.concatenate([counts[1:], [np.count_nonzero(~np.isfinite(off))]])


def statistic_labels(family: str) -> list:
    if family in ("indegree_distribution", "outdegree_distribution"):
        return [f"<={k}" for k in range(DEGREE_MAX + 1)]
    if family == "geodesic_distribution":
        return [str(k) for k in range(1, GEODESIC_MAX + 1)] + [f">={GEODESIC_MAX + 1}", "inf"]
    if family == "triad_census":
        return list(TRIAD_TYPES)
    raise ValueError(f"unknown GOF family {family!r}; choose from {FAMILIES}")


def auxiliary_statistics(net, family: str) -> np.ndarray:
    """Auxiliary statistic vector of one network for a GOF family."""
    ties = net.ties if isinstance(net, DirectedNetwork) else np.asarray(net)
    x = np.asarray(ties, dtype=np.int64)
    if family == "indegree_distribution":
        return _cumulative_degrees(x.sum(axis=0)).astype(float)
    if family == "outdegree_distribution":
        return _cumulative_degrees(x.sum(axis=1)).astype(float)
    if family == "geodesic_distribution":
        return geodesic_distribution(x).astype(float)
    if family == "triad_census":
        return triad_census(x).astype(float)
    raise ValueError(f"unknown GOF family {family!r}; choose from {FAMILIES}")


@dataclass
class MahalanobisResult:
    distance: float
    simulated_distances: np.ndarray
    p_value: float
    kept: np.ndarray


def mahalanobis_test(observed, simulated) -> MahalanobisResult:
    """Mahalanobis distance of ``observed`` from the simulated mean and its p-value.

    Zero-variance coordinates are dropped with a warning. The inverse
    covariance is a pseudo-inverse with relative eigenvalue cutoff 1e-8.
    The p-value counts the observation in the reference set:
    ``(1 + #{d_r >= d_obs}) / (n_sim + 1)``.
    """
    observed = np.asarray(observed, dtype=float)
    simulated = np.asarray(simulated, dtype=float)
    if simulated.ndim != 2 or simulated.shape[1] != observed.size:
        raise ValueError("simulated must have shape (runs, len(observed))")
    var = simulated.var(axis=0)
    scale = np.maximum(np.abs(simulated).max(axis=0), 1.0)
    kept = np.flatnonzero(var > (1e-12 * scale) ** 2)
    if kept.size < observed.size:
        warnings.warn(f"dropping {observed.size - kept.size} zero-variance statistic(s)",
                      RuntimeWarning, stacklevel=2)
    n_sim = simulated.shape[0]
    if kept.size == 0:
        d_obs = 0.0 if np.allclose(observed, simulated.mean(axis=0)) else np.inf
        return MahalanobisResult(d_obs, np.zeros(n_sim), 1.0 if d_obs == 0 else 1 / (n_sim + 1),
                                 kept)
    sim = simulated[:, kept]
    mean = sim.mean(axis=0)
    cov = np.atleast_2d(np.cov(sim, rowvar=False))
    prec = np.linalg.pinv(cov, rcond=PINV_RCOND, hermitian=True)
    dev = sim - mean
    d_sim = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", dev, prec, dev), 0.0))
    do = observed[kept] - mean
    d_obs = float(np.sqrt(max(do @ prec @ do, 0.0)))
    # relative slack so that the observation equal to a simulated vector counts as a tie
    ties = d_sim >= d_obs * (1 - 1e-12)
    p = (1.0 + np.count_nonzero(ties)) / (n_sim + 1.0)
    return MahalanobisResult(d_obs, d_sim, float(p), kept)


@dataclass
class GofReport:
    family: str
    observed: np.ndarray
    simulated: np.ndarray
    mahalanobis_observed: float
    p_value: float
    labels: list = field(default_factory=list)
    dropped: list = field(default_factory=list)

    def write_table(self, path, delimiter=","):
        """Violin-plot table ``statistic_index, run, value``; the observation has run ``observed``."""
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, delimiter=delimiter)
            w.writerow(["statistic_index", "run", "value"])
            for s, v in enumerate(self.observed):
                w.writerow([s, "observed", repr(float(v))])
            for r, row in enumerate(self.simulated):
                for s, v in enumerate(row):
                    w.writerow([s, r, repr(float(v))])

    def to_dict(self) -> dict:
        out = {
            "family": self.family,
            "labels": self.labels,
            "observed": self.observed.tolist(),
            "simulated_mean": self.simulated.mean(axis=0).tolist(),
            "mahalanobis_observed": self.mahalanobis_observed,
            "p_value": self.p_value,
            "n_sim": int(self.simulated.shape[0]),
            "dropped": self.dropped,
        }
        if self.family == "triad_census":
            out["transitive_observed"] = transitive_summary(self.observed)
        return out


def _simulate_aux(panel, fitted, families, n_sim, seed):
    k = len(fitted.effects)
    model = CompiledModel(ParameterVector(fitted.effects, fitted.theta[:k]), panel.covariates,
                          panel.n)
    rates = fitted.theta[k:]
    out = {f: np.zeros((n_sim, len(statistic_labels(f)))) for f in families}
    starts = [w.copy_ties() for w in panel.waves[:-1]]
    for r in range(n_sim):
        rng = replicate_rng(seed, r)
        for m, x0 in enumerate(starts):
            x = x0.copy()
            run_period(x, model, max(rates[m], 0.0), rng)
            for f in families:
                out[f][r] += auxiliary_statistics(x, f)
    return out


def gof_all(panel: NetworkPanel, fitted: MoMResult, families=FAMILIES, n_sim: int = 500,
            seed=None) -> dict:
    """GOF reports for several families from one shared batch of simulations."""
    families = tuple(families)
    for f in families:
        statistic_labels(f)
    if n_sim < MIN_SIMULATIONS:
        raise ValueError(f"n_sim must be at least {MIN_SIMULATIONS}")
    if fitted.n_periods != panel.n_periods:
        raise ValueError("fitted result and panel have different numbers of periods")
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2**63))
    sims = _simulate_aux(panel, fitted, families, n_sim, seed)
    reports = {}
    for f in families:
        obs = sum(auxiliary_statistics(w, f) for w in panel.waves[1:])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = mahalanobis_test(obs, sims[f])
        labels = statistic_labels(f)
        dropped = [labels[s] for s in range(len(labels)) if s not in set(res.kept)]
        if dropped:
            warnings.warn(f"{f}: dropped zero-variance statistics {dropped}", RuntimeWarning,
                          stacklevel=2)
        reports[f] = GofReport(f, obs, sims[f], res.distance, res.p_value, labels, dropped)
    return reports


def gof(panel: NetworkPanel, fitted: MoMResult, family: str, n_sim: int = 500,
        seed=None) -> GofReport:
    """Mahalanobis GOF for one auxiliary statistic family.

    Simulates ``n_sim`` end-of-period networks per period from the fitted
    model, each starting at the preceding observed wave, and sums the
    auxiliary statistics over periods.
    """
    return gof_all(panel, fitted, (family,), n_sim, seed)[family]
