"""Effect statistics ``s_ki(x, v)`` and the evaluation function of an actor.

Every effect is a sum over the actor's outgoing ties, ``s_ki = sum_j x_ij w_ij``,
except ``outdegree_activity`` which is ``x_i+^2``. Covariate effects use a
dyadic weight ``w_ij = g(v_i, v_j)``; structural effects use network
quantities (reciprocation, shared partners, degrees).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .exceptions import ConfigurationError
from .network import ActorCovariate, DirectedNetwork, covariate_values, shared_partner_matrix

STRUCTURAL_KINDS = (
    "outdegree",
    "reciprocity",
    "gwesp",
    "reciprocity_gwesp",
    "indegree_popularity",
    "outdegree_popularity",
    "outdegree_activity",
)

COVARIATE_KINDS = (
    "cov_ego",
    "cov_alter",
    "cov_alter_sq",
    "cov_ego_sq",
    "cov_diff_sq",
    "cov_ego_x_alter",
    "cov_same",
)

GWESP_KINDS = ("gwesp", "reciprocity_gwesp")

SHORT_NAMES = {
    "density": "outdegree",
    "recip": "reciprocity",
    "gwesp": "gwesp",
    "recipGwesp": "reciprocity_gwesp",
    "inPop": "indegree_popularity",
    "outPop": "outdegree_popularity",
    "outAct": "outdegree_activity",
    "egoX": "cov_ego",
    "altX": "cov_alter",
    "altSqX": "cov_alter_sq",
    "egoSqX": "cov_ego_sq",
    "diffSqX": "cov_diff_sq",
    "egoXaltX": "cov_ego_x_alter",
    "sameX": "cov_same",
}
KIND_TO_SHORT = {v: k for k, v in SHORT_NAMES.items()}

# the five effects of the quadratic selection function, in theta order
QUADRATIC_SHORT_NAMES = ("diffSqX", "altSqX", "altX", "egoX", "egoSqX")

DEFAULT_GWESP_ALPHA = math.log(2.0)


@dataclass(frozen=True)
class EffectSpec:
    kind: str
    covariate: Optional[str] = None
    alpha: float = DEFAULT_GWESP_ALPHA

    def __post_init__(self):
        kind = SHORT_NAMES.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in STRUCTURAL_KINDS:
            if self.covariate is not None:
                raise ConfigurationError(f"structural effect {kind!r} takes no covariate")
        elif kind in COVARIATE_KINDS:
            if not self.covariate:
                raise ConfigurationError(f"covariate effect {kind!r} needs a covariate name")
        else:
            raise ConfigurationError(f"unknown effect kind {self.kind!r}")
        if kind in GWESP_KINDS and not self.alpha > 0:
            raise ConfigurationError("gwesp alpha must be positive")

    @property
    def short_name(self) -> str:
        return KIND_TO_SHORT[self.kind]

    @property
    def name(self) -> str:
        """Display name, e.g. ``density``, ``gwesp``, ``diffSqX(grades)``."""
        if self.covariate is not None:
            return f"{self.short_name}({self.covariate})"
        return self.short_name


@dataclass(frozen=True)
class ParameterVector:
    effects: tuple
    beta: tuple

    def __post_init__(self):
        effects = tuple(self.effects)
        beta = tuple(float(b) for b in self.beta)
        if len(effects) != len(beta):
            raise ConfigurationError(f"{len(effects)} effects but {len(beta)} coefficients")
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "beta", beta)

    @property
    def names(self) -> list:
        return [e.name for e in self.effects]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.beta, dtype=float)


def quadratic_effects(covariate: str) -> tuple:
    """The five effects ``diffSqX, altSqX, altX, egoX, egoSqX`` on one covariate."""
    return tuple(EffectSpec(s, covariate) for s in QUADRATIC_SHORT_NAMES)


def gwesp_weight(sp, alpha: float = DEFAULT_GWESP_ALPHA):
    """Per-tie gwesp weight ``e^a (1 - (1 - e^-a)^sp)``."""
    sp = np.asarray(sp, dtype=float)
    return np.exp(alpha) * (1.0 - (1.0 - np.exp(-alpha)) ** sp)


def dyadic_covariate_weights(kind: str, v: np.ndarray) -> np.ndarray:
    """Matrix ``g(v_i, v_j)`` for a covariate effect kind."""
    vi = v[:, None]
    vj = v[None, :]
    if kind == "cov_ego":
        w = np.broadcast_to(vi, (v.size, v.size))
    elif kind == "cov_alter":
        w = np.broadcast_to(vj, (v.size, v.size))
    elif kind == "cov_alter_sq":
        w = np.broadcast_to(vj**2, (v.size, v.size))
    elif kind == "cov_ego_sq":
        w = np.broadcast_to(vi**2, (v.size, v.size))
    elif kind == "cov_diff_sq":
        w = (vi - vj) ** 2
    elif kind == "cov_ego_x_alter":
        w = vi * vj
    elif kind == "cov_same":
        w = (vi == vj).astype(float)
    else:
        raise ConfigurationError(f"{kind!r} is not a covariate effect")
    return np.array(w, dtype=float)


def actor_statistics(spec: EffectSpec, net, covariates: Mapping[str, ActorCovariate]):
    """``s_ki(x, v)`` for every actor ``i`` as a vector.

    ``net`` may be a :class:`DirectedNetwork` or a raw 0/1 adjacency array.
    """
    ties = net.ties if isinstance(net, DirectedNetwork) else np.asarray(net)
    x = ties.astype(float)
    kind = spec.kind
    if kind == "outdegree":
        return x.sum(axis=1)
    if kind == "reciprocity":
        return (x * x.T).sum(axis=1)
    if kind in GWESP_KINDS:
        w = gwesp_weight(shared_partner_matrix(ties), spec.alpha)
        if kind == "reciprocity_gwesp":
            return (x * x.T * w).sum(axis=1)
        return (x * w).sum(axis=1)
    if kind == "indegree_popularity":
        return x @ x.sum(axis=0)
    if kind == "outdegree_popularity":
        return x @ x.sum(axis=1)
    if kind == "outdegree_activity":
        return x.sum(axis=1) ** 2
    v = covariate_values(covariates, spec.covariate)
    if v.shape[0] != x.shape[0]:
        raise ConfigurationError(f"covariate {spec.covariate!r} has wrong length")
    return (x * dyadic_covariate_weights(kind, v)).sum(axis=1)


def statistic(spec: EffectSpec, net: DirectedNetwork, covariates, i: int) -> float:
    """Effect statistic of one actor."""
    return float(actor_statistics(spec, net, covariates)[i])


def network_statistic(spec: EffectSpec, net: DirectedNetwork, covariates) -> float:
    """Sum of the effect statistic over all actors."""
    return float(actor_statistics(spec, net, covariates).sum())


def network_statistics(effects: Sequence[EffectSpec], net, covariates) -> np.ndarray:
    """Whole-network totals ``sum_i s_ki`` for a list of effects."""
    return np.array([actor_statistics(e, net, covariates).sum() for e in effects])


def statistic_vector(effects: Sequence[EffectSpec], net, covariates, i: int) -> np.ndarray:
    return np.array([statistic(e, net, covariates, i) for e in effects])


def evaluation_function(params: ParameterVector, net: DirectedNetwork, covariates, i: int) -> float:
    """``f_i(x, v, beta) = sum_k beta_k s_ki(x, v)``."""
    return float(
        sum(b * statistic(e, net, covariates, i) for e, b in zip(params.effects, params.beta))
    )


class ChangeScorer:
    """Incremental change scores ``f_i(x^{+-ij}) - f_i(x)`` for one parameter vector.

    The covariate part of every effect is folded into a single dyadic
    matrix at construction; per-call work is O(n) plus O(n^2) when gwesp
    effects are present.
    """

    def __init__(self, params: ParameterVector, covariates, n: int):
        self.n = n
        self.struct = dict.fromkeys(STRUCTURAL_KINDS, 0.0)
        self.alpha = {}
        self.dyadic = np.zeros((n, n))
        for spec, b in zip(params.effects, params.beta):
            if spec.kind in STRUCTURAL_KINDS:
                self.struct[spec.kind] += b
                if spec.kind in GWESP_KINDS:
                    if spec.kind in self.alpha and self.alpha[spec.kind] != spec.alpha:
                        raise ConfigurationError(f"two {spec.kind} effects with different alpha")
                    self.alpha[spec.kind] = spec.alpha
            else:
                v = covariate_values(covariates, spec.covariate)
                if v.shape[0] != n:
                    raise ConfigurationError(f"covariate {spec.covariate!r} has wrong length")
                self.dyadic += b * dyadic_covariate_weights(spec.kind, v)

    def scores(self, x: np.ndarray, i: int, indeg=None, outdeg=None) -> np.ndarray:
        """Change scores for actor ``i`` on adjacency ``x`` (entry ``i`` is 0)."""
        st = self.struct
        xi = x[i].astype(float)
        sign = 1.0 - 2.0 * xi  # +1 creates, -1 removes
        adding = xi == 0
        if outdeg is None:
            outdeg = x.sum(axis=1)
        if indeg is None:
            indeg = x.sum(axis=0)
        delta = st["outdegree"] + self.dyadic[i]
        if st["reciprocity"]:
            delta = delta + st["reciprocity"] * x[:, i]
        if st["outdegree_popularity"]:
            delta = delta + st["outdegree_popularity"] * outdeg
        delta = delta * sign
        if st["indegree_popularity"]:
            delta = delta + st["indegree_popularity"] * np.where(adding, indeg + 1, -indeg)
        if st["outdegree_activity"]:
            delta = delta + st["outdegree_activity"] * (2.0 * outdeg[i] * sign + 1.0)
        for kind in GWESP_KINDS:
            b = st[kind]
            if not b:
                continue
            a = self.alpha[kind]
            xf = x.astype(float)
            sp_i = xi @ xf  # sp_ik for all k
            sp_i[i] = 0
            w0 = gwesp_weight(sp_i, a)
            wp = gwesp_weight(sp_i + 1, a) - w0
            wm = gwesp_weight(np.maximum(sp_i - 1, 0), a) - w0
            mask = xi if kind == "gwesp" else xi * xf[:, i]
            # toggling x_ij changes sp_ik by +-1 for every k with x_jk = 1
            via_plus = xf @ (mask * wp)
            via_minus = xf @ (mask * wm)
            own = w0 if kind == "gwesp" else w0 * xf[:, i]
            delta = delta + b * (sign * own + np.where(adding, via_plus, via_minus))
        delta = np.asarray(delta, dtype=float).copy()
        delta[i] = 0.0
        return delta


def change_scores(params: ParameterVector, net: DirectedNetwork, covariates, i: int) -> np.ndarray:
    """Vector over ``j`` of ``f_i(x^{+-ij}) - f_i(x)``; the entry ``j = i`` is 0."""
    return ChangeScorer(params, covariates, net.n).scores(net.ties.astype(np.int64), i)
