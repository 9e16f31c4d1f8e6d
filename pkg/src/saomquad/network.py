"""Directed binary networks, actor covariates and multi-wave panels."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np


class DirectedNetwork:
    """Binary directed network on ``n`` actors without self-ties.

    The adjacency matrix is stored densely as ``uint8`` and is read-only;
    operations such as :func:`toggle` return new networks.

    Parameters
    ----------
    ties : array_like, shape (n, n)
        0/1 tie indicators, ``ties[i, j] == 1`` for a tie ``i -> j``.
    """

    __slots__ = ("_ties",)

    def __init__(self, ties):
        arr = np.array(ties, dtype=np.int64, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"adjacency matrix must be square, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise ValueError("a network needs at least 2 actors")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("tie indicators must be 0 or 1")
        diag = np.flatnonzero(np.diag(arr))
        if diag.size:
            raise ValueError(f"self-ties are not allowed (actor {int(diag[0])})")
        ties = arr.astype(np.uint8)
        ties.flags.writeable = False
        self._ties = ties

    @classmethod
    def empty(cls, n: int) -> "DirectedNetwork":
        return cls(np.zeros((n, n), dtype=np.uint8))

    @classmethod
    def complete(cls, n: int) -> "DirectedNetwork":
        return cls(1 - np.eye(n, dtype=np.uint8))

    @classmethod
    def random(cls, n: int, density: float, rng=None) -> "DirectedNetwork":
        """Bernoulli random digraph with independent ties of probability ``density``."""
        rng = np.random.default_rng(rng)
        ties = (rng.random((n, n)) < density).astype(np.uint8)
        np.fill_diagonal(ties, 0)
        return cls(ties)

    @classmethod
    def from_edges(cls, n: int, edges) -> "DirectedNetwork":
        ties = np.zeros((n, n), dtype=np.uint8)
        for i, j in edges:
            ties[i, j] = 1
        return cls(ties)

    @property
    def n(self) -> int:
        return self._ties.shape[0]

    @property
    def ties(self) -> np.ndarray:
        return self._ties

    @property
    def n_ties(self) -> int:
        return int(self._ties.sum())

    def copy_ties(self) -> np.ndarray:
        """Writable ``int64`` copy of the adjacency matrix for private mutation."""
        return self._ties.astype(np.int64)

    def __getitem__(self, ij):
        return int(self._ties[ij])

    def __eq__(self, other):
        if not isinstance(other, DirectedNetwork):
            return NotImplemented
        return self._ties.shape == other._ties.shape and np.array_equal(self._ties, other._ties)

    def __hash__(self):
        return hash((self.n, self._ties.tobytes()))

    def __repr__(self):
        return f"DirectedNetwork(n={self.n}, ties={self.n_ties})"


def _check_actor(net: DirectedNetwork, k) -> int:
    k = int(k)
    if not 0 <= k < net.n:
        raise IndexError(f"actor index {k} out of range for n={net.n}")
    return k


def toggle(net: DirectedNetwork, i: int, j: int) -> DirectedNetwork:
    """Return the network with tie ``i -> j`` flipped; ``i == j`` leaves it unchanged."""
    i = _check_actor(net, i)
    j = _check_actor(net, j)
    if i == j:
        return net
    ties = net.ties.copy()
    ties[i, j] = 1 - ties[i, j]
    return DirectedNetwork(ties)


def degrees(net: DirectedNetwork) -> tuple[np.ndarray, np.ndarray]:
    """Out- and indegrees as integer arrays."""
    x = net.ties.astype(np.int64)
    return x.sum(axis=1), x.sum(axis=0)


def shared_partner_matrix(ties) -> np.ndarray:
    """Matrix of two-path counts ``sp[i, j] = sum_h x_ih x_hj`` with zero diagonal."""
    x = np.asarray(ties, dtype=np.int64)
    sp = x @ x
    np.fill_diagonal(sp, 0)
    return sp


def shared_partners(net: DirectedNetwork, i: int, j: int) -> int:
    i = _check_actor(net, i)
    j = _check_actor(net, j)
    if i == j:
        return 0
    x = net.ties
    return int(np.dot(x[i].astype(np.int64), x[:, j]))


def update_shared_partners(sp: np.ndarray, ties: np.ndarray, i: int, j: int) -> None:
    """Update ``sp`` in place for a toggle of ``i -> j`` that was already applied to ``ties``.

    ``ties[i, j]`` must hold the new value.
    """
    if i == j:
        return
    delta = 1 if ties[i, j] else -1
    # x_ij enters sp[i, k] through h = j and sp[h, j] through k = i
    sp[i, :] += delta * ties[j, :]
    sp[:, j] += delta * ties[:, i]
    sp[i, i] = 0
    sp[j, j] = 0


def hamming(a: DirectedNetwork, b: DirectedNetwork) -> int:
    """Number of tie variables that differ between two networks."""
    if a.n != b.n:
        raise ValueError("networks have different sizes")
    return int(np.count_nonzero(a.ties != b.ties))


@dataclass(frozen=True)
class CovariateRange:
    """Analysis-scale support ``[lower, upper]`` and mean of a covariate."""

    lower: float
    upper: float
    mean: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise ValueError("covariate range must be finite")
        if not self.lower < self.upper:
            raise ValueError(f"empty covariate range [{self.lower}, {self.upper}]")
        if not self.lower <= self.mean <= self.upper:
            raise ValueError("covariate mean must lie inside the range")

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True, eq=False)
class ActorCovariate:
    """Numeric actor attribute on the analysis scale.

    ``values`` are stored after optional centering; ``offset`` is the
    subtracted raw mean (0 when not centered), so raw values are
    ``values + offset`` up to rounding; ``raw`` keeps them exactly when the
    covariate was built by :meth:`from_values`. ``mean`` is the
    analysis-scale mean.
    """

    values: np.ndarray
    centered: bool
    mean: float
    range_min: float
    range_max: float
    offset: float = 0.0
    raw: Optional[np.ndarray] = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("covariate values must be one-dimensional")
        if not np.isfinite(vals).all():
            raise ValueError("covariate values must be finite")
        if not self.range_min < self.range_max:
            raise ValueError("constant covariate: range_min must be below range_max")
        if vals.min() < self.range_min or vals.max() > self.range_max:
            raise ValueError(
                f"covariate values span [{vals.min()}, {vals.max()}], outside the declared "
                f"range [{self.range_min}, {self.range_max}]"
            )
        if self.centered and abs(vals.mean()) > 1e-12 * max(1.0, np.abs(vals).max()):
            raise ValueError("centered covariate does not have mean 0")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_values(cls, values, centered=False, range_min=None, range_max=None):
        """Build a covariate from raw values.

        A declared range is given on the raw scale and shifted together with
        the values when centering.
        """
        raw = np.asarray(values, dtype=float)
        offset = float(raw.mean()) if centered else 0.0
        lo = float(raw.min()) if range_min is None else float(range_min)
        hi = float(raw.max()) if range_max is None else float(range_max)
        vals = raw - offset
        if centered:
            vals = vals - vals.mean()
        return cls(
            values=vals,
            centered=bool(centered),
            mean=0.0 if centered else float(raw.mean()),
            range_min=lo - offset,
            range_max=hi - offset,
            offset=offset,
            raw=raw.copy(),
        )

    @property
    def raw_values(self) -> np.ndarray:
        return self.raw if self.raw is not None else self.values + self.offset

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def support(self) -> CovariateRange:
        return CovariateRange(self.range_min, self.range_max, self.mean)

    def __eq__(self, other):
        if not isinstance(other, ActorCovariate):
            return NotImplemented
        return (
            np.array_equal(self.values, other.values)
            and self.centered == other.centered
            and self.mean == other.mean
            and self.range_min == other.range_min
            and self.range_max == other.range_max
        )


@dataclass(frozen=True, eq=False)
class NetworkPanel:
    """Ordered waves of one network on a fixed actor set, with covariates."""

    waves: tuple
    covariates: Mapping[str, ActorCovariate] = field(default_factory=dict)
    actor_labels: tuple = ()

    def __post_init__(self):
        waves = tuple(self.waves)
        if not waves:
            raise ValueError("a panel needs at least one wave")
        n = waves[0].n
        for m, w in enumerate(waves):
            if w.n != n:
                raise ValueError(f"wave {m + 1} has {w.n} actors, expected {n}")
        labels = tuple(self.actor_labels) or tuple(str(k + 1) for k in range(n))
        if len(labels) != n:
            raise ValueError(f"{len(labels)} actor labels for {n} actors")
        if len(set(labels)) != n:
            raise ValueError("actor labels must be unique")
        for name, cov in self.covariates.items():
            if cov.n != n:
                raise ValueError(f"covariate {name!r} has {cov.n} values for {n} actors")
        object.__setattr__(self, "waves", waves)
        object.__setattr__(self, "actor_labels", labels)
        object.__setattr__(self, "covariates", dict(self.covariates))

    @property
    def n(self) -> int:
        return self.waves[0].n

    @property
    def n_waves(self) -> int:
        return len(self.waves)

    @property
    def n_periods(self) -> int:
        return len(self.waves) - 1

    def __eq__(self, other):
        if not isinstance(other, NetworkPanel):
            return NotImplemented
        return (
            self.waves == other.waves
            and self.actor_labels == other.actor_labels
            and self.covariates.keys() == other.covariates.keys()
            and all(self.covariates[k] == other.covariates[k] for k in self.covariates)
        )


def covariate_values(covariates: Mapping[str, ActorCovariate], name: str) -> np.ndarray:
    from .exceptions import ConfigurationError

    try:
        return covariates[name].values
    except KeyError:
        raise ConfigurationError(f"unknown covariate {name!r}") from None


__all__: Sequence[str] = [
    "DirectedNetwork",
    "ActorCovariate",
    "CovariateRange",
    "NetworkPanel",
    "toggle",
    "degrees",
    "shared_partners",
    "shared_partner_matrix",
    "update_shared_partners",
    "hamming",
    "covariate_values",
]
