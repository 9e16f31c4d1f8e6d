"""Method-of-moments estimation by Robbins-Monro stochastic approximation.

Statistics are, for every effect, the sum over periods of the wave-(m+1)
network total ``sum_i s_ki``, followed by one Hamming distance per period
for the rate parameters. Parameters follow the same order. Each simulation
starts from the observed wave ``m`` (the first wave is conditioned on).

Phase 1 estimates the derivative matrix of the expected statistics by
forward differences with common random numbers, phase 2 runs the
Robbins-Monro iterations, and phase 3 simulates at the estimate to obtain
the statistic covariance, the convergence diagnostics and the parameter
covariance ``D^-1 Sigma D^-T``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .effects import EffectSpec, ParameterVector, network_statistics
from .exceptions import ConfigurationError, DegenerateTestError, SingularDerivativeError
from .network import NetworkPanel, hamming
from .simulation import CompiledModel, RateParameters, replicate_rng, run_period

logger = logging.getLogger(__name__)

# substream labels
_PHASE1, _PHASE2, _PHASE3 = 1, 2, 3


@dataclass(frozen=True)
class EstimationOptions:
    """Tuning of the three estimation phases.

    Defaults: 50 phase-1 runs with forward-difference steps
    ``0.1 * max(|theta_k|, 0.3)``; 4 phase-2 subphases with gain halving from
    0.2; 1000 phase-3 runs, the first ``phase3_derivative_runs`` of which are
    also used for the derivative at the estimate.

    Phase-2 updates use ``(1 - diagonalize) D + diagonalize diag(D)``;
    ``diagonalize=0`` gives the plain ``D^-1`` update. A phase-1 derivative
    column whose diagonal entry is not significantly positive (t-ratio over
    runs below ``min_derivative_t``) is re-estimated with a 4 times larger
    step, at most ``step_retries`` times.
    """

    phase1_runs: int = 50
    phase2_subphases: int = 4
    gain_initial: float = 0.2
    phase3_runs: int = 1000
    phase3_derivative_runs: int = 300
    step_fraction: float = 0.1
    step_floor: float = 0.3
    max_step: float = 2.0
    diagonalize: float = 0.2
    step_retries: int = 3
    min_derivative_t: float = 2.0
    conv_threshold: float = 0.1
    max_conv_threshold: float = 0.25
    max_restarts: int = 3
    seed: Optional[int] = None
    n_workers: int = 1

    def __post_init__(self):
        if self.phase1_runs < 2 or self.phase3_runs < 2:
            raise ConfigurationError("phase 1 and phase 3 need at least 2 runs")
        if self.phase2_subphases < 1:
            raise ConfigurationError("at least one phase-2 subphase is needed")
        if not self.gain_initial > 0:
            raise ConfigurationError("gain_initial must be positive")
        if not 0.0 <= self.diagonalize <= 1.0:
            raise ConfigurationError("diagonalize must lie in [0, 1]")

    def gains(self) -> np.ndarray:
        return self.gain_initial * 0.5 ** np.arange(self.phase2_subphases)


@dataclass
class MoMResult:
    """Estimates, covariance and convergence diagnostics.

    ``theta`` lists the effect parameters followed by one rate per period.
    """

    effects: tuple
    n_periods: int
    theta: np.ndarray
    covariance: np.ndarray
    conv_t_ratios: np.ndarray
    max_conv_ratio: float
    n_phase3: int
    converged: bool = True
    targets: Optional[np.ndarray] = None
    derivative: Optional[np.ndarray] = None
    n_restarts: int = 0
    seed: Optional[int] = None
    names: list = field(default_factory=list)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.covariance = np.asarray(self.covariance, dtype=float)
        if not self.names:
            self.names = parameter_names(self.effects, self.n_periods)

    @property
    def std_errors(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    @property
    def parameters(self) -> ParameterVector:
        k = len(self.effects)
        return ParameterVector(self.effects, self.theta[:k])

    @property
    def rates(self) -> RateParameters:
        return RateParameters(self.theta[len(self.effects):])

    def index(self, key) -> int:
        if isinstance(key, (int, np.integer)):
            if not 0 <= key < self.theta.size:
                raise IndexError(f"parameter index {key} out of range")
            return int(key)
        try:
            return self.names.index(key)
        except ValueError:
            raise KeyError(f"no parameter named {key!r}") from None

    @classmethod
    def from_estimates(cls, names, theta, covariance):
        """Wrap externally obtained estimates (no effects attached) for testing."""
        theta = np.asarray(theta, dtype=float)
        return cls(
            effects=(), n_periods=0, theta=theta, covariance=covariance,
            conv_t_ratios=np.zeros(theta.size), max_conv_ratio=0.0, n_phase3=0,
            names=list(names),
        )

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "effects": [
                {"name": e.name, "kind": e.kind, "covariate": e.covariate, "alpha": e.alpha}
                for e in self.effects
            ],
            "n_periods": self.n_periods,
            "estimates": self.theta.tolist(),
            "std_errors": self.std_errors.tolist(),
            "covariance": self.covariance.tolist(),
            "conv_t_ratios": np.asarray(self.conv_t_ratios).tolist(),
            "max_conv_ratio": float(self.max_conv_ratio),
            "n_phase3": int(self.n_phase3),
            "converged": bool(self.converged),
            "n_restarts": int(self.n_restarts),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MoMResult":
        effects = tuple(
            EffectSpec(e["kind"], e["covariate"], e.get("alpha", np.log(2.0))) for e in d["effects"]
        )
        return cls(
            effects=effects, n_periods=d["n_periods"], theta=d["estimates"],
            covariance=d["covariance"], conv_t_ratios=np.asarray(d["conv_t_ratios"]),
            max_conv_ratio=d["max_conv_ratio"], n_phase3=d["n_phase3"],
            converged=d["converged"], n_restarts=d.get("n_restarts", 0), seed=d.get("seed"),
            names=d["names"],
        )


def parameter_names(effects, n_periods) -> list:
    return [e.name for e in effects] + [f"rate period {m + 1}" for m in range(n_periods)]


def target_statistics(panel: NetworkPanel, effects: Sequence[EffectSpec]) -> np.ndarray:
    """Observed statistics: effect totals summed over waves 2..M, then Hamming distances."""
    if panel.n_waves < 2:
        raise ValueError("estimation needs at least two waves")
    effect_part = np.zeros(len(effects))
    rate_part = []
    for m in range(panel.n_periods):
        effect_part += network_statistics(effects, panel.waves[m + 1], panel.covariates)
        rate_part.append(hamming(panel.waves[m], panel.waves[m + 1]))
    return np.concatenate([effect_part, np.asarray(rate_part, dtype=float)])


class MomentSimulator:
    """Simulated statistics for a panel and effect list at a given parameter vector."""

    def __init__(self, panel: NetworkPanel, effects: Sequence[EffectSpec]):
        self.panel = panel
        self.effects = tuple(effects)
        self.k = len(self.effects)
        self.n_periods = panel.n_periods
        self.starts = [w.copy_ties() for w in panel.waves[:-1]]

    @property
    def dim(self) -> int:
        return self.k + self.n_periods

    def simulate(self, theta, rng) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        model = CompiledModel(ParameterVector(self.effects, theta[: self.k]),
                              self.panel.covariates, self.panel.n)
        out = np.zeros(self.dim)
        for m in range(self.n_periods):
            x = self.starts[m].copy()
            run_period(x, model, max(theta[self.k + m], 0.0), rng)
            out[: self.k] += network_statistics(self.effects, x, self.panel.covariates)
            out[self.k + m] = np.count_nonzero(x != self.starts[m])
        return out

    def run(self, theta, seed, key, r, steps=None):
        """Statistics for replicate ``r``; with ``steps``, also at each ``theta + step_k e_k``
        using the same random stream."""
        base = self.simulate(theta, replicate_rng(seed, _stream(key, r)))
        if steps is None:
            return base, None
        diffs = np.empty((self.dim, self.dim))
        for k, h in enumerate(steps):
            th = np.array(theta, dtype=float)
            th[k] += h
            diffs[:, k] = (self.simulate(th, replicate_rng(seed, _stream(key, r))) - base) / h
        return base, diffs


def _stream(key, r):
    # key = (phase, attempt); replicate index last
    return key[0] * 1_000_003 * 1_000 + key[1] * 1_000_003 + r


def _run_chunk(args):
    sim, theta, seed, key, runs, steps = args
    return [sim.run(theta, seed, key, r, steps) for r in runs]


def _batch(sim, theta, seed, key, n_runs, steps=None, n_deriv=None, n_workers=1):
    """Statistics matrix (runs x dim), mean derivative over the first ``n_deriv`` runs
    and the t-ratios of its diagonal."""
    n_deriv = n_runs if n_deriv is None else min(n_deriv, n_runs)
    jobs = [(r, steps if (steps is not None and r < n_deriv) else None) for r in range(n_runs)]
    if n_workers > 1:
        # derivative runs are grouped separately so each chunk shares one steps value
        chunks = []
        with_d = [r for r, s in jobs if s is not None]
        without = [r for r, s in jobs if s is None]
        for c in range(n_workers):
            if with_d[c::n_workers]:
                chunks.append((sim, theta, seed, key, with_d[c::n_workers], steps))
            if without[c::n_workers]:
                chunks.append((sim, theta, seed, key, without[c::n_workers], None))
        results = {}
        with ProcessPoolExecutor(n_workers) as ex:
            for chunk, res in zip(chunks, ex.map(_run_chunk, chunks)):
                for r, out in zip(chunk[4], res):
                    results[r] = out
        ordered = [results[r] for r in range(n_runs)]
    else:
        ordered = [sim.run(theta, seed, key, r, s) for r, s in jobs]
    stats_mat = np.array([b for b, _ in ordered])
    derivs = [d for _, d in ordered if d is not None]
    if not derivs:
        return stats_mat, None, None
    derivs = np.array(derivs)
    return stats_mat, derivs.mean(axis=0), _diagonal_t(derivs)


def _diagonal_t(derivs):
    diag = np.diagonal(derivs, axis1=1, axis2=2)
    mean = diag.mean(axis=0)
    se = diag.std(axis=0, ddof=1) / np.sqrt(diag.shape[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(se > 0, mean / se, np.where(mean > 0, np.inf, 0.0))


def fd_steps(theta, options: EstimationOptions) -> np.ndarray:
    return options.step_fraction * np.maximum(np.abs(theta), options.step_floor)


def check_derivative(deriv, names):
    """Raise :class:`SingularDerivativeError` if ``deriv`` is (numerically) singular."""
    if not np.all(np.isfinite(deriv)):
        raise SingularDerivativeError("derivative matrix has non-finite entries", names)
    zero = [names[k] for k in range(deriv.shape[1]) if np.allclose(deriv[:, k], 0.0)]
    if zero:
        raise SingularDerivativeError(
            f"statistics do not respond to parameters: {', '.join(zero)}", zero
        )
    # column scaling removes unit differences before judging rank
    scaled = deriv / np.abs(deriv).max(axis=0)
    u, s, vt = np.linalg.svd(scaled)
    if s[-1] < 1e-8 * s[0]:
        null = vt[-1]
        bad = [names[k] for k in np.flatnonzero(np.abs(null) > 0.3)]
        raise SingularDerivativeError(
            f"collinear or unidentifiable specification involving: {', '.join(bad)}", bad
        )


def default_start(panel: NetworkPanel, effects: Sequence[EffectSpec]) -> np.ndarray:
    """Starting values: logit density for outdegree, 0 for other effects,
    and average Hamming distance per actor for the rates."""
    n = panel.n
    theta = np.zeros(len(effects) + panel.n_periods)
    later = [w.n_ties for w in panel.waves[1:]]
    dens = np.clip(np.mean(later) / (n * (n - 1)), 0.01, 0.99)
    for k, e in enumerate(effects):
        if e.kind == "outdegree":
            theta[k] = np.log(dens / (1 - dens))
    for m in range(panel.n_periods):
        h = hamming(panel.waves[m], panel.waves[m + 1])
        theta[len(effects) + m] = max(h / n, 0.5)
    return theta


def _phase1(sim, theta, options, seed):
    steps = fd_steps(theta, options)
    _, deriv, diag_t = _batch(sim, theta, seed, (_PHASE1, 0), options.phase1_runs, steps,
                              None, options.n_workers)
    for retry in range(1, options.step_retries + 1):
        weak = np.flatnonzero(diag_t < options.min_derivative_t)
        if weak.size == 0:
            break
        # a small step may leave discrete outcomes unchanged under common random numbers
        steps = steps.copy()
        steps[weak] *= 4.0
        logger.info("phase 1: enlarging steps for parameters %s", weak.tolist())
        _, d2, t2 = _batch(sim, theta, seed, (_PHASE1, retry), options.phase1_runs, steps,
                           None, options.n_workers)
        deriv[:, weak] = d2[:, weak]
        diag_t[weak] = t2[weak]
    return deriv


def update_matrix(deriv, diagonalize):
    """Inverse of ``deriv`` blended towards its diagonal."""
    mixed = (1.0 - diagonalize) * deriv + diagonalize * np.diag(np.diag(deriv))
    return np.linalg.inv(mixed)


def _phase2(sim, theta, targets, dinv, options, seed, attempt):
    rng = replicate_rng(seed, _stream((_PHASE2, attempt), 0))
    k_eff = sim.k
    p = sim.dim
    gains = options.gains()
    for sub, gain in enumerate(gains):
        n_min = int(round(2.52 ** sub * (7 + p)))
        n_max = n_min + 200
        total = np.zeros(p)
        prev_dev = None
        cross = np.zeros(p)
        it = 0
        while it < n_max:
            dev = sim.simulate(theta, rng) - targets
            step = gain * (dinv @ dev)
            big = np.abs(step).max()
            if big > options.max_step:
                step *= options.max_step / big
            new = theta - step
            rates = new[k_eff:]
            rates[rates <= 0] = theta[k_eff:][rates <= 0] / 2.0
            theta = new
            total += theta
            it += 1
            if prev_dev is not None:
                cross += dev * prev_dev
            prev_dev = dev
            # stop once every statistic's deviations have become negatively autocorrelated
            if it >= n_min and np.all(cross < 0):
                break
        theta = total / it
        logger.debug("subphase %d: %d iterations, gain %.4g, theta %s", sub + 1, it, gain, theta)
    return theta


def _phase3(sim, theta, targets, options, seed, attempt):
    steps = fd_steps(theta, options)
    mat, deriv, _ = _batch(sim, theta, seed, (_PHASE3, attempt), options.phase3_runs, steps,
                        options.phase3_derivative_runs, options.n_workers)
    mean = mat.mean(axis=0)
    sd = mat.std(axis=0, ddof=1)
    cov_s = np.atleast_2d(np.cov(mat, rowvar=False))
    diff = mean - targets
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ratios = np.where(sd > 0, diff / sd, np.where(diff == 0, 0.0, np.inf))
    max_conv = float(np.sqrt(max(diff @ np.linalg.pinv(cov_s) @ diff, 0.0)))
    return mat, deriv, cov_s, t_ratios, max_conv


def estimate(panel: NetworkPanel, effects: Sequence[EffectSpec],
             options: EstimationOptions = EstimationOptions(), start=None) -> MoMResult:
    """Method-of-moments estimate of effect parameters and rates.

    Raises :class:`SingularDerivativeError` for an unidentifiable
    specification. When convergence criteria are not met after
    ``options.max_restarts`` restarts, the result is returned with
    ``converged=False``.
    """
    effects = tuple(effects)
    targets = target_statistics(panel, effects)
    names = parameter_names(effects, panel.n_periods)
    seed = options.seed
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2**63))
    sim = MomentSimulator(panel, effects)
    theta = default_start(panel, effects) if start is None else np.array(start, dtype=float)
    if theta.size != sim.dim:
        raise ConfigurationError(f"start vector has {theta.size} entries, expected {sim.dim}")

    deriv = _phase1(sim, theta, options, seed)
    check_derivative(deriv, names)
    logger.info("phase 1 derivative diagonal: %s", np.diag(deriv))

    attempt = 0
    while True:
        dinv = update_matrix(deriv, options.diagonalize)
        theta = _phase2(sim, theta, targets, dinv, options, seed, attempt)
        mat, d3, cov_s, t_ratios, max_conv = _phase3(sim, theta, targets, options, seed, attempt)
        converged = bool(np.all(np.abs(t_ratios) < options.conv_threshold)
                         and max_conv < options.max_conv_threshold)
        logger.info("attempt %d: max |t| %.3f, max conv ratio %.3f", attempt,
                    np.abs(t_ratios).max(), max_conv)
        try:
            check_derivative(d3, names)
            usable = True
        except SingularDerivativeError:
            usable = False
        if usable:
            deriv = d3
        if converged or attempt >= options.max_restarts:
            break
        attempt += 1

    dinv = np.linalg.inv(deriv)
    covariance = dinv @ cov_s @ dinv.T
    covariance = (covariance + covariance.T) / 2.0
    return MoMResult(
        effects=effects, n_periods=panel.n_periods, theta=theta, covariance=covariance,
        conv_t_ratios=t_ratios, max_conv_ratio=max_conv, n_phase3=mat.shape[0],
        converged=converged, targets=targets, derivative=deriv, n_restarts=attempt,
        seed=seed, names=names,
    )


# --------------------------------------------------------------------------
# tests


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    df: Optional[int] = None
    side: Optional[str] = None

    __test__ = False  # not a pytest class


def t_test(result: MoMResult, index) -> TestResult:
    """Two-sided normal test of a single parameter: ``z = theta_k / SE_k``."""
    k = result.index(index)
    se = result.std_errors[k]
    if not se > 0:
        raise DegenerateTestError(f"standard error of {result.names[k]!r} is zero")
    z = result.theta[k] / se
    return TestResult(float(z), float(2.0 * stats.norm.sf(abs(z))), side="two")


def wald_test(result: MoMResult, indices) -> TestResult:
    """Chi-squared test of ``theta_S = 0``: ``W = theta_S' Sigma_S^-1 theta_S``, df = |S|."""
    idx = [result.index(i) for i in indices]
    th = result.theta[idx]
    sub = result.covariance[np.ix_(idx, idx)]
    try:
        cond = np.linalg.cond(sub)
        if not np.isfinite(cond) or cond > 1e14:
            raise np.linalg.LinAlgError
        w = float(th @ np.linalg.solve(sub, th))
    except np.linalg.LinAlgError:
        labels = [result.names[i] for i in idx]
        raise DegenerateTestError(f"covariance submatrix is singular for {labels}") from None
    df = len(idx)
    return TestResult(w, float(stats.chi2.sf(w, df)), df=df)


def linear_combination_test(result: MoMResult, c, side: str = "right") -> TestResult:
    """Normal test of ``c' theta`` with ``z = c' theta / sqrt(c' Sigma c)``."""
    c = np.asarray(c, dtype=float)
    if c.shape != result.theta.shape:
        raise ValueError(f"coefficient vector has length {c.size}, expected {result.theta.size}")
    var = float(c @ result.covariance @ c)
    if not var > 0:
        raise DegenerateTestError("linear combination has zero variance")
    z = float(c @ result.theta) / np.sqrt(var)
    if side == "right":
        p = stats.norm.sf(z)
    elif side == "left":
        p = stats.norm.cdf(z)
    elif side == "two":
        p = 2.0 * stats.norm.sf(abs(z))
    else:
        raise ValueError(f"side must be 'right', 'left' or 'two', got {side!r}")
    return TestResult(z, float(p), side=side)


def with_options(options: EstimationOptions, **changes) -> EstimationOptions:
    return replace(options, **changes)
