"""Continuous-time Markov chain simulation of network change within a period.

Each actor receives change opportunities at a constant rate ``rho``. At an
opportunity, actor ``i`` toggles the tie to ``j`` with probability
proportional to ``exp(f_i(x^{+-ij}) - f_i(x))``; choosing ``j = i`` keeps the
network unchanged. The event loop is compiled with numba; random numbers
come from a numpy ``Generator`` in fixed-size blocks of three uniforms per
event (waiting time, actor, choice), so runs that share a seed consume
identical streams (common random numbers).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np

from .effects import GWESP_KINDS, STRUCTURAL_KINDS, ChangeScorer, ParameterVector
from .network import DirectedNetwork, NetworkPanel

BLOCK = 256


@dataclass(frozen=True)
class RateParameters:
    """Opportunity rate per actor, one value per period."""

    rho: tuple

    def __post_init__(self):
        rho = tuple(float(r) for r in np.atleast_1d(self.rho))
        if any(not np.isfinite(r) or r < 0 for r in rho):
            raise ValueError(f"rates must be finite and nonnegative, got {rho}")
        object.__setattr__(self, "rho", rho)

    def __len__(self):
        return len(self.rho)


@dataclass(frozen=True)
class SimOptions:
    seed: int | None = None
    period_length: float = 1.0
    max_events: int = 1_000_000

    def __post_init__(self):
        if self.period_length < 0:
            raise ValueError("period_length must be nonnegative")
        if self.max_events < 1:
            raise ValueError("max_events must be at least 1")


class PeriodResult(NamedTuple):
    network: DirectedNetwork
    n_events: int
    truncated: bool
    trace: np.ndarray | None = None


def replicate_rng(seed, replicate: int) -> np.random.Generator:
    """Independent generator for replicate ``replicate`` of a batch seeded by ``seed``.

    The stream depends only on ``(seed, replicate)``, not on how many
    replicates are run or in which order.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(int(replicate),))
    return np.random.Generator(np.random.PCG64(ss))


def choice_probabilities(scores) -> np.ndarray:
    """Multinomial logit probabilities with max-shift stabilisation."""
    s = np.asarray(scores, dtype=float)
    e = np.exp(s - s.max())
    return e / e.sum()


class CompiledModel:
    """Arrays describing a parameter vector for the compiled event loop."""

    __slots__ = ("struct", "alpha_gwesp", "alpha_rgwesp", "dyadic")

    def __init__(self, params: ParameterVector, covariates, n: int):
        scorer = ChangeScorer(params, covariates, n)
        self.struct = np.array([scorer.struct[k] for k in STRUCTURAL_KINDS], dtype=float)
        self.alpha_gwesp = float(scorer.alpha.get(GWESP_KINDS[0], math.log(2.0)))
        self.alpha_rgwesp = float(scorer.alpha.get(GWESP_KINDS[1], math.log(2.0)))
        self.dyadic = np.ascontiguousarray(scorer.dyadic)

    def scores(self, x, i):
        """Change scores from the compiled kernel (for checking against :class:`ChangeScorer`)."""
        x = np.ascontiguousarray(x, dtype=np.int64)
        out = np.empty(x.shape[0])
        work = np.empty((4, x.shape[0]))
        _kernel_scores(x, x.sum(axis=0), x.sum(axis=1), i, self.struct, self.alpha_gwesp,
                       self.alpha_rgwesp, self.dyadic, out, work)
        return out


@numba.njit(cache=True)
def _gw(sp, alpha):
    return math.exp(alpha) * (1.0 - (1.0 - math.exp(-alpha)) ** sp)


@numba.njit(cache=True)
def _kernel_scores(x, indeg, outdeg, i, struct, alpha_g, alpha_rg, dyadic, out, work):
    n = x.shape[0]
    b_out = struct[0]
    b_rec = struct[1]
    b_gw = struct[2]
    b_rgw = struct[3]
    b_inpop = struct[4]
    b_outpop = struct[5]
    b_outact = struct[6]
    need_sp = b_gw != 0.0 or b_rgw != 0.0
    sp = work[0]
    if need_sp:
        # work rows: sp_ik, then for each k the weight change under sp +1 / -1 (masked)
        for k in range(n):
            s = 0
            for h in range(n):
                s += x[i, h] * x[h, k]
            sp[k] = s
        sp[i] = 0.0
        for k in range(n):
            w0g = _gw(sp[k], alpha_g)
            w0r = _gw(sp[k], alpha_rg)
            dpg = _gw(sp[k] + 1.0, alpha_g) - w0g
            dmg = _gw(max(sp[k] - 1.0, 0.0), alpha_g) - w0g
            dpr = _gw(sp[k] + 1.0, alpha_rg) - w0r
            dmr = _gw(max(sp[k] - 1.0, 0.0), alpha_rg) - w0r
            m_g = x[i, k]
            m_r = x[i, k] * x[k, i]
            work[1, k] = b_gw * m_g * dpg + b_rgw * m_r * dpr
            work[2, k] = b_gw * m_g * dmg + b_rgw * m_r * dmr
    for j in range(n):
        if j == i:
            out[j] = 0.0
            continue
        xij = x[i, j]
        sign = 1.0 - 2.0 * xij
        d = b_out + dyadic[i, j] + b_rec * x[j, i] + b_outpop * outdeg[j]
        d *= sign
        if b_inpop != 0.0:
            if xij == 0:
                d += b_inpop * (indeg[j] + 1.0)
            else:
                d -= b_inpop * indeg[j]
        if b_outact != 0.0:
            d += b_outact * (2.0 * outdeg[i] * sign + 1.0)
        if need_sp:
            own = b_gw * _gw(sp[j], alpha_g) + b_rgw * x[j, i] * _gw(sp[j], alpha_rg)
            d += sign * own
            row = 1 if xij == 0 else 2
            acc = 0.0
            for k in range(n):
                if x[j, k]:
                    acc += work[row, k]
            d += acc
        out[j] = d


@numba.njit(cache=True)
def _kernel_run(x, indeg, outdeg, struct, alpha_g, alpha_rg, dyadic, total_rate,
                period_length, t, events, max_events, uniforms, log):
    """Consume one block of uniforms; returns (t, events, used, status).

    status 0: block exhausted, 1: period finished, 2: event cap reached.
    """
    n = x.shape[0]
    scores = np.empty(n)
    work = np.empty((4, n))
    for r in range(uniforms.shape[0]):
        t += -math.log(1.0 - uniforms[r, 0]) / total_rate
        if t >= period_length:
            return t, events, r + 1, 1
        i = min(int(uniforms[r, 1] * n), n - 1)
        _kernel_scores(x, indeg, outdeg, i, struct, alpha_g, alpha_rg, dyadic, scores, work)
        mx = scores[0]
        for j in range(1, n):
            if scores[j] > mx:
                mx = scores[j]
        total = 0.0
        for j in range(n):
            scores[j] = math.exp(scores[j] - mx)
            total += scores[j]
        target = uniforms[r, 2] * total
        acc = 0.0
        choice = n - 1
        for j in range(n):
            acc += scores[j]
            if acc >= target:
                choice = j
                break
        if choice != i:
            if x[i, choice] == 0:
                x[i, choice] = 1
                outdeg[i] += 1
                indeg[choice] += 1
            else:
                x[i, choice] = 0
                outdeg[i] -= 1
                indeg[choice] -= 1
        log[r, 0] = i
        log[r, 1] = choice
        events += 1
        if events >= max_events:
            return t, events, r + 1, 2
    return t, events, uniforms.shape[0], 0


def run_period(x, model: CompiledModel, rho: float, rng: np.random.Generator,
               period_length=1.0, max_events=1_000_000, trace=False):
    """Simulate one period in place on the ``int64`` adjacency array ``x``.

    Returns ``(n_events, truncated, trace)``; ``trace`` is an array of
    ``(actor, choice)`` rows when requested.
    """
    n = x.shape[0]
    if rho <= 0 or period_length <= 0:
        return 0, False, (np.empty((0, 2), dtype=np.int64) if trace else None)
    indeg = x.sum(axis=0)
    outdeg = x.sum(axis=1)
    t = 0.0
    events = 0
    log = np.empty((BLOCK, 2), dtype=np.int64)
    logs = []
    while True:
        u = rng.random((BLOCK, 3))
        before = events
        t, events, used, status = _kernel_run(
            x, indeg, outdeg, model.struct, model.alpha_gwesp, model.alpha_rgwesp,
            model.dyadic, n * rho, float(period_length), t, events, int(max_events), u, log,
        )
        if trace:
            logs.append(log[: events - before].copy())
        if status == 1:
            return events, False, (np.concatenate(logs) if trace else None)
        if status == 2:
            return events, True, (np.concatenate(logs) if trace else None)


def _as_rate(rate) -> float:
    if isinstance(rate, RateParameters):
        if len(rate) != 1:
            raise ValueError("simulate_period takes a single-period rate")
        return rate.rho[0]
    r = float(rate)
    if r < 0:
        raise ValueError("rate must be nonnegative")
    return r


def simulate_period(start: DirectedNetwork, params: ParameterVector, rate, covariates,
                    opts: SimOptions = SimOptions(), rng=None, trace=False) -> PeriodResult:
    """Simulate the network at the end of one period, starting from ``start``.

    ``rng`` overrides ``opts.seed`` when given. If ``opts.max_events`` is
    reached the partial result is returned with ``truncated=True`` and a
    warning is issued.
    """
    rng = rng if rng is not None else np.random.default_rng(opts.seed)
    model = CompiledModel(params, covariates, start.n)
    x = start.copy_ties()
    n_events, truncated, log = run_period(
        x, model, _as_rate(rate), rng, opts.period_length, opts.max_events, trace
    )
    if truncated:
        warnings.warn(f"simulation stopped after max_events={opts.max_events} events",
                      RuntimeWarning, stacklevel=2)
    return PeriodResult(DirectedNetwork(x), n_events, truncated, log)


def simulate_panel(start: DirectedNetwork, params: ParameterVector, rates, covariates,
                   n_periods: int | None = None, opts: SimOptions = SimOptions(),
                   actor_labels=(), rng=None) -> NetworkPanel:
    """Chain :func:`simulate_period` over consecutive periods.

    Wave ``m + 1`` is simulated from wave ``m``.
    """
    rates = rates if isinstance(rates, RateParameters) else RateParameters(rates)
    if n_periods is None:
        n_periods = len(rates)
    if len(rates) != n_periods:
        raise ValueError(f"{len(rates)} rates for {n_periods} periods")
    rng = rng if rng is not None else np.random.default_rng(opts.seed)
    model = CompiledModel(params, covariates, start.n)
    waves = [start]
    x = start.copy_ties()
    for m in range(n_periods):
        _, truncated, _ = run_period(x, model, rates.rho[m], rng, opts.period_length,
                                     opts.max_events)
        if truncated:
            warnings.warn(f"period {m + 1} stopped after max_events={opts.max_events} events",
                          RuntimeWarning, stacklevel=2)
        waves.append(DirectedNetwork(x))
    return NetworkPanel(tuple(waves), covariates, actor_labels)
