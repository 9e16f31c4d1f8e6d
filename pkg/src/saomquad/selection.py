"""Social selection functions for a numerical actor covariate.

The quadratic family is

    a(v_j | v_i) = theta1 (v_j - v_i)^2 + theta2 v_j^2 + theta3 v_j
                   + theta4 v_i + theta5 v_i^2

with ``theta5 = 0`` giving the four-parameter model. The functions here
locate its optimum over the covariate range, compute the social norm
``-theta3 / (2 theta2)`` with a delta-method standard error, and classify
the function with respect to homophily, attachment conformity, aspiration
and sociability. The older one- and three-parameter specifications are
available as :class:`LegacySelection` for comparison.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .exceptions import (
    ConfigurationError,
    DegenerateWeightsError,
    NonUnimodalError,
    UndefinedNormError,
)
from .network import CovariateRange

NORM_TOLERANCE = 1e-10

LEGACY_FAMILIES = {
    # name: number of coefficients
    "abs_difference": 1,
    "abs_difference_main": 3,
    "ego_alter_product": 3,
    "pure_quadratic": 1,
}


@dataclass(frozen=True)
class QuadraticSelection:
    """Coefficients of the quadratic selection function and the covariate support.

    ``theta`` may have 4 or 5 entries; a four-parameter model is stored
    with ``theta5 = 0``.
    """

    theta: tuple
    support: CovariateRange

    def __post_init__(self):
        th = tuple(float(t) for t in self.theta)
        if len(th) == 4:
            th = th + (0.0,)
        if len(th) != 5:
            raise ValueError(f"expected 4 or 5 coefficients, got {len(th)}")
        if not all(np.isfinite(th)):
            raise ValueError("selection coefficients must be finite")
        object.__setattr__(self, "theta", th)

    @property
    def theta1(self):
        return self.theta[0]

    @property
    def theta2(self):
        return self.theta[1]

    @property
    def theta3(self):
        return self.theta[2]

    @property
    def theta4(self):
        return self.theta[3]

    @property
    def theta5(self):
        return self.theta[4]

    @property
    def curvature(self) -> float:
        """Coefficient of ``v_j^2``; negative means unimodal in ``v_j``."""
        return self.theta1 + self.theta2

    @property
    def is_unimodal(self) -> bool:
        return self.curvature < 0


@dataclass(frozen=True)
class LegacySelection:
    """Older specifications: absolute difference, absolute difference with
    ego and alter main effects, ego-by-alter product, and pure squared difference.

    Coefficient order follows the usual formulas: ``beta1 |v_i - v_j|``;
    ``beta1 v_i + beta2 v_j + beta3 |v_i - v_j|``;
    ``beta1 v_i + beta2 v_j + beta3 v_i v_j``; ``beta1 (v_j - v_i)^2``.
    """

    family: str
    betas: tuple
    support: CovariateRange

    def __post_init__(self):
        if self.family not in LEGACY_FAMILIES:
            raise ValueError(f"unknown legacy family {self.family!r}")
        betas = tuple(float(b) for b in self.betas)
        if len(betas) != LEGACY_FAMILIES[self.family]:
            raise ValueError(
                f"family {self.family!r} takes {LEGACY_FAMILIES[self.family]} coefficients"
            )
        object.__setattr__(self, "betas", betas)


def evaluate(sel, v_i, v_j):
    """Value of the selection function; broadcasts over array arguments."""
    vi = np.asarray(v_i, dtype=float)
    vj = np.asarray(v_j, dtype=float)
    if isinstance(sel, QuadraticSelection):
        t1, t2, t3, t4, t5 = sel.theta
        out = t1 * (vj - vi) ** 2 + t2 * vj**2 + t3 * vj + t4 * vi + t5 * vi**2
    elif isinstance(sel, LegacySelection):
        b = sel.betas
        if sel.family == "abs_difference":
            out = b[0] * np.abs(vi - vj)
        elif sel.family == "abs_difference_main":
            out = b[0] * vi + b[1] * vj + b[2] * np.abs(vi - vj)
        elif sel.family == "ego_alter_product":
            out = b[0] * vi + b[1] * vj + b[2] * vi * vj
        else:
            out = b[0] * (vj - vi) ** 2
    else:
        raise TypeError(f"not a selection function: {type(sel).__name__}")
    return out if out.ndim else float(out)


def _unclamped_location(sel: QuadraticSelection, vi):
    return (sel.theta1 * vi - sel.theta3 / 2.0) / sel.curvature


def optimum_location(sel: QuadraticSelection, v_i):
    """Ideal point ``(theta1 v_i - theta3/2) / (theta1 + theta2)`` truncated to the range.

    Returns ``(argmax, clamped)``. Raises :class:`NonUnimodalError` when
    ``theta1 + theta2 >= 0``; use :func:`boundary_argmax` then.
    """
    if not sel.is_unimodal:
        raise NonUnimodalError(
            f"theta1 + theta2 = {sel.curvature:g} >= 0: no interior optimum, use boundary_argmax"
        )
    lo, hi = sel.support.lower, sel.support.upper
    raw = _unclamped_location(sel, np.asarray(v_i, dtype=float))
    loc = np.clip(raw, lo, hi)
    clamped = (raw < lo) | (raw > hi)
    if loc.ndim == 0:
        return float(loc), bool(clamped)
    return loc, clamped


def boundary_argmax(sel: QuadraticSelection, v_i):
    """Best range endpoint for a convex or linear selection function; ties go to ``V+``."""
    lo, hi = sel.support.lower, sel.support.upper
    vi = np.asarray(v_i, dtype=float)
    at_hi = evaluate(sel, vi, hi) >= evaluate(sel, vi, lo)
    out = np.where(at_hi, hi, lo)
    return float(out) if out.ndim == 0 else out


def argmax(sel: QuadraticSelection, v_i):
    """Maximising alter value over the range, for either curvature."""
    if sel.is_unimodal:
        return optimum_location(sel, v_i)[0]
    return boundary_argmax(sel, v_i)


def optimum_value(sel, v_i):
    """Maximum over ``v_j`` in the covariate range of ``a(v_j | v_i)``."""
    vi = np.asarray(v_i, dtype=float)
    if isinstance(sel, QuadraticSelection):
        return evaluate(sel, vi, argmax(sel, vi))
    # legacy families are piecewise linear or quadratic with the kink/vertex at v_i
    lo, hi = sel.support.lower, sel.support.upper
    cands = np.stack(
        [evaluate(sel, vi, np.full_like(vi, lo)), evaluate(sel, vi, np.full_like(vi, hi)),
         evaluate(sel, vi, np.clip(vi, lo, hi))]
    )
    out = cands.max(axis=0)
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# social norm and attraction weights


@dataclass(frozen=True)
class NormEstimate:
    value: float
    std_error: Optional[float]
    in_range: bool


def _theta_covariance(cov, needed):
    """Validate a covariance over (theta1, ..., theta5) covering ``needed`` leading rows."""
    c = np.asarray(cov, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ConfigurationError(f"covariance must be a square matrix, got shape {c.shape}")
    if c.shape[0] < needed:
        raise ConfigurationError(
            f"covariance covers {c.shape[0]} parameters, theta1..theta{needed} are needed"
        )
    return c


def social_norm(sel: QuadraticSelection, cov_matrix=None) -> NormEstimate:
    """The attachment-conformity norm ``-theta3 / (2 theta2)`` with delta-method SE.

    ``cov_matrix`` is either the covariance of ``(theta2, theta3)`` (2x2) or of
    ``(theta1, ..., theta_k)`` with ``k >= 3``.
    """
    t2, t3 = sel.theta2, sel.theta3
    if abs(t2) < NORM_TOLERANCE:
        raise UndefinedNormError(
            f"theta2 = {t2:g}: norm undefined; behavior is pure linear aspiration "
            f"with slope theta3 = {t3:g}"
        )
    value = -t3 / (2.0 * t2)
    se = None
    if cov_matrix is not None:
        c = np.asarray(cov_matrix, dtype=float)
        if c.shape == (2, 2):
            sub = c
        else:
            sub = _theta_covariance(c, 3)[1:3, 1:3]
        grad = np.array([t3 / (2.0 * t2**2), -1.0 / (2.0 * t2)])
        se = float(np.sqrt(max(grad @ sub @ grad, 0.0)))
    in_range = bool(sel.support.lower <= value <= sel.support.upper)
    return NormEstimate(float(value), se, in_range)


def attraction_weights(sel: QuadraticSelection) -> tuple[float, float]:
    """Weights of own value (homophily) and norm (conformity) in the ideal point."""
    s = sel.curvature
    if s == 0:
        raise DegenerateWeightsError("theta1 + theta2 = 0: attraction weights undefined")
    w_h = sel.theta1 / s
    return float(w_h), float(1.0 - w_h)


# --------------------------------------------------------------------------
# aspiration


@dataclass(frozen=True)
class LinearCombinationTest:
    """Right one-sided normal test of ``c' theta > 0``."""

    coefficients: tuple
    value: float
    std_error: Optional[float]
    p_value: Optional[float]
    satisfied: bool

    @property
    def z(self):
        if not self.std_error:
            return None
        return self.value / self.std_error


@dataclass(frozen=True)
class AspirationVerdict:
    level: str
    tests: dict
    alpha: float = 0.05

    @property
    def significant(self) -> dict:
        return {k: (t.p_value is not None and t.p_value < self.alpha) for k, t in self.tests.items()}


ASPIRATION_LEVELS = ("strong", "medium", "weak")


def aspiration_combinations(sel: QuadraticSelection) -> dict:
    """Coefficient vectors over ``(theta1, ..., theta5)`` for the three aspiration tests.

    Each combination is the derivative in ``v_j`` of (part of) the selection
    function at the point where it is smallest, so ``c' theta > 0`` means
    the function increases there. For ``theta1 < 0, theta2 < 0`` these are
    ``theta3 + 2 theta2 V+ + 2 theta1 (V+ - V-)``, ``theta3 + 2 theta2 V+``
    and ``theta3 + 2 theta2 Vbar``.
    """
    lo, hi, mean = sel.support.lower, sel.support.upper, sel.support.mean
    t1, t2 = sel.theta1, sel.theta2
    # strong: d a / d v_j = 2 theta1 (v_j - v_i) + 2 theta2 v_j + theta3 is linear, so
    # its minimum over the square sits at a corner
    corners = [(vi, vj) for vi in (lo, hi) for vj in (lo, hi)]
    derivs = [2 * t1 * (vj - vi) + 2 * t2 * vj + sel.theta3 for vi, vj in corners]
    vi_s, vj_s = corners[int(np.argmin(derivs))]
    strong = (2.0 * (vj_s - vi_s), 2.0 * vj_s, 1.0, 0.0, 0.0)
    # medium: derivative of theta2 v^2 + theta3 v at the endpoint where it is smallest
    v_m = hi if t2 <= 0 else lo
    medium = (0.0, 2.0 * v_m, 1.0, 0.0, 0.0)
    weak = (0.0, 2.0 * mean, 1.0, 0.0, 0.0)
    return {"strong": strong, "medium": medium, "weak": weak}


def classify_aspiration(sel: QuadraticSelection, cov_matrix=None, alpha: float = 0.05):
    """Aspiration level from point estimates, with one-sided tests alongside.

    The level is the strongest definition whose combination is positive at
    the point estimate; p-values are reported but do not decide the level.
    Without ``cov_matrix`` the standard errors and p-values are ``None``.
    """
    theta = np.asarray(sel.theta)
    cov = None if cov_matrix is None else _theta_covariance(cov_matrix, 3)
    tests = {}
    for name, c in aspiration_combinations(sel).items():
        c = np.asarray(c)
        value = float(c @ theta)
        se = p = None
        if cov is not None:
            k = min(cov.shape[0], 5)
            var = float(c[:k] @ cov[:k, :k] @ c[:k])
            se = float(np.sqrt(max(var, 0.0)))
            if se > 0:
                p = float(stats.norm.sf(value / se))
        tests[name] = LinearCombinationTest(tuple(c), value, se, p, value > 0)
    level = next((lv for lv in ASPIRATION_LEVELS if tests[lv].satisfied), "none")
    return AspirationVerdict(level, tests, alpha)


# --------------------------------------------------------------------------
# sociability


@dataclass(frozen=True)
class SociabilityVerdict:
    strong: bool
    weak: bool
    optimum_curve: np.ndarray
    min_derivative: float
    min_optimum_slope: float


def _ego_derivative(sel, vi, vj):
    """d a(v_j | v_i) / d v_i."""
    return 2.0 * (sel.theta1 + sel.theta5) * vi - 2.0 * sel.theta1 * vj + sel.theta4


def _optimum_breakpoints(sel: QuadraticSelection):
    """Ego values where the closed form of the optimum changes."""
    lo, hi = sel.support.lower, sel.support.upper
    t1, t2, t3 = sel.theta1, sel.theta2, sel.theta3
    pts = []
    if t1 != 0:
        if sel.is_unimodal:
            # where the unclamped ideal point crosses a range end
            s = sel.curvature
            pts = [(c * s + t3 / 2.0) / t1 for c in (lo, hi)]
        else:
            # where a(V+ | v_i) = a(V- | v_i); the difference is linear in v_i
            pts = [(hi + lo) / 2.0 + (t2 * (hi + lo) + t3) / (2.0 * t1)]
    inner = sorted(p for p in pts if lo < p < hi)
    return [lo] + inner + [hi]


def optimum_slopes(sel: QuadraticSelection):
    """One-sided slopes of the optimum curve at the ends of each analytic piece.

    By the envelope theorem the slope is ``d a / d v_i`` at the maximising
    alter value, which is linear in ``v_i`` within a piece.
    """
    knots = _optimum_breakpoints(sel)
    slopes = []
    for left, right in zip(knots[:-1], knots[1:]):
        if sel.is_unimodal:
            vj_l, vj_r = argmax(sel, left), argmax(sel, right)
        else:
            vj_l = vj_r = boundary_argmax(sel, 0.5 * (left + right))
        slopes.append(_ego_derivative(sel, left, vj_l))
        slopes.append(_ego_derivative(sel, right, vj_r))
    return np.array(slopes)


def _scale_tolerance(sel) -> float:
    lo, hi = sel.support.lower, sel.support.upper
    return 1e-12 * (1.0 + np.abs(sel.theta).sum()) * (1.0 + max(abs(lo), abs(hi)))


def classify_sociability(sel: QuadraticSelection, grid_size: int = 101) -> SociabilityVerdict:
    """Strong and weak sociability.

    Strong: ``d a / d v_i >= 0`` on the whole square of ego and alter values
    (checked at the corners, the derivative being linear). Weak: the optimum
    ``max_{v_j} a(v_j | v_i)`` is nondecreasing in ``v_i``, checked exactly
    piece by piece. Both also require the quantity not to be identically
    zero, so a covariate without any effect is not called sociable.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    lo, hi = sel.support.lower, sel.support.upper
    tol = _scale_tolerance(sel)
    corner = np.array([_ego_derivative(sel, vi, vj) for vi in (lo, hi) for vj in (lo, hi)])
    strong = bool(corner.min() >= -tol and corner.max() > tol)
    slopes = optimum_slopes(sel)
    weak = bool(slopes.min() >= -tol and slopes.max() > tol)
    grid = np.linspace(lo, hi, grid_size)
    curve = np.column_stack([grid, optimum_value(sel, grid)])
    return SociabilityVerdict(strong, weak, curve, float(corner.min()), float(slopes.min()))


# --------------------------------------------------------------------------
# basis conversions


def to_ego_alter_basis(theta) -> tuple:
    """Map ``(theta1..theta5)`` with an ``egoSqX`` term to the basis with ``egoXaltX``.

    Uses ``v_i^2 = (v_j - v_i)^2 + 2 v_i v_j - v_j^2``; the result is the
    coefficient vector of ``diffSqX, altSqX, altX, egoX, egoXaltX``.
    """
    t1, t2, t3, t4, t5 = theta
    return (t1 + t5, t2 - t5, t3, t4, 2.0 * t5)


def from_ego_alter_basis(gamma) -> tuple:
    """Inverse of :func:`to_ego_alter_basis`."""
    g1, g2, g3, g4, g5 = gamma
    return (g1 - g5 / 2.0, g2 + g5 / 2.0, g3, g4, g5 / 2.0)


def evaluate_norm_form(sel: QuadraticSelection, v_i, v_j):
    """The selection function written around the social norm,
    ``theta1 (v_j - v_i)^2 + theta2 (v_j - Vnorm)^2 + theta4 v_i + theta5 v_i^2``.

    Differs from :func:`evaluate` by the constant ``-theta2 Vnorm^2``.
    """
    norm = social_norm(sel).value
    vi = np.asarray(v_i, dtype=float)
    vj = np.asarray(v_j, dtype=float)
    return (sel.theta1 * (vj - vi) ** 2 + sel.theta2 * (vj - norm) ** 2
            + sel.theta4 * vi + sel.theta5 * vi**2)


def evaluate_ego_alter_basis(gamma, v_i, v_j):
    g1, g2, g3, g4, g5 = gamma
    vi = np.asarray(v_i, dtype=float)
    vj = np.asarray(v_j, dtype=float)
    return g1 * (vi - vj) ** 2 + g2 * vj**2 + g3 * vj + g4 * vi + g5 * vi * vj


# --------------------------------------------------------------------------
# selection tables


@dataclass
class SelectionTable:
    """Plot data: ``rows`` holds ``(v_ego, v_alter, value)``, ``optimum`` holds ``(v_ego, optimum)``."""

    rows: np.ndarray
    optimum: np.ndarray
    header: tuple = field(default=("v_ego", "v_alter", "value"))
    optimum_header: tuple = field(default=("v_ego", "optimum"))

    def write(self, rows_path, optimum_path=None, delimiter=","):
        for path, header, data in (
            (rows_path, self.header, self.rows),
            (optimum_path, self.optimum_header, self.optimum),
        ):
            if path is None:
                continue
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, delimiter=delimiter)
                w.writerow(header)
                for r in data:
                    w.writerow([repr(float(x)) for x in r])


def selection_table(sel, ego_values, alter_grid=101) -> SelectionTable:
    """Selection function on a grid of alter values for each ego value.

    ``alter_grid`` is either a resolution (number of equally spaced points
    over the covariate range) or an explicit array of alter values.
    """
    lo, hi = sel.support.lower, sel.support.upper
    egos = np.asarray(ego_values, dtype=float).ravel()
    if egos.size and (egos.min() < lo - 1e-12 or egos.max() > hi + 1e-12):
        raise ValueError("ego values must lie within the covariate range")
    if np.ndim(alter_grid) == 0:
        if int(alter_grid) < 2:
            raise ValueError("grid resolution must be at least 2")
        alters = np.linspace(lo, hi, int(alter_grid))
    else:
        alters = np.asarray(alter_grid, dtype=float).ravel()
        if alters.size < 2:
            raise ValueError("grid resolution must be at least 2")
    vi, vj = np.meshgrid(egos, alters, indexing="ij")
    values = evaluate(sel, vi, vj)
    rows = np.column_stack([vi.ravel(), vj.ravel(), np.asarray(values).ravel()])
    opt = np.column_stack([egos, np.asarray(optimum_value(sel, egos)).reshape(-1)])
    return SelectionTable(rows, opt)
