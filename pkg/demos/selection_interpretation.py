"""Interpreting fitted quadratic selection functions.

Walks through the interpretation tools on two parameter rows: a grades
covariate on [-6, 4] and an age covariate on [-5, 11], both centred.
Run with ``python demos/selection_interpretation.py``.
"""

import numpy as np

from saomquad import (
    CovariateRange,
    QuadraticSelection,
    attraction_weights,
    classify_aspiration,
    classify_sociability,
    optimum_location,
    social_norm,
)
from saomquad.report import analyze_selection, selection_summary

# %% The two selection functions
grades = QuadraticSelection((-0.0288, -0.003, 0.044, -0.095, 0.026), CovariateRange(-6, 4))
age = QuadraticSelection((-0.0014, -0.0070, 0.039, 0.038, -0.0071), CovariateRange(-5, 11))
grades_se = np.array([0.0073, 0.003, 0.01, 0.02, 0.01])
age_se = np.array([0.0013, 0.0045, 0.019, 0.02, 0.004])

# %% Social norm and its delta-method standard error
for name, sel, se in (("grades", grades, grades_se), ("age", age, age_se)):
    norm = social_norm(sel, np.diag(se**2))
    where = "inside" if norm.in_range else "outside"
    print(f"{name:6s} norm {norm.value:6.3f} (s.e. {norm.std_error:.3f}), {where} the range")

# %% How much of the pull goes to similarity versus the norm
h, n = attraction_weights(grades)
print(f"grades attraction weights: own value {h:.3f}, norm {n:.3f}")

# %% Ideal alters along the ego range
for vi in (-6.0, -2.0, 0.0, 2.0, 4.0):
    loc, clamped = optimum_location(grades, vi)
    flag = " (at the boundary)" if clamped else ""
    print(f"ego {vi:5.1f}: ideal alter {loc:6.3f}{flag}")

# %% Aspiration and sociability verdicts
print("grades aspiration:", classify_aspiration(grades).level)
print("age aspiration:   ", classify_aspiration(age).level)
soc = classify_sociability(grades)
print(f"grades sociability: strong {soc.strong}, weak {soc.weak}")

# %% Everything at once, as the command-line tool reports it
report, table = analyze_selection(grades, np.diag(grades_se**2), "grades")
print()
print(selection_summary(report))
print(f"selection table: {table.rows.shape[0]} rows (ego, alter, value)")
