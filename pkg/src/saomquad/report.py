"""Selection-analysis report bundles.

:func:`analyze_selection` collects everything known about one quadratic
selection function into a JSON-ready dictionary; :func:`write_selection_bundle`
writes it together with a plain-text summary and the plot tables.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .effects import QUADRATIC_SHORT_NAMES
from .exceptions import ConfigurationError, DegenerateWeightsError, UndefinedNormError
from .network import CovariateRange
from .selection import (
    QuadraticSelection,
    argmax,
    attraction_weights,
    classify_aspiration,
    classify_sociability,
    optimum_value,
    selection_table,
    social_norm,
)

NORM_UNDEFINED = "norm undefined"
THETA_LABELS = ("theta1", "theta2", "theta3", "theta4", "theta5")


def selection_from_result(result, covariate: str, support: CovariateRange):
    """Pull the five quadratic parameters of ``covariate`` and their covariance from a fit.

    Raises :class:`ConfigurationError` listing the required shortNames if
    any of them is missing.
    """
    wanted = [f"{s}({covariate})" for s in QUADRATIC_SHORT_NAMES]
    missing = [w for w in wanted if w not in result.names]
    if missing:
        raise ConfigurationError(
            f"selection analysis of {covariate!r} needs the effects "
            f"{', '.join(QUADRATIC_SHORT_NAMES)}; missing: {', '.join(missing)}"
        )
    idx = [result.names.index(w) for w in wanted]
    theta = result.theta[idx]
    cov = result.covariance[np.ix_(idx, idx)]
    return QuadraticSelection(tuple(theta), support), cov


def _test_dict(t):
    return {
        "coefficients": list(t.coefficients),
        "value": t.value,
        "std_error": t.std_error,
        "z": t.z,
        "p_value": t.p_value,
        "satisfied": t.satisfied,
    }


def analyze_selection(sel: QuadraticSelection, covariance=None, covariate: str = "V",
                      ego_values=None, grid_resolution: int = 101, alpha: float = 0.05):
    """Full interpretation of a quadratic selection function.

    Returns ``(report, table)`` where ``report`` is a JSON-ready dict and
    ``table`` the :class:`~saomquad.selection.SelectionTable` for the ego
    values (five equally spaced values over the range by default).
    """
    sup = sel.support
    cov = None if covariance is None else np.asarray(covariance, dtype=float)
    if ego_values is None:
        ego_values = np.linspace(sup.lower, sup.upper, 5)
    egos = np.asarray(ego_values, dtype=float)

    try:
        norm = social_norm(sel, cov)
        norm_d = {"undefined": False, "value": norm.value, "std_error": norm.std_error,
                  "in_range": norm.in_range}
    except UndefinedNormError:
        norm_d = {"undefined": True, "marker": NORM_UNDEFINED, "value": None,
                  "std_error": None, "in_range": None}
    try:
        w_h, w_n = attraction_weights(sel)
        weights = {"homophily": w_h, "norm": w_n}
    except DegenerateWeightsError:
        weights = None
    asp = classify_aspiration(sel, cov, alpha)
    soc = classify_sociability(sel, grid_resolution)

    homophily = "present" if sel.theta1 < 0 else "none"
    conformity = "present" if sel.theta2 < 0 and not norm_d["undefined"] else "none"
    sociability = "strong" if soc.strong else ("weak" if soc.weak else "none")

    optimum = []
    for vi in egos:
        optimum.append({"v_ego": float(vi), "ideal_point": float(argmax(sel, vi)),
                        "optimum": float(optimum_value(sel, vi))})

    se = None if cov is None else np.sqrt(np.clip(np.diag(cov)[:5], 0, None)).tolist()
    report = {
        "covariate": covariate,
        "range": {"lower": sup.lower, "upper": sup.upper, "mean": sup.mean},
        "theta": dict(zip(THETA_LABELS, sel.theta)),
        "std_errors": dict(zip(THETA_LABELS, se)) if se is not None else None,
        "unimodal": sel.is_unimodal,
        "social_norm": norm_d,
        "attraction_weights": weights,
        "aspiration": {
            "level": asp.level,
            "alpha": alpha,
            "tests": {k: _test_dict(t) for k, t in asp.tests.items()},
            "significant": asp.significant,
        },
        "sociability": {
            "strong": soc.strong,
            "weak": soc.weak,
            "min_ego_derivative": soc.min_derivative,
            "min_optimum_slope": soc.min_optimum_slope,
        },
        "verdicts": {
            "homophily": homophily,
            "attachment_conformity": conformity,
            "aspiration": asp.level,
            "sociability": sociability,
        },
        "optimum": optimum,
        "optimum_curve": soc.optimum_curve.tolist(),
    }
    table = selection_table(sel, egos, grid_resolution)
    return report, table


def _fmt(x, digits=4):
    return "NA" if x is None else f"{x:.{digits}g}"


def selection_summary(report: dict) -> str:
    """Plain-text interpretation of a report from :func:`analyze_selection`."""
    r = report
    th = r["theta"]
    se = r["std_errors"] or {}
    lo, hi = r["range"]["lower"], r["range"]["upper"]
    lines = [f"Selection function for {r['covariate']} (range [{lo:g}, {hi:g}], "
             f"mean {r['range']['mean']:g})", ""]
    for k in THETA_LABELS:
        lines.append(f"  {k} = {th[k]: .5g}" + (f"  (s.e. {se[k]:.3g})" if k in se else ""))
    lines.append("")
    lines.append(f"1. Homophily: {r['verdicts']['homophily']} (theta1 = {th['theta1']:.4g}).")
    n = r["social_norm"]
    if n["undefined"]:
        lines.append(f"2. Attachment conformity: {NORM_UNDEFINED} (theta2 = 0).")
    else:
        where = "inside" if n["in_range"] else "outside"
        se_txt = f", s.e. {n['std_error']:.3g}" if n["std_error"] is not None else ""
        lines.append(f"2. Attachment conformity: {r['verdicts']['attachment_conformity']}; "
                     f"social norm {n['value']:.4g}{se_txt}, {where} the range.")
    w = r["attraction_weights"]
    if w is None:
        lines.append("3. Attraction weights: undefined (theta1 + theta2 = 0).")
    else:
        lines.append(f"3. Attraction weights: own value {w['homophily']:.3f}, "
                     f"norm {w['norm']:.3f}.")
    a = r["aspiration"]
    lines.append(f"4. Aspiration: {a['level']}.")
    for k, t in a["tests"].items():
        lines.append(f"     {k:6s} combination {t['value']: .4g}  s.e. {_fmt(t['std_error'], 3)}"
                     f"  one-sided p {_fmt(t['p_value'], 3)}")
    s = r["sociability"]
    lines.append(f"5. Sociability: {r['verdicts']['sociability']} (strong: {s['strong']}, "
                 f"weak: {s['weak']}).")
    lines.append("6. Ideal points:")
    for o in r["optimum"]:
        lines.append(f"     ego {o['v_ego']: .3g}: ideal alter {_fmt(o['ideal_point'])}, "
                     f"optimum {o['optimum']:.4g}")
    return "\n".join(lines) + "\n"


def write_selection_bundle(report: dict, table, out_dir, prefix: str = "") -> dict:
    """Write ``selection_report.json``, ``selection_summary.txt``,
    ``selection_table.csv`` and ``optimum_curve.csv``; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out / f"{prefix}selection_report.json",
        "summary": out / f"{prefix}selection_summary.txt",
        "table": out / f"{prefix}selection_table.csv",
        "optimum_curve": out / f"{prefix}optimum_curve.csv",
    }
    report = dict(report)
    report["files"] = {k: p.name for k, p in paths.items()}
    paths["report"].write_text(json.dumps(report, indent=2))
    paths["summary"].write_text(selection_summary(report))
    table.write(paths["table"])
    curve = np.asarray(report["optimum_curve"])
    with paths["optimum_curve"].open("w") as fh:
        fh.write("v_ego,optimum\n")
        for vi, v in curve:
            fh.write(f"{float(vi)!r},{float(v)!r}\n")
    return paths
