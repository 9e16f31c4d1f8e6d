"""Model configuration files and data ingestion.

A configuration is an INI file. Relative paths are resolved against the
directory of the configuration file::

    [data]
    waves = wave1.txt wave2.txt
    actors = actors.txt            ; optional, one label per line

    [covariate:grades]
    file = grades.csv              ; actor_id,value with a header line
    centered = true
    range = from data              ; or "lo hi" on the raw scale

    [effects]
    density = -2.0
    recip = 1.5
    gwesp(alpha=0.69) = 0.3
    quadratic(grades) = -0.03 -0.003 0.044 -0.095 0.026

Effect values are coefficients for ``simulate``; ``estimate`` ignores them
unless ``[estimation] use_start = true``.
"""

from __future__ import annotations

import configparser
import csv
import re
import shlex
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .effects import QUADRATIC_SHORT_NAMES, SHORT_NAMES, EffectSpec, quadratic_effects
from .estimation import EstimationOptions
from .exceptions import ConfigurationError, IngestionError
from .network import ActorCovariate, DirectedNetwork, NetworkPanel

_EFFECT_KEY = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s*$")
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}

ESTIMATION_KEYS = {
    "phase1_runs": int, "phase2_subphases": int, "gain_initial": float, "phase3_runs": int,
    "phase3_derivative_runs": int, "step_fraction": float, "max_restarts": int,
    "conv_threshold": float, "max_conv_threshold": float, "diagonalize": float, "seed": int,
}


@dataclass
class CovariateSpec:
    name: str
    file: Path
    centered: bool = False
    range: Optional[tuple] = None  # raw-scale (lo, hi); None means from data

    def range_text(self) -> str:
        return "from data" if self.range is None else f"{self.range[0]!r} {self.range[1]!r}"


@dataclass
class ModelConfig:
    """A parsed configuration file."""

    path: Optional[Path]
    waves: list = field(default_factory=list)
    actors: Optional[Path] = None
    covariates: list = field(default_factory=list)
    effects: tuple = ()
    coefficients: tuple = ()
    estimation: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)
    selection: dict = field(default_factory=dict)
    gof: dict = field(default_factory=dict)

    @property
    def base_dir(self) -> Path:
        return self.path.parent if self.path is not None else Path.cwd()

    def has_coefficients(self) -> bool:
        return all(c is not None for c in self.coefficients)

    def estimation_options(self, seed=None, n_workers=1) -> EstimationOptions:
        kw = {}
        for key, raw in self.estimation.items():
            if key in ("use_start",):
                continue
            if key not in ESTIMATION_KEYS:
                raise ConfigurationError(f"unknown [estimation] option {key!r}")
            kw[key] = _convert(raw, ESTIMATION_KEYS[key], f"[estimation] {key}")
        if seed is not None:
            kw["seed"] = seed
        return EstimationOptions(n_workers=n_workers, **kw)

    def quadratic_covariates(self) -> list:
        """Covariates for which all five quadratic effects are in the model."""
        out = []
        names = {e.name for e in self.effects}
        for c in dict.fromkeys(e.covariate for e in self.effects if e.covariate):
            if all(f"{s}({c})" in names for s in QUADRATIC_SHORT_NAMES):
                out.append(c)
        return out


def _convert(raw, typ, where):
    try:
        return typ(raw)
    except ValueError:
        raise ConfigurationError(f"{where}: cannot read {raw!r} as {typ.__name__}") from None


def parse_bool(raw, where="") -> bool:
    s = str(raw).strip().lower()
    if s in _TRUE:
        return True
    if s in _FALSE:
        return False
    raise ConfigurationError(f"{where}: expected true/false, got {raw!r}")


def parse_floats(raw, where="") -> list:
    try:
        return [float(t) for t in str(raw).replace(",", " ").split()]
    except ValueError:
        raise ConfigurationError(f"{where}: expected numbers, got {raw!r}") from None


def parse_effect_key(key: str) -> list:
    """Effect specs for one ``[effects]`` key, expanding ``quadratic(V)``."""
    m = _EFFECT_KEY.match(key)
    if not m:
        raise ConfigurationError(f"cannot parse effect {key!r}")
    short, args = m.group(1), m.group(2)
    covariate = None
    alpha = None
    for tok in [a.strip() for a in (args or "").split(",") if a.strip()]:
        if "=" in tok:
            k, v = (s.strip() for s in tok.split("=", 1))
            if k != "alpha":
                raise ConfigurationError(f"effect {key!r}: unknown option {k!r}")
            alpha = _convert(v, float, f"effect {key!r}")
        elif covariate is None:
            covariate = tok
        else:
            raise ConfigurationError(f"effect {key!r}: too many arguments")
    if short == "quadratic":
        if covariate is None:
            raise ConfigurationError("quadratic() needs a covariate name")
        return list(quadratic_effects(covariate))
    if short not in SHORT_NAMES:
        raise ConfigurationError(
            f"unknown effect {short!r}; known: quadratic, {', '.join(SHORT_NAMES)}"
        )
    kw = {} if alpha is None else {"alpha": alpha}
    return [EffectSpec(short, covariate, **kw)]


def load_config(path) -> ModelConfig:
    """Parse a configuration file (no data is read)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"configuration file {path} not found")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    return config_from_parser(cp, path)


def config_from_parser(cp: configparser.ConfigParser, path=None) -> ModelConfig:
    base = Path(path).parent if path is not None else Path.cwd()
    cfg = ModelConfig(path=Path(path) if path is not None else None)
    known = {"data", "effects", "estimation", "simulate", "selection", "gof"}
    for section in cp.sections():
        if section.startswith("covariate:"):
            name = section.split(":", 1)[1].strip()
            sec = cp[section]
            if "file" not in sec:
                raise ConfigurationError(f"[{section}] needs a file")
            rng = sec.get("range", "from data").strip()
            declared = None
            if rng.lower() != "from data":
                vals = parse_floats(rng, f"[{section}] range")
                if len(vals) != 2:
                    raise ConfigurationError(f"[{section}] range must be 'from data' or 'lo hi'")
                declared = (vals[0], vals[1])
            cfg.covariates.append(CovariateSpec(
                name, base / sec["file"], parse_bool(sec.get("centered", "false"),
                                                     f"[{section}] centered"), declared))
        elif section not in known:
            raise ConfigurationError(f"unknown section [{section}]")
    if cp.has_section("data"):
        d = cp["data"]
        cfg.waves = [base / w for w in shlex.split(d.get("waves", ""))]
        if "actors" in d:
            cfg.actors = base / d["actors"]
    if cp.has_section("effects"):
        effects, coefs = [], []
        for key, raw in cp["effects"].items():
            specs = parse_effect_key(key)
            vals = parse_floats(raw, f"[effects] {key}") if raw.strip() else []
            if vals and len(vals) != len(specs):
                raise ConfigurationError(
                    f"[effects] {key}: {len(specs)} coefficient(s) expected, got {len(vals)}")
            effects.extend(specs)
            coefs.extend(vals if vals else [None] * len(specs))
        names = [e.name for e in effects]
        dup = sorted({n for n in names if names.count(n) > 1})
        if dup:
            raise ConfigurationError(f"effects listed twice: {', '.join(dup)}")
        cfg.effects, cfg.coefficients = tuple(effects), tuple(coefs)
    for sec in ("estimation", "simulate", "selection", "gof"):
        if cp.has_section(sec):
            setattr(cfg, sec, dict(cp[sec].items()))
    declared = {c.name for c in cfg.covariates}
    for e in cfg.effects:
        if e.covariate is not None and e.covariate not in declared:
            raise ConfigurationError(f"effect {e.name} uses undeclared covariate {e.covariate!r}")
    return cfg


# --------------------------------------------------------------------------
# reading data


def read_adjacency(path) -> DirectedNetwork:
    """Read a whitespace-separated 0/1 adjacency matrix; blank lines are skipped."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IngestionError(f"cannot read adjacency file: {exc.strerror}", path) from None
    rows, lines = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        toks = line.split()
        if not toks:
            continue
        row = []
        for col, tok in enumerate(toks):
            if tok not in ("0", "1"):
                raise IngestionError(f"entry {tok!r} in column {col + 1} is not 0 or 1",
                                     path, lineno)
            row.append(int(tok))
        if rows and len(row) != len(rows[0]):
            raise IngestionError(f"row has {len(row)} entries, expected {len(rows[0])}",
                                 path, lineno)
        rows.append(row)
        lines.append(lineno)
    if not rows:
        raise IngestionError("empty adjacency file", path)
    if len(rows) != len(rows[0]):
        raise IngestionError(f"matrix is not square: {len(rows)} rows, {len(rows[0])} columns",
                             path, lines[-1])
    if len(rows) < 2:
        raise IngestionError("a network needs at least 2 actors", path)
    for r, row in enumerate(rows):
        if row[r]:
            raise IngestionError(f"self-tie at row {r + 1}, column {r + 1}", path, lines[r])
    return DirectedNetwork(np.array(rows, dtype=np.uint8))


def read_actor_labels(path) -> list:
    path = Path(path)
    try:
        labels = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
    except OSError as exc:
        raise IngestionError(f"cannot read actor file: {exc.strerror}", path) from None
    seen = {}
    for k, lab in enumerate(labels):
        if lab in seen:
            raise IngestionError(f"duplicate actor id {lab!r}", path)
        seen[lab] = k
    return labels


def read_covariate(spec: CovariateSpec, labels) -> ActorCovariate:
    """Read an ``actor_id,value`` file (header line first) into an :class:`ActorCovariate`."""
    path = Path(spec.file)
    index = {lab: k for k, lab in enumerate(labels)}
    values = np.full(len(labels), np.nan)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise IngestionError(f"cannot read covariate file: {exc.strerror}", path) from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise IngestionError("empty covariate file", path)
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise IngestionError(f"expected 2 columns, got {len(row)}", path, lineno)
            actor, raw = row[0].strip(), row[1].strip()
            if actor not in index:
                raise IngestionError(f"unknown actor id {actor!r}", path, lineno)
            k = index[actor]
            if not np.isnan(values[k]):
                raise IngestionError(f"actor {actor!r} listed twice", path, lineno)
            try:
                values[k] = float(raw)
            except ValueError:
                raise IngestionError(f"value {raw!r} is not a number", path, lineno) from None
            if not np.isfinite(values[k]):
                raise IngestionError(f"value {raw!r} is not finite", path, lineno)
    missing = [labels[k] for k in np.flatnonzero(np.isnan(values))]
    if missing:
        raise IngestionError(f"no value for actor(s) {', '.join(missing[:5])}", path)
    lo, hi = (None, None) if spec.range is None else spec.range
    if spec.range is not None and (values.min() < lo or values.max() > hi):
        raise IngestionError(
            f"declared range [{lo:g}, {hi:g}] is narrower than the data "
            f"[{values.min():g}, {values.max():g}]", path)
    try:
        return ActorCovariate.from_values(values, spec.centered, lo, hi)
    except ValueError as exc:
        raise IngestionError(str(exc), path) from None


def ingest(cfg: ModelConfig, min_waves: int = 2) -> NetworkPanel:
    """Read the waves, actor labels and covariates named in ``cfg``."""
    if len(cfg.waves) < min_waves:
        raise ConfigurationError(f"[data] waves must list at least {min_waves} file(s)")
    waves = [read_adjacency(p) for p in cfg.waves]
    n = waves[0].n
    for p, w in zip(cfg.waves, waves):
        if w.n != n:
            raise IngestionError(f"wave has {w.n} actors, the first wave has {n}", p)
    labels = read_actor_labels(cfg.actors) if cfg.actors else [str(k + 1) for k in range(n)]
    if len(labels) != n:
        raise IngestionError(f"{len(labels)} actor ids for {n} actors", cfg.actors)
    covs = {c.name: read_covariate(c, labels) for c in cfg.covariates}
    return NetworkPanel(tuple(waves), covs, tuple(labels))


# --------------------------------------------------------------------------
# writing data


def write_adjacency(net: DirectedNetwork, path) -> None:
    np.savetxt(path, net.ties, fmt="%d", delimiter=" ")


def write_panel(panel: NetworkPanel, out_dir, specs=(), prefix="wave") -> Path:
    """Write a panel as adjacency and covariate files plus a re-ingestable config.

    ``specs`` carries the centering and range declarations of the
    covariates; covariates without a spec are written as uncentered with a
    range from the data. Returns the path of the written config.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for m, w in enumerate(panel.waves, start=1):
        write_adjacency(w, out / f"{prefix}{m}.txt")
        names.append(f"{prefix}{m}.txt")
    (out / "actors.txt").write_text("".join(f"{lab}\n" for lab in panel.actor_labels))
    by_name = {s.name: s for s in specs}
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["data"] = {"waves": " ".join(names), "actors": "actors.txt"}
    for name, cov in panel.covariates.items():
        spec = by_name.get(name, CovariateSpec(name, Path(), cov.centered, None))
        fname = f"covariate_{name}.csv"
        with (out / fname).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["actor_id", "value"])
            raw = cov.raw_values
            for lab, v in zip(panel.actor_labels, raw):
                w.writerow([lab, repr(float(v))])
        cp[f"covariate:{name}"] = {"file": fname, "centered": str(spec.centered).lower(),
                                   "range": spec.range_text()}
    cfg_path = out / "panel.ini"
    with cfg_path.open("w") as fh:
        cp.write(fh)
    return cfg_path

