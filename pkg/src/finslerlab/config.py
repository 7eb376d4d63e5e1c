"""TOML run configuration: schema, validation and round-trip serialization.

A run file names one task and the blocks it needs::

    task = "gauss-bonnet"

    [metric]
    family = "randers"
    params = { b1 = 0.2 }

    [domain]
    kind = "disk"
    radius = 1.0

    [numerics]
    mode = "general"
    side = "left"

Blocks: ``metric`` (always), ``point`` (jet, invariants, indicatrix,
angle), ``curve`` (trace), ``domain`` (gauss-bonnet), ``experiment``
(hadamard, corner-bound), ``numerics`` and ``output`` (any task).  Every
block has documented defaults; unknown keys and blocks that the task does
not use are rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields, replace

import tomli_w

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, FinslerError
from .experiments import DEFAULT_SEED, DETECTORS
from .metric import _PARAM_DEFAULTS, FAMILIES, MetricSpec

TASKS = ("jet", "invariants", "indicatrix", "angle", "trace", "gauss-bonnet", "hadamard", "corner-bound")
POINT_TASKS = ("jet", "invariants", "indicatrix", "angle")
TASK_BLOCK = {**{t: "point" for t in POINT_TASKS}, "trace": "curve", "gauss-bonnet": "domain",
              "hadamard": "experiment", "corner-bound": "experiment"}
CURVE_KINDS = ("geodesic", "n-parallel", "circle")
DOMAIN_KINDS = ("disk", "square", "triangle", "polygon", "half-disk", "annulus")
SIDES = {"left": 1, "right": -1}


def _vec(v, where: str, n: int = 2) -> tuple:
    if not isinstance(v, (list, tuple)) or len(v) != n or not all(isinstance(a, (int, float))
                                                                   and not isinstance(a, bool) for a in v):
        raise ConfigError(f"expected a list of {n} numbers", where)
    return tuple(float(a) for a in v)


def _num(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError("expected a number", where)
    return float(v)


def _int(v, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError("expected an integer", where)
    return int(v)


def _positive(v: float, where: str) -> float:
    if not v > 0:
        raise ConfigError("must be positive", where)
    return v


@dataclass(frozen=True)
class PointBlock:
    x: tuple = (0.0, 0.0)
    y: tuple = (0.6, 0.8)
    X: tuple = (1.0, 0.0)  # angle task: first vector
    Y: tuple = (0.0, 1.0)  # angle task: second vector
    n: int = 64  # indicatrix samples written to CSV


@dataclass(frozen=True)
class CurveBlock:
    kind: str = "n-parallel"
    x0: tuple = (0.0, 0.0)
    T0: tuple = (1.0, 0.0)  # direction, normalized to unit Finsler length
    t_span: tuple = (0.0, 1.0)
    n_samples: int = 201
    center: tuple = (0.0, 0.0)  # circle only
    radius: float = 1.0  # circle only


@dataclass(frozen=True)
class DomainBlock:
    kind: str = "disk"
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    lower: tuple = (0.0, 0.0)
    side_length: float = 1.0
    vertices: tuple = ()
    r_inner: float = 0.5
    r_outer: float = 1.0

    def build(self):
        from . import domain as D

        if self.kind == "disk":
            return D.disk(self.center, self.radius)
        if self.kind == "half-disk":
            return D.half_disk(self.center, self.radius)
        if self.kind == "square":
            return D.square(self.lower, self.side_length)
        if self.kind == "annulus":
            return D.annulus(self.center, self.r_inner, self.r_outer)
        if self.kind == "triangle":
            if len(self.vertices) != 3:
                raise ConfigError("a triangle needs exactly 3 vertices", "domain.vertices")
            return D.triangle(*self.vertices)
        if len(self.vertices) < 3:
            raise ConfigError("a polygon needs at least 3 vertices", "domain.vertices")
        return D.polygon(self.vertices)


@dataclass(frozen=True)
class ExperimentBlock:
    n_rays: int = 32
    horizon: float = 100.0
    box: float = 1.0
    n_samples: int = 2001
    n_pairs: int = 1000
    detectors: tuple = DETECTORS
    initial: tuple = ()  # rows [x1, x2, v1, v2]
    probe_half_width: float = 2.0
    probe_n: int = 9
    probe_dirs: int = 8
    k_tol: float = 1e-7
    oracle_tol: float = 1e-5


@dataclass(frozen=True)
class NumericsBlock:
    tol: float = 1e-10
    grid: int = 20000  # minimum triangle count
    levels: int | None = None  # explicit refinement depth overrides grid
    coarse: int = 24
    side: str = "left"
    seed: int = DEFAULT_SEED
    mode: str = "landsberg"
    rule: str = "centroid"
    field_kind: str = "blended"
    field_zero: tuple = (0.0, 0.0)
    collar: float = 0.3
    rtol: float = 1e-9
    atol: float = 1e-12
    gb_tol: float = 1e-3  # residual above which a gauss-bonnet run fails

    @property
    def side_sign(self) -> int:
        return SIDES[self.side]


@dataclass(frozen=True)
class OutputBlock:
    dir: str = "fsl-out"
    formats: tuple = ("json", "csv")


@dataclass(frozen=True)
class RunConfig:
    task: str
    metric: MetricSpec
    point: PointBlock | None = None
    curve: CurveBlock | None = None
    domain: DomainBlock | None = None
    experiment: ExperimentBlock | None = None
    numerics: NumericsBlock = field(default_factory=NumericsBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    def to_dict(self) -> dict:
        out = {"task": self.task, "metric": self.metric.to_dict()}
        for name in ("point", "curve", "domain", "experiment", "numerics", "output"):
            block = getattr(self, name)
            if block is not None:
                out[name] = _block_dict(block)
        return out

    def with_overrides(self, **numerics) -> "RunConfig":
        """Copy with numerics fields replaced (None values are ignored)."""
        vals = {k: v for k, v in numerics.items() if v is not None}
        if not vals:
            return self
        raw = {**_block_dict(self.numerics), **vals}
        return replace(self, numerics=_parse_numerics(raw, "numerics"))


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(a) for a in v]
    return v


def _block_dict(block) -> dict:
    return {f.name: _plain(getattr(block, f.name)) for f in fields(block)
            if getattr(block, f.name) is not None}


# -- parsing -------------------------------------------------------------------------

def _key_line(text: str | None, key: str) -> str:
    if not text:
        return ""
    pat = re.compile(r"^\s*" + re.escape(key) + r"\s*=|[{,]\s*" + re.escape(key) + r"\s*=")
    for i, line in enumerate(text.splitlines(), 1):
        if pat.search(line):
            return f" (line {i})"
    return ""


def _header_line(text: str | None, name: str) -> str:
    if not text:
        return ""
    pat = re.compile(r"^\s*\[\s*" + re.escape(name) + r"\s*[\].]")
    for i, line in enumerate(text.splitlines(), 1):
        if pat.search(line):
            return f" (line {i})"
    return ""


def _check_keys(raw: dict, allowed, where: str, text: str | None):
    for k in raw:
        if k not in allowed:
            loc = f"{where}.{k}" if where else k
            raise ConfigError(f"unknown key {k!r}", loc + (_key_line(text, k) or _header_line(text, k)))


def _table(raw, where: str) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("expected a table", where)
    return raw


def _parse_metric(raw, text) -> MetricSpec:
    raw = _table(raw, "metric")
    _check_keys(raw, ("family", "params"), "metric", text)
    fam = raw.get("family")
    if fam not in FAMILIES:
        raise ConfigError(f"family must be one of {FAMILIES}", "metric.family")
    params = _table(raw.get("params", {}), "metric.params")
    _check_keys(params, _PARAM_DEFAULTS[fam], "metric.params", text)
    for k, v in params.items():
        _num(v, f"metric.params.{k}")
    try:
        return MetricSpec(fam, dict(params))
    except FinslerError as exc:
        raise ConfigError(str(exc), "metric.params") from exc


def _parse_simple(cls, raw, where: str, text, special=None) -> object:
    """Generic block parser: defaults from the dataclass, types from the defaults."""
    raw = _table(raw, where)
    names = [f.name for f in fields(cls)]
    _check_keys(raw, names, where, text)
    special = special or {}
    vals = {}
    defaults = cls()
    for k, v in raw.items():
        loc = f"{where}.{k}"
        if k in special:
            vals[k] = special[k](v, loc)
            continue
        d = getattr(defaults, k)
        if isinstance(d, bool):
            if not isinstance(v, bool):
                raise ConfigError("expected true or false", loc)
            vals[k] = v
        elif isinstance(d, int):
            vals[k] = _int(v, loc)
        elif isinstance(d, float):
            vals[k] = _num(v, loc)
        elif isinstance(d, str):
            if not isinstance(v, str):
                raise ConfigError("expected a string", loc)
            vals[k] = v
        elif isinstance(d, tuple) and len(d) == 2 and all(isinstance(a, float) for a in d):
            vals[k] = _vec(v, loc)
        else:
            raise ConfigError("unsupported value", loc)
    return cls(**vals)


def _choice(options):
    def check(v, loc):
        if v not in options:
            raise ConfigError(f"must be one of {tuple(options)}", loc)
        return v
    return check


def _vertices(v, loc):
    if not isinstance(v, list):
        raise ConfigError("expected a list of [x, y] pairs", loc)
    return tuple(_vec(p, f"{loc}[{i}]") for i, p in enumerate(v))


def _initial(v, loc):
    if not isinstance(v, list):
        raise ConfigError("expected a list of [x1, x2, v1, v2] rows", loc)
    return tuple(_vec(p, f"{loc}[{i}]", 4) for i, p in enumerate(v))


def _detectors(v, loc):
    if not isinstance(v, list) or any(d not in DETECTORS for d in v):
        raise ConfigError(f"expected a subset of {DETECTORS}", loc)
    return tuple(v)


def _formats(v, loc):
    if not isinstance(v, list) or any(f not in ("json", "csv") for f in v):
        raise ConfigError("expected a subset of ['json', 'csv']", loc)
    return tuple(v)


def _opt_int(v, loc):
    return _int(v, loc)


def _parse_numerics(raw, where, text=None) -> NumericsBlock:
    nb = _parse_simple(NumericsBlock, raw, where, text, special={
        "levels": _opt_int, "side": _choice(SIDES), "mode": _choice(("landsberg", "general")),
        "rule": _choice(("centroid", "edge-midpoint")),
        "field_kind": _choice(("radial", "sink", "saddle", "rotational", "blended")),
    })
    for k in ("tol", "rtol", "atol", "gb_tol", "collar"):
        _positive(getattr(nb, k), f"{where}.{k}")
    if nb.grid < 1:
        raise ConfigError("must be positive", f"{where}.grid")
    if nb.levels is not None and nb.levels < 0:
        raise ConfigError("must be non-negative", f"{where}.levels")
    return nb


def config_from_dict(raw: dict, text: str | None = None) -> RunConfig:
    blocks = ("task", "metric", "point", "curve", "domain", "experiment", "numerics", "output")
    _check_keys(raw, blocks, "", text)
    task = raw.get("task")
    if task not in TASKS:
        raise ConfigError(f"task must be exactly one of {TASKS}", "task")
    if "metric" not in raw:
        raise ConfigError("missing [metric] block", "metric")
    needed = TASK_BLOCK[task]
    for b in ("point", "curve", "domain", "experiment"):
        if b in raw and b != needed:
            raise ConfigError(f"unexpected block [{b}] for task {task!r}", b + _header_line(text, b))
    if needed in ("curve", "domain") and needed not in raw:
        raise ConfigError(f"task {task!r} needs a [{needed}] block", needed)
    metric = _parse_metric(raw["metric"], text)
    kw = {"task": task, "metric": metric}
    if needed == "point":
        kw["point"] = _parse_simple(PointBlock, raw.get("point", {}), "point", text)
        if kw["point"].n < 16:
            raise ConfigError("must be at least 16", "point.n")
    elif needed == "curve":
        cb = _parse_simple(CurveBlock, raw["curve"], "curve", text,
                           special={"kind": _choice(CURVE_KINDS)})
        if cb.n_samples < 4:
            raise ConfigError("must be at least 4", "curve.n_samples")
        if not cb.t_span[1] > cb.t_span[0]:
            raise ConfigError("t_span must be increasing", "curve.t_span")
        _positive(cb.radius, "curve.radius")
        kw["curve"] = cb
    elif needed == "domain":
        kw["domain"] = _parse_simple(DomainBlock, raw["domain"], "domain", text,
                                     special={"kind": _choice(DOMAIN_KINDS), "vertices": _vertices})
    else:
        eb = _parse_simple(ExperimentBlock, raw.get("experiment", {}), "experiment", text,
                           special={"initial": _initial, "detectors": _detectors})
        _positive(eb.horizon, "experiment.horizon")
        _positive(eb.box, "experiment.box")
        for k in ("n_rays", "n_samples", "n_pairs", "probe_n", "probe_dirs"):
            if getattr(eb, k) < 1:
                raise ConfigError("must be positive", f"experiment.{k}")
        kw["experiment"] = eb
    kw["numerics"] = _parse_numerics(raw.get("numerics", {}), "numerics", text)
    kw["output"] = _parse_simple(OutputBlock, raw.get("output", {}), "output", text,
                                 special={"formats": _formats})
    return RunConfig(**kw)


def parse_config(text: str) -> RunConfig:
    """Parse and validate TOML text into a RunConfig."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        msg = str(exc)
        m = re.search(r"\(at line (\d+), column (\d+)\)", msg)
        loc = f"line {m.group(1)}, column {m.group(2)}" if m else None
        raise ConfigError(f"parse error: {msg}", loc) from exc
    return config_from_dict(raw, text)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def serialize_config(cfg: RunConfig) -> str:
    """TOML text that parses back to an equal RunConfig."""
    return tomli_w.dumps(cfg.to_dict())


def default_config(task: str, metric: MetricSpec | None = None) -> RunConfig:
    """Config with every block at its defaults (a unit disk for gauss-bonnet)."""
    raw = {"task": task, "metric": (metric or MetricSpec.euclidean()).to_dict()}
    if task in TASK_BLOCK and TASK_BLOCK[task] in ("curve", "domain"):
        raw[TASK_BLOCK[task]] = {}
    return config_from_dict(raw)
