"""Run configuration: flat key = value files plus command-line overrides.

Schema (dotted keys, '#' comments, blank lines ignored):

  eps                       period, written as a fraction "1/8" or a float
  dt, t_end                 time step and final time
  mesh.n_cell, mesh.n_macro, mesh.n_fine
  geometry.kind             disk | axis_cross | stripes   (default disk)
  geometry.cx, geometry.cy, geometry.radius               (disk)
  geometry.half_width                                     (axis_cross)
  geometry.direction, geometry.width                      (stripes)
  material.{c1,c2,k1,k2,Q1,Q2}.{matrix,inclusion}
  q, g1, g2, bc             scalars or expressions of x, y, t
  solver.tol                linear-solve relative tolerance (default 1e-10)
  flags.k2bar_uses_M2       bool, default false
  flags.strict_paper_signs  bool, default true
  output.times              comma list of snapshot times (default t_end)
  output.every              error-series thinning stride (default 1)
"""

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .materials import MaterialSpec, PhasePair
from .mesh import InclusionSpec

_EXPR_NAMES = {
    "pi": math.pi,
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
}


def as_field(value, key="value"):
    """Turn a scalar or expression string into f(x, y, t) -> array."""
    if isinstance(value, (int, float)):
        const = float(value)

        def fn(x, y, t):
            return np.full(np.shape(x), const)

        fn.is_constant = True
        fn.constant = const
        return fn
    try:
        code = compile(str(value), f"<{key}>", "eval")
    except SyntaxError as exc:
        raise ConfigError(f"{key}: invalid expression {value!r}") from exc

    def fn(x, y, t):
        ns = dict(_EXPR_NAMES)
        ns.update({"x": x, "y": y, "t": t})
        out = eval(code, {"__builtins__": {}}, ns)
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(x)).copy()

    fn.is_constant = False
    fn.constant = None
    return fn


@dataclass
class RunConfig:
    """Validated inputs for one full pipeline run."""

    eps: float
    n_macro: int
    n_cell: int
    n_fine: int
    dt: float
    t_end: float
    materials: MaterialSpec
    geometry: InclusionSpec
    q: object = 0.0
    g1: object = 0.0
    g2: object = 0.0
    bc: object = 0.0
    tol: float = 1e-10
    k2bar_uses_M2: bool = False
    strict_paper_signs: bool = True
    output_times: tuple = ()
    output_every: int = 1
    raw: dict = field(default_factory=dict)

    def __post_init__(self):
        k = round(1.0 / self.eps) if self.eps > 0 else 0
        if k < 2 or abs(k * self.eps - 1.0) > 1e-9:
            raise ConfigError(f"eps: must equal 1/k for integer k >= 2, got {self.eps}")
        self.period_count = int(k)
        if self.n_fine % self.period_count != 0:
            raise ConfigError(
                f"mesh.n_fine: {self.n_fine} not divisible by 1/eps = {self.period_count}"
            )
        for key, n in (("mesh.n_macro", self.n_macro), ("mesh.n_cell", self.n_cell)):
            if n < 1:
                raise ConfigError(f"{key}: must be >= 1, got {n}")
        if self.dt <= 0:
            raise ConfigError(f"dt: must be positive, got {self.dt}")
        if self.t_end < self.dt:
            raise ConfigError(f"t_end: must be >= dt, got {self.t_end}")
        if not (0.0 < self.tol <= 1e-4):
            raise ConfigError(f"solver.tol: must lie in (0, 1e-4], got {self.tol}")
        if self.output_every < 1:
            raise ConfigError("output.every: must be >= 1")
        self.q_fn = as_field(self.q, "q")
        self.g1_fn = as_field(self.g1, "g1")
        self.g2_fn = as_field(self.g2, "g2")
        self.bc_fn = as_field(self.bc, "bc")
        if not self.output_times:
            self.output_times = (self.num_steps * self.dt,)

    @property
    def num_steps(self):
        return int(round(self.t_end / self.dt))

    def cells_key(self):
        payload = (
            f"cell:{self.n_cell};geom:{self.geometry.key()};"
            f"mat:{self.materials.key()};tol:{self.tol!r};"
            f"m2:{self.k2bar_uses_M2};strict:{self.strict_paper_signs}"
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def reference_key(self):
        payload = (
            f"ref;eps:{self.eps!r};nf:{self.n_fine};dt:{self.dt!r};"
            f"T:{self.t_end!r};q:{self.q!r};g1:{self.g1!r};g2:{self.g2!r};"
            f"bc:{self.bc!r};geom:{self.geometry.key()};"
            f"mat:{self.materials.key()};tol:{self.tol!r}"
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _parse_scalar(key, text):
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        try:
            return float(num) / float(den)
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot parse fraction {text!r}") from exc
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse number {text!r}") from exc


def _parse_bool(key, text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: cannot parse boolean {text!r}")


def read_keyvalues(path):
    """Read a flat key = value file into an ordered dict of strings."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = stripped.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _geometry_from(kv):
    kind = kv.get("geometry.kind", "disk")
    if kind == "disk":
        return InclusionSpec(
            kind="disk",
            center=(
                _parse_scalar("geometry.cx", kv.get("geometry.cx", "0.5")),
                _parse_scalar("geometry.cy", kv.get("geometry.cy", "0.5")),
            ),
            radius=_parse_scalar("geometry.radius", kv.get("geometry.radius", "0.25")),
        )
    if kind == "axis_cross":
        return InclusionSpec(
            kind="axis_cross",
            half_width=_parse_scalar(
                "geometry.half_width", kv.get("geometry.half_width", "0.125")
            ),
        )
    if kind == "stripes":
        return InclusionSpec(
            kind="stripes",
            direction=int(_parse_scalar("geometry.direction",
                                        kv.get("geometry.direction", "0"))),
            width=_parse_scalar("geometry.width", kv.get("geometry.width", "0.25")),
        )
    raise ConfigError(f"geometry.kind: unknown kind {kind!r}")


def _materials_from(kv):
    pairs = {}
    for name in ("c1", "c2", "k1", "k2", "Q1", "Q2"):
        vals = []
        for phase in ("matrix", "inclusion"):
            key = f"material.{name}.{phase}"
            if key not in kv:
                raise ConfigError(f"{key}: missing required material value")
            vals.append(_parse_scalar(key, kv[key]))
        pairs[name] = PhasePair(*vals)
    return MaterialSpec(
        c=(pairs["c1"], pairs["c2"]),
        kappa=(pairs["k1"], pairs["k2"]),
        q_exchange=(pairs["Q1"], pairs["Q2"]),
    )


def _source_value(kv, key, default):
    raw = kv.get(key)
    if raw is None:
        return default
    try:
        return _parse_scalar(key, raw)
    except ConfigError:
        return raw  # expression string


def config_from_keyvalues(kv):
    required = ("eps", "dt", "t_end", "mesh.n_cell", "mesh.n_macro", "mesh.n_fine")
    for key in required:
        if key not in kv:
            raise ConfigError(f"{key}: missing required key")
    out_times = ()
    if "output.times" in kv:
        out_times = tuple(
            _parse_scalar("output.times", part)
            for part in kv["output.times"].split(",") if part.strip()
        )
    return RunConfig(
        eps=_parse_scalar("eps", kv["eps"]),
        n_macro=int(_parse_scalar("mesh.n_macro", kv["mesh.n_macro"])),
        n_cell=int(_parse_scalar("mesh.n_cell", kv["mesh.n_cell"])),
        n_fine=int(_parse_scalar("mesh.n_fine", kv["mesh.n_fine"])),
        dt=_parse_scalar("dt", kv["dt"]),
        t_end=_parse_scalar("t_end", kv["t_end"]),
        materials=_materials_from(kv),
        geometry=_geometry_from(kv),
        q=_source_value(kv, "q", 0.0),
        g1=_source_value(kv, "g1", 0.0),
        g2=_source_value(kv, "g2", 0.0),
        bc=_source_value(kv, "bc", 0.0),
        tol=_parse_scalar("solver.tol", kv.get("solver.tol", "1e-10")),
        k2bar_uses_M2=_parse_bool(
            "flags.k2bar_uses_M2", kv.get("flags.k2bar_uses_M2", "false")
        ),
        strict_paper_signs=_parse_bool(
            "flags.strict_paper_signs", kv.get("flags.strict_paper_signs", "true")
        ),
        output_times=out_times,
        output_every=int(_parse_scalar("output.every", kv.get("output.every", "1"))),
        raw=dict(kv),
    )


def load_config(path, overrides=None):
    """Load a config file and apply ``key=value`` override strings."""
    kv = read_keyvalues(path)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, value = item.split("=", 1)
        kv[key.strip()] = value.strip()
    return config_from_keyvalues(kv)
