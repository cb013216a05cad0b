"""Scenario files: field expressions, automorphism, sampling, suites, tolerances.

Scenarios are TOML documents (JSON is accepted too)::

    name = "flat_vacuum"
    suites = ["conservation"]   # optional, default all

    [constants]
    k = 1.0
    alpha = 1.0
    m = 1.0

    [fields]
    theta = ["1", "0", ...]     # 16, index 4*a + mu
    omega = ["0", ...]          # 24, plane-major over (01 02 03 12 13 23)
    psi = ["0", ...]            # 8, (re, im) pairs

    [automorphism]
    mode = "kosmann"            # or "explicit" with xi_v = [6 Exprs]
    xi = ["0", "-x2", "x1", "0"]
    perturb = { plane = 0, amount = 0.1 }   # optional

    [sampling]
    lo = [-1, -1, -1, -1]
    hi = [1, 1, 1, 1]
    points = 4
    seed = 7

    [lattice]                   # optional, used by jacobi-selfadjoint
    dims = [8, 1, 1, 1]
    periods = [6.283185307179586, 1, 1, 1]
    pairs = 2
    components = "psi"          # or "all"

    [tolerances]                # optional overrides
    exact = 1e-11
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .fieldlang import Expr, ExprSyntaxError, constant_names, parse_expression
from .geometry import N_OMEGA, N_PSI, N_THETA, FieldConfig
from .lifts import InfinitesimalAutomorphism

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SUITES = ("geometry-sanity", "clifford", "theorem1", "oh-oh", "conservation",
          "noether-identity", "jacobi-selfadjoint", "naturality")

DEFAULT_TOLERANCES = {"exact": 1e-11, "two_path": 1e-9, "lattice": 1e-6}

BUNDLED = ("flat_vacuum", "plane_wave_dirac", "off_shell", "perturbed_lift")


class ScenarioError(ValueError):
    """Schema or invariant violation; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class ScenarioParseError(ScenarioError):
    """An expression failed to parse; ``offset`` is the character position."""

    def __init__(self, key: str, source: str, err: ExprSyntaxError):
        super().__init__(key, f"parse error in {source!r}: {err}")
        self.offset = err.offset


@dataclass(frozen=True)
class LatticeSpec:
    dims: tuple[int, int, int, int] = (8, 1, 1, 1)
    periods: tuple[float, float, float, float] = (2 * math.pi, 1.0, 1.0, 1.0)
    origin: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    pairs: int = 2
    components: str = "psi"


@dataclass(frozen=True)
class Sampling:
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    points: int
    seed: int


@dataclass(frozen=True)
class Scenario:
    name: str
    config: FieldConfig
    automorphism: InfinitesimalAutomorphism
    sampling: Sampling
    lattice: LatticeSpec
    suites: tuple[str, ...]
    tolerances: Mapping[str, float]
    source_hash: str
    sources: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def expression_count(self) -> int:
        return sum(len(self.sources[k]) for k in ("theta", "omega", "psi"))


def _require(table: Mapping[str, Any], key: str, where: str):
    if not isinstance(table, Mapping) or key not in table:
        raise ScenarioError(f"{where}{key}", "missing required key")
    return table[key]


def _exprs(values, key: str, count: int | None) -> tuple[tuple[str, ...], tuple[Expr, ...]]:
    if not isinstance(values, list) or not all(isinstance(v, (str, int, float)) for v in values):
        raise ScenarioError(key, "expected a list of expression strings")
    if count is not None and len(values) != count:
        raise ScenarioError(key, f"expected {count} expressions, got {len(values)}")
    srcs = tuple(str(v) for v in values)
    parsed = []
    for i, s in enumerate(srcs):
        try:
            parsed.append(parse_expression(s))
        except ExprSyntaxError as err:
            raise ScenarioParseError(f"{key}[{i}]", s, err) from err
    return srcs, tuple(parsed)


def _floats(values, key: str, count: int) -> tuple[float, ...]:
    if not isinstance(values, list) or len(values) != count:
        raise ScenarioError(key, f"expected a list of {count} numbers")
    try:
        return tuple(float(v) for v in values)
    except (TypeError, ValueError) as err:
        raise ScenarioError(key, "expected numbers") from err


def parse_scenario(data: Mapping[str, Any], source_hash: str = "") -> Scenario:
    """Validate a decoded scenario document."""
    name = str(data.get("name", "scenario"))
    consts_raw = data.get("constants", {})
    if not isinstance(consts_raw, Mapping):
        raise ScenarioError("constants", "expected a table")
    try:
        consts = {str(k): float(v) for k, v in consts_raw.items()}
    except (TypeError, ValueError) as err:
        raise ScenarioError("constants", "values must be numbers") from err

    fields = _require(data, "fields", "")
    sources: dict[str, tuple[str, ...]] = {}
    parsed: dict[str, tuple[Expr, ...]] = {}
    for key, n in (("theta", N_THETA), ("omega", N_OMEGA), ("psi", N_PSI)):
        sources[key], parsed[key] = _exprs(_require(fields, key, "fields."), f"fields.{key}", n)

    aut_t = _require(data, "automorphism", "")
    mode = str(aut_t.get("mode", "kosmann"))
    sources["xi"], xi = _exprs(_require(aut_t, "xi", "automorphism."), "automorphism.xi", 4)
    xi_v = None
    if mode == "explicit":
        sources["xi_v"], xi_v = _exprs(_require(aut_t, "xi_v", "automorphism."),
                                       "automorphism.xi_v", 6)
    elif mode != "kosmann":
        raise ScenarioError("automorphism.mode", f"unknown mode {mode!r}")

    used = set()
    for exprs in list(parsed.values()) + [xi] + ([xi_v] if xi_v else []):
        for e in exprs:
            used |= constant_names(e)
    known = set(consts) | {"k", "alpha", "m"}
    missing = sorted(used - known)
    if missing:
        raise ScenarioError("constants", f"undefined constants {missing}")

    cfg = FieldConfig(parsed["theta"], parsed["omega"], parsed["psi"], constants=consts,
                      k=consts.get("k", 1.0), alpha=consts.get("alpha", 1.0),
                      m=consts.get("m", 1.0))
    aut = InfinitesimalAutomorphism(xi, xi_v, consts=cfg.consts)
    pert = aut_t.get("perturb")
    if pert is not None:
        plane = int(_require(pert, "plane", "automorphism.perturb."))
        if not 0 <= plane < 6:
            raise ScenarioError("automorphism.perturb.plane", "must be in 0..5")
        aut = aut.perturbed(plane, float(_require(pert, "amount", "automorphism.perturb.")))

    samp = _require(data, "sampling", "")
    sampling = Sampling(_floats(_require(samp, "lo", "sampling."), "sampling.lo", 4),
                        _floats(_require(samp, "hi", "sampling."), "sampling.hi", 4),
                        int(_require(samp, "points", "sampling.")),
                        int(_require(samp, "seed", "sampling.")))
    if sampling.points < 1:
        raise ScenarioError("sampling.points", "must be at least 1")

    lat = data.get("lattice", {})
    lattice = LatticeSpec(
        dims=tuple(int(v) for v in lat.get("dims", LatticeSpec.dims)),
        periods=tuple(float(v) for v in lat.get("periods", LatticeSpec.periods)),
        origin=tuple(float(v) for v in lat.get("origin", LatticeSpec.origin)),
        pairs=int(lat.get("pairs", LatticeSpec.pairs)),
        components=str(lat.get("components", LatticeSpec.components)))
    if len(lattice.dims) != 4 or len(lattice.periods) != 4 or min(lattice.dims) < 1:
        raise ScenarioError("lattice", "dims and periods need four entries, dims >= 1")
    if lattice.components not in ("psi", "all"):
        raise ScenarioError("lattice.components", "expected 'psi' or 'all'")

    suites = tuple(data.get("suites", SUITES))
    unknown = [s for s in suites if s not in SUITES]
    if unknown:
        raise ScenarioError("suites", f"unknown suites {unknown}")

    tol = dict(DEFAULT_TOLERANCES)
    for k, v in data.get("tolerances", {}).items():
        if k not in tol:
            raise ScenarioError(f"tolerances.{k}", "unknown tolerance class")
        tol[k] = float(v)
    return Scenario(name, cfg, aut, sampling, lattice, suites, tol, source_hash, sources)


def _decode(text: bytes, path: str) -> Mapping[str, Any]:
    if path.endswith(".json"):
        return json.loads(text)
    try:
        return tomllib.loads(text.decode())
    except tomllib.TOMLDecodeError as err:
        try:
            return json.loads(text)
        except json.JSONDecodeError:
            raise ScenarioError("<file>", f"not valid TOML or JSON: {err}") from err


def read_scenario_bytes(path: str | Path) -> tuple[bytes, str]:
    """Raw bytes of a scenario file or bundled scenario name."""
    p = Path(path)
    if p.exists():
        return p.read_bytes(), str(p)
    name = str(path)
    if name in BUNDLED:
        res = resources.files("gnvar") / "scenarios" / f"{name}.toml"
        return res.read_bytes(), f"{name}.toml"
    raise FileNotFoundError(f"no scenario file or bundled scenario named {name!r}")


def load_scenario(path: str | Path) -> Scenario:
    raw, where = read_scenario_bytes(path)
    return parse_scenario(_decode(raw, where), hashlib.sha256(raw).hexdigest())


__all__ = ["SUITES", "DEFAULT_TOLERANCES", "BUNDLED", "Scenario", "Sampling", "LatticeSpec",
           "ScenarioError", "ScenarioParseError", "parse_scenario", "load_scenario",
           "read_scenario_bytes"]
