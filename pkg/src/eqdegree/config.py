"""INI run configuration.

    [group]            g1 = 0 -1 ; 1 0      (rows separated by ';')
                       dim = 2              (only needed without generators)
    [domain]           box1 = 1 3 ; -3 3    (lo hi per axis)
    [map]              f1 = x1^3 - 4*x1     (one per output)   or   atoms = <json>
    [domain2], [map2]  optional second map, for additivity / otopy checks
    [otopy]            f1 = ... t ...       or   kind = scaling
    [target]           e1 = H=0 alpha=0 deg=3
    [options]          tol_group, tol_equiv, eta_reg, eta_loc, delta, margin,
                       seed, max_group_order, t_samples
"""
from __future__ import annotations

import configparser
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .domain import InvariantDomain, saturate
from .errors import DimensionMismatch, ValidationError
from .expression import MapExpression
from .group import FiniteGroup, close_generators
from .maps import EquivariantLocalMap, ExpressionOtopy, PolyPiece
from .options import DEFAULT, Options

_FLOAT_OPTIONS = ("tol_group", "tol_equiv", "eta_reg", "eta_loc", "r_min", "delta", "margin")
_INT_OPTIONS = ("seed", "max_group_order", "t_samples", "newton_maxit", "max_refine")


def _numbered(section, prefix):
    """Values of keys prefix1, prefix2, ... in numeric order."""
    items = []
    for key, value in section.items():
        m = re.fullmatch(rf"{prefix}(\d+)", key)
        if m:
            items.append((int(m.group(1)), value))
    return [v for _, v in sorted(items)]


def _rows(text):
    return [row.split() for row in text.split(";") if row.strip()]


@dataclass
class RunConfig:
    generators: list
    dim: int
    boxes: list
    map_exprs: Optional[list] = None
    map_atoms: Optional[list] = None
    boxes2: Optional[list] = None
    map2_exprs: Optional[list] = None
    map2_atoms: Optional[list] = None
    otopy_exprs: Optional[list] = None
    otopy_kind: Optional[str] = None
    target: dict = field(default_factory=dict)
    options: Options = DEFAULT
    source: str = ""

    @property
    def has_map(self) -> bool:
        return self.map_exprs is not None or self.map_atoms is not None

    @property
    def has_map2(self) -> bool:
        return self.map2_exprs is not None or self.map2_atoms is not None


def _parse_map(cp, name):
    if not cp.has_section(name):
        return None, None
    sec = cp[name]
    if "atoms" in sec:
        try:
            atoms = json.loads(sec["atoms"])
        except json.JSONDecodeError as exc:
            raise ValidationError(f"[{name}] atoms is not valid JSON: {exc}") from None
        if not isinstance(atoms, list):
            raise ValidationError(f"[{name}] atoms must be a JSON list")
        return None, atoms
    exprs = _numbered(sec, "f")
    if not exprs:
        raise ValidationError(f"[{name}] needs f1..fn or atoms")
    return exprs, None


def _parse_target(sec):
    out = {}
    for line in _numbered(sec, "e"):
        try:
            fields = dict(part.split("=", 1) for part in line.split())
            out[(int(fields["H"]), int(fields["alpha"]))] = int(fields["deg"])
        except (KeyError, ValueError):
            raise ValidationError(f"target entry {line!r} must read 'H=<id> alpha=<id> deg=<int>'") from None
    return out


def parse_config(text: str, source: str = "") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ValidationError(f"config syntax: {exc}") from None
    if not cp.has_section("group") or not cp.has_section("domain"):
        raise ValidationError("config needs [group] and [domain] sections")
    gens = [_rows(g) for g in _numbered(cp["group"], "g")]
    if gens:
        dim = len(gens[0])
    elif "dim" in cp["group"]:
        dim = int(cp["group"]["dim"])
    else:
        raise ValidationError("[group] needs generators g1.. or dim")
    if dim < 1:
        raise ValidationError("dimension must be positive")
    for M in gens:
        if len(M) != dim or any(len(r) != dim for r in M):
            raise DimensionMismatch(f"generator {M} is not {dim}x{dim}")
    boxes = [_rows(b) for b in _numbered(cp["domain"], "box")]
    if not boxes:
        raise ValidationError("[domain] needs box1..")
    boxes2 = [_rows(b) for b in _numbered(cp["domain2"], "box")] if cp.has_section("domain2") else None
    for B in boxes + (boxes2 or []):
        if len(B) != dim or any(len(a) != 2 for a in B):
            raise DimensionMismatch(f"box {B} needs {dim} 'lo hi' axes")
    map_exprs, map_atoms = _parse_map(cp, "map")
    map2_exprs, map2_atoms = _parse_map(cp, "map2")
    for ex in (map_exprs, map2_exprs):
        if ex is not None and len(ex) != dim:
            raise DimensionMismatch(f"map has {len(ex)} components, expected {dim}")
    otopy_exprs, otopy_kind = None, None
    if cp.has_section("otopy"):
        sec = cp["otopy"]
        otopy_kind = sec.get("kind", "expression").strip()
        if otopy_kind == "expression":
            otopy_exprs = _numbered(sec, "f")
            if len(otopy_exprs) != dim:
                raise DimensionMismatch(f"otopy has {len(otopy_exprs)} components, expected {dim}")
        elif otopy_kind not in ("scaling", "straight"):
            raise ValidationError(f"unknown otopy kind {otopy_kind!r}")
    target = _parse_target(cp["target"]) if cp.has_section("target") else {}
    kw = {}
    if cp.has_section("options"):
        for key, value in cp["options"].items():
            try:
                if key in _FLOAT_OPTIONS:
                    kw[key] = float(value)
                elif key in _INT_OPTIONS:
                    kw[key] = int(value)
                else:
                    raise ValidationError(f"unknown option {key!r}")
            except ValueError:
                raise ValidationError(f"option {key} = {value!r} is not a number") from None
    for key, value in kw.items():
        if value <= 0 and key != "seed":
            raise ValidationError(f"option {key} must be positive")
    return RunConfig(
        generators=gens, dim=dim, boxes=boxes,
        map_exprs=map_exprs, map_atoms=map_atoms,
        boxes2=boxes2, map2_exprs=map2_exprs, map2_atoms=map2_atoms,
        otopy_exprs=otopy_exprs, otopy_kind=otopy_kind,
        target=target, options=DEFAULT.with_(**kw), source=source,
    )


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(p))


def build_group(cfg: RunConfig) -> FiniteGroup:
    gens = cfg.generators or [[["1" if i == j else "0" for j in range(cfg.dim)] for i in range(cfg.dim)]]
    return close_generators(gens, cap=cfg.options.max_group_order, tol=cfg.options.tol_group)


@dataclass(eq=False)
class Built:
    """Objects materialized from a RunConfig; maps are filled by ``build_maps``."""

    group: FiniteGroup
    omega: InvariantDomain
    domain1: InvariantDomain
    domain2: Optional[InvariantDomain]
    f: Optional[EquivariantLocalMap] = None
    g: Optional[EquivariantLocalMap] = None
    otopy: Optional[ExpressionOtopy] = None


def build_domains(cfg: RunConfig) -> Built:
    G = build_group(cfg)
    d1 = saturate(cfg.boxes, G)
    d2 = saturate(cfg.boxes2, G) if cfg.boxes2 else None
    omega = d1.union(d2) if d2 is not None else d1
    return Built(G, omega, d1, d2)


def _map(G, domain, exprs, atoms, table):
    from .realize import atom_map, load_atoms

    if exprs is not None:
        return EquivariantLocalMap(G, (PolyPiece(domain, MapExpression.parse(exprs, G.dim)),))
    if atoms is not None:
        return atom_map(G, load_atoms(G, table, atoms))
    return None


def build_maps(cfg: RunConfig, built: Built, table=None) -> Built:
    """Attach the configured maps; ``table`` validates atom centers."""
    G = built.group
    d1, d2 = built.domain1, built.domain2
    built.f = _map(G, d1, cfg.map_exprs, cfg.map_atoms, table)
    built.g = _map(G, d2 if d2 is not None else d1, cfg.map2_exprs, cfg.map2_atoms, table)
    if cfg.otopy_exprs is not None:
        built.otopy = ExpressionOtopy(G, d1, MapExpression.parse(cfg.otopy_exprs, G.dim, allow_t=True))
    return built
