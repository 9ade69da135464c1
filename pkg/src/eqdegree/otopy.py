"""Otopy construction and degree-invariance checks along sampled slices."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .degree import DegreeVector, equivariant_degree
from .domain import Stratification
from .errors import AmbiguousIsotropy, DegenerateZero, NotAnOtopy, ValidationError
from .maps import EquivariantLocalMap, Otopy, StraightLineOtopy, check_locality
from .options import DEFAULT, Options
from .realize import disjoint_union

RETRY_SHIFT = Fraction(1, 97)


def check_slices(h: Otopy, margin=None, t_grid: int = 41, options: Options = DEFAULT):
    """Locality of h_t on the margin shell at t = 0, 1/(t_grid-1), ..., 1."""
    for k in range(t_grid):
        t = Fraction(k, t_grid - 1)
        rep = check_locality(h.slice(t), margin, options.eta_loc)
        if not rep.passed:
            x, _ = rep.offending[0]
            raise NotAnOtopy(f"slice t={float(t):.4g} nearly vanishes at {list(x)} on the margin shell", t=t, point=x)


def straight_line_otopy(f: EquivariantLocalMap, g: EquivariantLocalMap, margin=None,
                        t_grid: int = 41, options: Options = DEFAULT) -> StraightLineOtopy:
    """(1 - t) f + t g, returned only if every sampled slice passes the locality scan."""
    if f.group is not g.group:
        raise ValidationError("maps act by different groups")
    h = StraightLineOtopy(f, g)
    check_slices(h, margin, t_grid, options)
    return h


@dataclass
class InvarianceReport:
    passed: bool
    rows: list = field(default_factory=list)  # (t, vector or None, status)

    @property
    def vectors(self):
        return [v for _, v, _ in self.rows if v is not None]

    @property
    def inconclusive(self):
        return [t for t, v, _ in self.rows if v is None]


def _slice_degree(h: Otopy, t, strat, options):
    return equivariant_degree(h.slice(t), strat, options).vector


def verify_otopy_invariance(h: Otopy, strat: Stratification, t_samples: int = DEFAULT.t_samples,
                            options: Options = DEFAULT) -> InvarianceReport:
    """Degree vector at equispaced slices; degenerate slices retried at t +- 1/97."""
    rows = []
    for k in range(t_samples):
        t = Fraction(k, max(1, t_samples - 1))
        try:
            rows.append((t, _slice_degree(h, t, strat, options), "ok"))
            continue
        except (DegenerateZero, AmbiguousIsotropy) as exc:
            reason = str(exc)
        done = False
        for s in (t + RETRY_SHIFT, t - RETRY_SHIFT):
            if not 0 <= s <= 1:
                continue
            try:
                rows.append((s, _slice_degree(h, s, strat, options), f"retried from t={t}"))
                done = True
                break
            except (DegenerateZero, AmbiguousIsotropy):
                continue
        if not done:
            rows.append((t, None, f"inconclusive at t={t}: {reason}"))
    vecs = [v for _, v, _ in rows if v is not None]
    passed = bool(vecs) and len(vecs) == len(rows) and all(v == vecs[0] for v in vecs)
    return InvarianceReport(passed, rows)


@dataclass
class AdditivityReport:
    passed: bool
    first: DegreeVector
    second: DegreeVector
    union: DegreeVector


def verify_additivity(f: EquivariantLocalMap, g: EquivariantLocalMap, strat: Stratification,
                      options: Options = DEFAULT) -> AdditivityReport:
    u = disjoint_union(f, g)
    a = equivariant_degree(f, strat, options).vector
    b = equivariant_degree(g, strat, options).vector
    c = equivariant_degree(u, strat, options).vector
    return AdditivityReport(c == a + b, a, b, c)
