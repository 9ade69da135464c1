"""The five reference scenarios as ready-made objects.

Round domains are replaced by box unions: the disc of radius 3 by the square
(-3, 3)^2, and the annulus 1 < |x| < 3 by the square frame (-3, 3)^2 minus
[-1, 1]^2 (the saturation of (1, 3) x (-3, 3)).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .domain import InvariantDomain, saturate
from .group import FiniteGroup, close_generators
from .maps import EquivariantLocalMap

# z^5 - 16 z written as a real pair
QUINTIC = (
    "x1^5 - 10*x1^3*x2^2 + 5*x1*x2^4 - 16*x1",
    "5*x1^4*x2 - 10*x1^2*x2^3 + x2^5 - 16*x2",
)

ROT90 = [["0", "-1"], ["1", "0"]]
FLIP = [["1", "0"], ["0", "-1"]]


@dataclass(eq=False)
class Scenario:
    name: str
    group: FiniteGroup
    omega: InvariantDomain
    maps: dict = field(default_factory=dict)

    def map(self, key=None) -> EquivariantLocalMap:
        key = key or next(iter(self.maps))
        return EquivariantLocalMap.from_expressions(self.group, self.omega, self.maps[key], key)


def _make(name, gens, boxes, maps):
    G = close_generators(gens)
    return Scenario(name, G, saturate(boxes, G), dict(maps))


@lru_cache(maxsize=None)
def scenario(name: str) -> Scenario:
    if name == "S1":
        return _make("S1", [[["1", "0"], ["0", "1"]]], [[("-2", "2"), ("-2", "2")]],
                     {"cubic": ("x1^3 - 3*x1*x2^2 - 1", "3*x1^2*x2 - x2^3")})
    if name == "S2":
        return _make("S2", [[["-1"]]], [[("1", "3")]], {"cubic": ("x1^3 - 4*x1",)})
    if name == "S3":
        return _make("S3", [FLIP], [[("-3", "3"), ("-3", "3")]],
                     {"affine": ("x1 - 1", "x2"), "saddle": ("x1^2 - 1 - x2^2", "x1*x2")})
    if name == "S4":
        return _make("S4", [ROT90], [[("1", "3"), ("-3", "3")]], {"quintic": QUINTIC})
    if name == "S5":
        return _make("S5", [ROT90, FLIP], [[("1", "3"), ("-3", "3")]], {"quintic": QUINTIC})
    raise KeyError(name)


NAMES = ("S1", "S2", "S3", "S4", "S5")
