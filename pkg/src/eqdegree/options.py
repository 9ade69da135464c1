from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Options:
    """Numerical knobs shared by all engines."""

    tol_group: float = 1e-9
    tol_equiv: float = 1e-9
    eta_reg: float = 1e-8
    eta_loc: float = 1e-6
    r_dedup: float = 1e-6
    orbit_tol: float = 1e-6
    newton_tol: float = 1e-12
    newton_maxit: int = 50
    max_group_order: int = 4096
    t_samples: int = 11
    r_min: float = 1e-4
    max_refine: int = 4
    # None means "derive from the domain" (edge/16 and edge/10).
    delta: object = None
    margin: object = None
    seed: int = 0

    def with_(self, **kw):
        return replace(self, **kw)


DEFAULT = Options()
