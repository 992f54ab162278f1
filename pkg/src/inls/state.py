"""Radial grid and field state.

The field is stored as ``w = r u`` on the interior nodes ``r_j = j dr``,
``j = 1..n``; ``w`` vanishes at the origin and at ``r_max``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._smooth import smoothstep
from ._validation import check_positive
from .coefficient import ProblemParams
from .errors import ParameterDomainError, TruncationError
from .groundstate import q_profile

log = logging.getLogger(__name__)

TAIL_MASS_LIMIT = 0.01


@dataclass(frozen=True)
class RadialGrid:
    r_max: float
    n: int

    def __post_init__(self):
        check_positive("r_max", self.r_max)
        if int(self.n) != self.n or self.n < 1:
            raise ParameterDomainError(f"grid needs n >= 1 interior nodes, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "r_max", float(self.r_max))

    @property
    def dr(self) -> float:
        return self.r_max / (self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.dr * np.arange(1, self.n + 1)

    @property
    def midpoints(self) -> np.ndarray:
        """``r_{j+1/2}`` for ``j = 0..n`` (one more than the node count)."""
        return self.dr * (np.arange(self.n + 1) + 0.5)

    def refined(self) -> "RadialGrid":
        """Same domain, spacing halved."""
        return RadialGrid(self.r_max, 2 * self.n + 1)


@dataclass
class RadialState:
    grid: RadialGrid
    w: np.ndarray
    t: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=complex)
        if self.w.shape != (self.grid.n,):
            raise ParameterDomainError(f"w has shape {self.w.shape}, grid expects ({self.grid.n},)")

    @property
    def u(self) -> np.ndarray:
        return self.w / self.grid.nodes

    def copy(self) -> "RadialState":
        return replace(self, w=self.w.copy(), meta=dict(self.meta))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.w)))


def tail_mass_fraction(state: RadialState) -> float:
    """Share of the discrete mass sitting beyond ``r_max / 2``."""
    m = np.abs(state.w) ** 2
    total = m.sum()
    if total == 0:
        return 0.0
    return float(m[state.grid.nodes > state.grid.r_max / 2].sum() / total)


def taper(r, radius, width=None):
    """1 on [0, radius], C^4 roll-off to 0 at ``radius + width`` (default ``2 radius``)."""
    width = radius if width is None else width
    return 1.0 - smoothstep((np.asarray(r, dtype=float) - radius) / width)


def _profile_values(tag, prm, r, params):
    if tag == "Gaussian":
        A = check_positive("A", prm.get("A", 1.0), allow_zero=True)
        sigma = check_positive("sigma", prm.get("sigma", 1.0))
        return A * np.exp(-(r**2) / sigma**2)
    if tag == "ScaledGroundState":
        if params is None:
            raise ParameterDomainError("ScaledGroundState needs ProblemParams")
        c = check_positive("c", prm.get("c", 1.0), allow_zero=True)
        lam = check_positive("lam", prm.get("lam", 1.0))
        phi = c * math.sqrt(lam) * q_profile(lam * r, params)
        radius = prm.get("taper")
        if radius is not None and math.isfinite(radius):
            width = prm.get("taper_width")
            if width is not None:
                width = check_positive("taper_width", width)
            phi = phi * taper(r, check_positive("taper", radius), width)
        return phi
    if tag == "Tabulated":
        radii = np.asarray(prm["radii"], dtype=float)
        values = np.asarray(prm["values"])
        if radii.shape != values.shape or np.any(np.diff(radii) <= 0):
            raise ParameterDomainError("tabulated profile needs matching increasing radii")
        if not np.all(np.isfinite(values)):
            raise ParameterDomainError("tabulated profile has non-finite values")
        re = np.interp(r, radii, values.real, left=values.real[0], right=0.0)
        im = np.interp(r, radii, np.imag(values), left=np.imag(values)[0], right=0.0)
        return re + 1j * im
    raise ParameterDomainError(f"unknown initial profile {tag!r}")


def prepare_initial(tag: str, profile_params: dict, grid: RadialGrid,
                    params: ProblemParams | None = None, check_tail: bool = True) -> RadialState:
    """Sample an initial profile as ``w_j = r_j phi(r_j)``.

    Profiles: ``Gaussian`` (A, sigma), ``ScaledGroundState`` (c, lam, optional
    ``taper`` radius and ``taper_width``) and ``Tabulated`` (radii, values).
    The ground state decays like ``1/r`` and has infinite mass, so on a
    truncated grid it needs a taper; a wide roll-off keeps the gradient cost
    of the cut (roughly ``c**2 * 50 / (taper + width)`` for b = 1) small. Raises
    ``TruncationError`` when more than 1% of the mass lies beyond ``r_max/2``.
    """
    r = grid.nodes
    phi = _profile_values(tag, dict(profile_params or {}), r, params)
    state = RadialState(grid, r * phi, 0.0)
    frac = tail_mass_fraction(state)
    state.meta["tail_mass_fraction"] = frac
    log.info("initial %s: tail mass fraction beyond r_max/2 = %.3e", tag, frac)
    if check_tail and frac > TAIL_MASS_LIMIT:
        raise TruncationError(
            f"{tag} profile keeps {frac:.2%} of its mass beyond r_max/2; enlarge r_max or taper it"
        )
    return state
