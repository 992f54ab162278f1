"""Radial interaction coefficients g and the structural checks they must pass.

Every coefficient is stored through its scale-free profile ``h(r) = r**b * g(r)``;
the four structural conditions (scaling bounds, variational bound, rigidity and
the virial bound) are all statements about ``h`` and ``r h'(r)``, which keeps the
checks free of the ``r**-b`` singularity at the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from ._smooth import smoothstep
from ._validation import as_radii, check_in_range, check_positive
from .errors import ParameterDomainError

CLOSED_FORM_TOL = 1e-12
TABULATED_TOL = 1e-8
SAMPLE_RANGE = (1e-6, 1e6)
SAMPLE_POINTS = 20001


@dataclass(frozen=True)
class ProblemParams:
    """Exponents of the energy-critical problem, all derived from ``b``."""

    b: float

    def __post_init__(self):
        check_in_range("b", self.b, 0.0, 4.0 / 3.0, lo_closed=False, hi_closed=False)
        object.__setattr__(self, "b", float(self.b))

    @property
    def p(self) -> float:
        return 5.0 - 2.0 * self.b

    @property
    def p0(self) -> float:
        return 2.0 - self.b


class Coefficient:
    """Base class; subclasses supply the profile ``h`` and its derivative.

    Instances are immutable and picklable so they can be shipped to worker
    processes during sweeps.
    """

    family = "abstract"
    closed_form = True

    def __init__(self, b: float):
        self.b = float(b)

    # -- profile h(r) = r^b g(r) -------------------------------------------------
    def profile(self, r):
        raise NotImplementedError

    def profile_deriv(self, r):
        raise NotImplementedError

    @property
    def domain(self) -> tuple[float, float]:
        """Radii over which the coefficient may be evaluated."""
        return (0.0, math.inf)

    # -- g and g' --------------------------------------------------------------
    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return r ** (-self.b) * self.profile(r)

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        return r ** (-self.b - 1.0) * (r * self.profile_deriv(r) - self.b * self.profile(r))

    def radial_flux(self, r):
        """``x . grad g = r g'(r)``."""
        r = np.asarray(r, dtype=float)
        return r ** (-self.b) * (r * self.profile_deriv(r) - self.b * self.profile(r))

    # -- bounds --------------------------------------------------------------
    @property
    def gi(self) -> float:
        raise NotImplementedError

    @property
    def gs(self) -> float:
        raise NotImplementedError

    @property
    def tol(self) -> float:
        return CLOSED_FORM_TOL if self.closed_form else TABULATED_TOL

    def origin_expansion(self, r0: float) -> tuple[float, float]:
        """Return ``(h(0), h'(0))`` estimated at the tiny radius ``r0``."""
        h1 = float(self.profile_deriv(r0))
        h0 = float(self.profile(r0)) - h1 * r0
        return h0, h1

    def rescaled(self, lam: float) -> "Coefficient":
        """Coefficient ``lam**b * g(lam r)`` paired with ``lam**0.5 u(lam r)``."""
        check_positive("lam", lam)
        return Rescaled(self, lam)

    def describe(self) -> dict:
        return {"family": self.family, "b": self.b}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.describe().items() if k != "family")
        return f"{type(self).__name__}({args})"

    def __eq__(self, other):
        return type(self) is type(other) and self.describe() == other.describe()

    def __hash__(self):
        return hash((type(self).__name__, tuple(sorted(self.describe().items()))))


class PurePower(Coefficient):
    """``g(r) = r**-b``: the scale-invariant case, h identically one."""

    family = "PurePower"

    def profile(self, r):
        return np.ones_like(np.asarray(r, dtype=float))

    def profile_deriv(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    @property
    def gi(self):
        return 1.0

    @property
    def gs(self):
        return 1.0

    def rescaled(self, lam):
        check_positive("lam", lam)
        return self


class Rational(Coefficient):
    """``g(r) = r**-b * a (r + d) / (r + c)`` with ``a > 0`` and ``0 <= d <= c``, ``c > 0``."""

    family = "Rational"

    def __init__(self, b, a, d, c):
        super().__init__(b)
        self.a = check_positive("a", a)
        self.c = check_positive("c", c)
        self.d = check_in_range("d", d, 0.0, self.c)

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        return self.a * (r + self.d) / (r + self.c)

    def profile_deriv(self, r):
        r = np.asarray(r, dtype=float)
        return self.a * (self.c - self.d) / (r + self.c) ** 2

    @property
    def gi(self):
        return self.a * self.d / self.c

    @property
    def gs(self):
        return self.a

    def describe(self):
        return {"family": self.family, "b": self.b, "a": self.a, "d": self.d, "c": self.c}


class PiecewisePlateau(Coefficient):
    """Profile equal to ``a`` on [0, 1], ramping smoothly on (1, 2) to the
    level ``(p0 / (p0 + 1 - a))**p0`` held for ``r >= 2``.

    The top level is the largest one the variational bound allows for
    ``gi = a``, so this family sits exactly on ``g0 = p0``.
    """

    family = "PiecewisePlateau"

    def __init__(self, b, a):
        super().__init__(b)
        p0 = 2.0 - self.b
        self.a = check_in_range("a", a, 0.0, p0 + 1.0, hi_closed=False)
        self.top = (p0 / (p0 + 1.0 - self.a)) ** p0

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        return self.a + (self.top - self.a) * smoothstep(r - 1.0)

    def profile_deriv(self, r):
        r = np.asarray(r, dtype=float)
        return (self.top - self.a) * smoothstep(r - 1.0, order=1)

    @property
    def gi(self):
        return min(self.a, self.top)

    @property
    def gs(self):
        return max(self.a, self.top)

    def describe(self):
        return {"family": self.family, "b": self.b, "a": self.a}


class Tabulated(Coefficient):
    """Coefficient sampled at user radii; monotone cubic in ``log r``.

    Evaluation outside the table range raises instead of extrapolating.
    """

    family = "Tabulated"
    closed_form = False

    def __init__(self, b, radii, values):
        super().__init__(b)
        radii = as_radii(radii)
        values = np.asarray(values, dtype=float)
        if radii.ndim != 1 or radii.shape != values.shape or radii.size < 2:
            raise ParameterDomainError("table needs matching 1-D radii/values with >= 2 entries")
        if np.any(np.diff(radii) <= 0):
            raise ParameterDomainError("table radii must be strictly increasing")
        if np.any(values < 0) or np.any(~np.isfinite(values)):
            raise ParameterDomainError("table values must be finite and non-negative")
        self.radii = radii
        self.values = values
        self._interp = PchipInterpolator(np.log(radii), radii**self.b * values, extrapolate=False)
        self._dinterp = self._interp.derivative()
        grid = np.exp(np.linspace(np.log(radii[0]), np.log(radii[-1]), SAMPLE_POINTS))
        h = self._interp(np.log(grid))
        self._gi = float(np.min(h))
        self._gs = float(np.max(h))

    @property
    def domain(self):
        return (float(self.radii[0]), float(self.radii[-1]))

    def _logr(self, r):
        r = np.asarray(r, dtype=float)
        lo, hi = self.domain
        if np.any(r < lo * (1 - 1e-12)) or np.any(r > hi * (1 + 1e-12)):
            raise ParameterDomainError(f"radius outside tabulated range [{lo}, {hi}]")
        return np.log(np.clip(r, lo, hi))

    def profile(self, r):
        return self._interp(self._logr(r))

    def profile_deriv(self, r):
        r = np.asarray(r, dtype=float)
        return self._dinterp(self._logr(r)) / r

    @property
    def gi(self):
        return self._gi

    @property
    def gs(self):
        return self._gs

    def describe(self):
        return {
            "family": self.family,
            "b": self.b,
            "radii": self.radii.tolist(),
            "values": self.values.tolist(),
        }


class Rescaled(Coefficient):
    """``lam**b g(lam r)``, whose profile is ``h(lam r)``."""

    def __init__(self, base: Coefficient, lam: float):
        super().__init__(base.b)
        self.base = base
        self.lam = float(lam)
        self.family = base.family
        self.closed_form = base.closed_form

    def profile(self, r):
        return self.base.profile(self.lam * np.asarray(r, dtype=float))

    def profile_deriv(self, r):
        return self.lam * self.base.profile_deriv(self.lam * np.asarray(r, dtype=float))

    @property
    def domain(self):
        lo, hi = self.base.domain
        return (lo / self.lam, hi / self.lam)

    @property
    def gi(self):
        return self.base.gi

    @property
    def gs(self):
        return self.base.gs

    def describe(self):
        return {**self.base.describe(), "lam": self.lam}


class Zero(Coefficient):
    """``g = 0``: the linear Schroedinger flow (used for solver checks)."""

    family = "Zero"

    def profile(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def profile_deriv(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    @property
    def gi(self):
        return 0.0

    @property
    def gs(self):
        return 0.0


FAMILIES = {
    "PurePower": PurePower,
    "Rational": Rational,
    "PiecewisePlateau": PiecewisePlateau,
    "Tabulated": Tabulated,
    "Zero": Zero,
}


def make_coefficient(family: str, family_params: dict | None, params: ProblemParams) -> Coefficient:
    """Build a coefficient of the named family for the exponent ``params.b``.

    ``family_params`` holds ``a, d, c`` for Rational, ``a`` for PiecewisePlateau
    and ``radii, values`` for Tabulated.
    """
    family_params = dict(family_params or {})
    try:
        cls = FAMILIES[family]
    except KeyError:
        raise ParameterDomainError(
            f"unknown coefficient family {family!r}; expected one of {sorted(FAMILIES)}"
        ) from None
    try:
        return cls(params.b, **family_params)
    except TypeError as exc:
        raise ParameterDomainError(f"bad parameters for {family}: {exc}") from None


@dataclass(frozen=True)
class CoefficientReport:
    gi: float
    gs: float
    gs_eff: float
    g0: float
    kg: float | None
    rho: float
    rho_max: float | None
    scaling_ok: bool
    variational_ok: bool
    rigidity_ok: bool
    virial_ok: bool | None
    margins: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    tol: float = CLOSED_FORM_TOL

    def to_dict(self) -> dict:
        return {
            "gi": self.gi,
            "gs": self.gs,
            "gs_eff": self.gs_eff,
            "g0": self.g0,
            "kg": self.kg,
            "rho": self.rho,
            "rho_max": self.rho_max,
            "scaling_ok": self.scaling_ok,
            "variational_ok": self.variational_ok,
            "rigidity_ok": self.rigidity_ok,
            "virial_ok": self.virial_ok,
            "margins": dict(self.margins),
            "grid": dict(self.grid),
            "tol": self.tol,
        }

    def flat_items(self):
        """Yield ``(key, value)`` pairs with nested dicts dotted out."""
        for key, value in self.to_dict().items():
            if isinstance(value, dict):
                for sub, v in value.items():
                    yield f"{key}.{sub}", v
            else:
                yield key, value


def sample_grid(coef: Coefficient, n: int = SAMPLE_POINTS) -> np.ndarray:
    lo, hi = SAMPLE_RANGE
    dlo, dhi = coef.domain
    lo, hi = max(lo, dlo), min(hi, dhi)
    if lo <= 0:
        lo = SAMPLE_RANGE[0]
    return np.exp(np.linspace(math.log(lo), math.log(hi), n))


def check_conditions(coef: Coefficient, params: ProblemParams, rho: float = 0.0,
                     n_samples: int = SAMPLE_POINTS) -> CoefficientReport:
    """Evaluate the scaling, variational, rigidity and virial conditions.

    Margins are worst-case slacks over a log grid (positive = satisfied). The
    rigidity and virial margins are expressed for the profile, i.e. multiplied
    by ``r**b``, so they stay O(1) across the sampled decades.
    """
    rho = check_positive("rho", rho, allow_zero=True)
    if n_samples < 10_000:
        raise ParameterDomainError("condition checks need at least 1e4 sample points")
    b, p, p0 = params.b, params.p, params.p0
    tol = coef.tol
    r = sample_grid(coef, n_samples)
    h = np.asarray(coef.profile(r), dtype=float)
    dh = np.asarray(coef.profile_deriv(r), dtype=float)
    gi, gs = float(coef.gi), float(coef.gs)

    # scaling: 0 <= gi <= r^b g <= gs and sup r^{1+b}|g'| finite
    flux = r * dh - b * h  # r^{1+b} g'
    sup_flux = float(np.max(np.abs(flux)))
    margin_lower = float(np.min(h - gi))
    margin_upper = float(np.min(gs - h))
    scaling_ok = (
        gi >= -tol
        and bool(np.all(h >= -tol))
        and margin_lower >= -tol
        and margin_upper >= -tol
        and math.isfinite(sup_flux)
    )

    gs_eff = gs ** (1.0 / p0)
    g0 = gs_eff * (p0 + 1.0 - gi)
    variational_ok = g0 <= p0 + tol

    rig_margin = float(np.min(dh))
    rigidity_ok = rig_margin >= -tol

    margins = {
        "scaling_lower": margin_lower,
        "scaling_upper": margin_upper,
        "scaling_sup_flux": sup_flux,
        "variational": p0 - g0,
        "rigidity": rig_margin,
    }
    if g0 < p0 + 1.0:
        kg = (p0 - g0) / (p0 + 1.0 - g0)
        virial_margin = float(np.min((p + 1.0) * (kg - rho) * h - flux))
        virial_ok = virial_margin >= -tol
        margins["virial"] = virial_margin
        pos = h > 0
        if np.any(pos):
            rho_max = max(0.0, kg + float(np.min(-flux[pos] / ((p + 1.0) * h[pos]))))
        else:
            rho_max = None
    else:
        kg = None
        virial_ok = None
        rho_max = None

    return CoefficientReport(
        gi=gi,
        gs=gs,
        gs_eff=gs_eff,
        g0=g0,
        kg=kg,
        rho=rho,
        rho_max=rho_max,
        scaling_ok=bool(scaling_ok),
        variational_ok=bool(variational_ok),
        rigidity_ok=bool(rigidity_ok),
        virial_ok=None if virial_ok is None else bool(virial_ok),
        margins=margins,
        grid={"r_min": float(r[0]), "r_max": float(r[-1]), "n": int(r.size)},
        tol=tol,
    )
