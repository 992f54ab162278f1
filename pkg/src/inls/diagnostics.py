"""Conserved and monitored functionals of a radial state.

All integrals are ``4 pi dr`` sums over the interior nodes (trapezoid with zero
end values). The gradient uses the forward differences of ``w`` including the
two Dirichlet ends, which is the quadratic form of the discrete Laplacian the
solver propagates exactly; with ``w(0) = 0`` it equals ``4 pi int |w_r|^2 dr``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields

import numpy as np
from numpy.polynomial import Polynomial

from ._smooth import SMOOTHSTEP
from ._validation import check_positive
from .coefficient import Coefficient
from .errors import ParameterDomainError, UnsupportedWeight
from .state import RadialState

FOUR_PI = 4.0 * math.pi
CSV_COLUMNS = (
    "t", "mass", "energy", "grad_norm_sq", "potential", "lp1_norm", "virial_V",
    "z_r", "z_r_prime", "lvirial_rhs", "strauss_ratio", "s_increment",
)

# cutoff chi(s): 1 for s <= 1, 0 for s >= 10
_CHI = 1.0 - SMOOTHSTEP(Polynomial([-1.0 / 9.0, 1.0 / 9.0]))
_S = Polynomial([0.0, 1.0])


class VirialWeight:
    """Radial weight ``a(|x|)`` for localized virial quantities.

    ``kind`` is one of

    * ``"Unbounded"`` -- ``a = r**2``;
    * ``"QuadraticCutoff"`` -- ``a = R**2 b(r/R)`` with ``b(s) = s**2`` on
      [0, 1], 0 beyond 10 (``s**2`` times a C^4 cutoff in between);
    * ``"SmoothBeta"`` -- ``a(r) = int_0^r R beta(s/R) ds`` with ``beta(s) = s``
      on [0, 1], ``s`` times the same cutoff on (1, 10) and 0 beyond.
    """

    KINDS = ("Unbounded", "QuadraticCutoff", "SmoothBeta")

    def __init__(self, kind: str = "Unbounded", scale: float = 1.0):
        if kind not in self.KINDS:
            raise UnsupportedWeight(f"unknown virial weight {kind!r}")
        self.kind = kind
        self.scale = check_positive("scale", scale)
        if kind == "QuadraticCutoff":
            mid = _S**2 * _CHI
            self._pieces = (_S**2, mid, Polynomial([0.0]))
        elif kind == "SmoothBeta":
            beta_mid = _S * _CHI
            anti = beta_mid.integ(lbnd=1.0) + 0.5
            self._pieces = (_S**2 / 2.0, anti, Polynomial([anti(10.0)]))

    def __repr__(self):
        return f"VirialWeight({self.kind!r}, scale={self.scale!r})"

    def _eval_profile(self, s, order):
        inner, mid, outer = self._pieces
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        lo, hi = s <= 1.0, s >= 10.0
        md = ~(lo | hi)
        out[lo] = inner.deriv(order)(s[lo]) if order else inner(s[lo])
        out[md] = mid.deriv(order)(s[md]) if order else mid(s[md])
        out[hi] = outer.deriv(order)(s[hi]) if order else outer(s[hi])
        return out

    def derivative(self, r, order: int = 0):
        """``order``-th radial derivative of the weight (0..4)."""
        if not 0 <= order <= 4:
            raise UnsupportedWeight(f"derivative of order {order} not available")
        r = np.asarray(r, dtype=float)
        if self.kind == "Unbounded":
            return (r**2, 2.0 * r, 2.0 + 0 * r, 0 * r, 0 * r)[order]
        R = self.scale
        return R ** (2 - order) * self._eval_profile(r / R, order)

    def beta(self, s):
        """Unscaled ``beta(s) = b'(s)`` profile (SmoothBeta only)."""
        if self.kind != "SmoothBeta":
            raise UnsupportedWeight("beta profile only exists for SmoothBeta")
        return self._eval_profile(np.asarray(s, dtype=float), 1)

    def laplacian(self, r):
        r = np.asarray(r, dtype=float)
        return self.derivative(r, 2) + 2.0 * self.derivative(r, 1) / r

    def bilaplacian(self, r):
        r = np.asarray(r, dtype=float)
        return self.derivative(r, 4) + 4.0 * self.derivative(r, 3) / r


UNBOUNDED = VirialWeight("Unbounded")


# ---------------------------------------------------------------- functionals


def _padded(w):
    return np.concatenate(([0.0], w, [0.0]))


def mass(state: RadialState) -> float:
    return FOUR_PI * state.grid.dr * float(np.sum(np.abs(state.w) ** 2))


def grad_norm_sq(state: RadialState) -> float:
    dw = np.diff(_padded(state.w))
    return FOUR_PI * float(np.sum(np.abs(dw) ** 2)) / state.grid.dr


def _weighted_power(state, weight_values, power):
    """``4 pi dr sum weight * |u|**power * r**2``."""
    r = state.grid.nodes
    return FOUR_PI * state.grid.dr * float(np.sum(weight_values * np.abs(state.u) ** power * r * r))


def potential(state: RadialState, coef: Coefficient, p: float) -> float:
    return _weighted_power(state, coef(state.grid.nodes), p + 1.0)


def energy(state: RadialState, coef: Coefficient, p: float) -> float:
    return 0.5 * grad_norm_sq(state) - potential(state, coef, p) / (p + 1.0)


def lp_norm(state: RadialState, q: float) -> float:
    return _weighted_power(state, 1.0, q) ** (1.0 / q)


def weighted_mass(state: RadialState, weight: VirialWeight) -> float:
    r = state.grid.nodes
    return FOUR_PI * state.grid.dr * float(np.sum(weight.derivative(r) * np.abs(state.w) ** 2))


def space_l10(state: RadialState) -> float:
    """``int |u|^10 dx`` at one time."""
    return _weighted_power(state, 1.0, 10.0)


def strauss_ratio(state: RadialState) -> float:
    m = mass(state)
    k = grad_norm_sq(state)
    if m == 0 or k == 0:
        return 0.0
    sup = float(np.max(np.sqrt(state.grid.nodes) * np.abs(state.u)))
    return sup / (m**0.25 * k**0.25)


def z_prime(state: RadialState, weight: VirialWeight) -> float:
    """``2 Im int grad a . grad u  conj(u) dx`` as ``8 pi sum da_j Im(conj w_j w_{j+1})``.

    The weight increments are exact node differences, so this is the exact time
    derivative of ``weighted_mass`` under the discrete linear flow.
    """
    grid = state.grid
    wp = _padded(state.w)
    a = weight.derivative(grid.dr * np.arange(grid.n + 2))
    cross = np.imag(np.conj(wp[:-1]) * wp[1:])
    return 2.0 * FOUR_PI * float(np.sum(np.diff(a) / grid.dr * cross))


def lvirial_terms(state: RadialState, coef: Coefficient, weight: VirialWeight, p: float):
    """The four terms of the second-derivative identity for a radial weight.

    Hessian term ``4 int a'' |u_r|^2 dx`` uses ``u_r = (w_r - w/r)/r``, which
    integrates by parts to ``4 pi (int a''|w_r|^2 dr + int a''' |w|^2 / r dr)``.
    """
    grid = state.grid
    r = grid.nodes
    dr = grid.dr
    dw = np.diff(_padded(state.w))
    a2_mid = weight.derivative(grid.midpoints, 2)
    a3 = weight.derivative(r, 3)
    hess = 4.0 * FOUR_PI * (
        float(np.sum(a2_mid * np.abs(dw) ** 2)) / dr + dr * float(np.sum(a3 / r * np.abs(state.w) ** 2))
    )
    g = coef(r)
    lap = weight.laplacian(r)
    nonlin = -(2.0 * p - 2.0) / (p + 1.0) * _weighted_power(state, lap * g, p + 1.0)
    flux = 4.0 / (p + 1.0) * _weighted_power(state, weight.derivative(r, 1) * coef.deriv(r), p + 1.0)
    bilap = -_weighted_power(state, weight.bilaplacian(r), 2.0)
    return hess, nonlin, flux, bilap


def lvirial_rhs(state: RadialState, coef: Coefficient, weight: VirialWeight, p: float) -> float:
    return float(sum(lvirial_terms(state, coef, weight, p)))


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    energy: float
    grad_norm_sq: float
    potential: float
    lp1_norm: float
    virial_V: float
    z_r: float
    z_r_prime: float
    lvirial_rhs: float
    strauss_ratio: float
    s_increment: float

    def as_row(self):
        return [getattr(self, c) for c in CSV_COLUMNS]


def record(state: RadialState, coef: Coefficient, weight: VirialWeight = UNBOUNDED,
           window: float = 0.0, p: float | None = None) -> DiagnosticsRecord:
    """Evaluate every monitored functional; ``window`` is the S-norm increment
    accumulated by the caller since the previous record."""
    if p is None:
        p = 5.0 - 2.0 * coef.b
    if window < 0:
        raise ParameterDomainError("s_increment window must be non-negative")
    grad = grad_norm_sq(state)
    pot = potential(state, coef, p)
    return DiagnosticsRecord(
        t=float(state.t),
        mass=mass(state),
        energy=0.5 * grad - pot / (p + 1.0),
        grad_norm_sq=grad,
        potential=pot,
        lp1_norm=lp_norm(state, p + 1.0),
        virial_V=weighted_mass(state, UNBOUNDED),
        z_r=weighted_mass(state, weight),
        z_r_prime=z_prime(state, weight),
        lvirial_rhs=lvirial_rhs(state, coef, weight, p),
        strauss_ratio=strauss_ratio(state),
        s_increment=float(window),
    )


class CsvSink:
    """Streams records to a CSV file as they arrive (header row first)."""

    def __init__(self, path, header_comment: str | None = None):
        self._fh = open(path, "w", newline="")
        if header_comment:
            self._fh.write(f"# {header_comment}\n")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(CSV_COLUMNS)

    def __call__(self, rec: DiagnosticsRecord):
        self._writer.writerow([f"{v:.17g}" for v in rec.as_row()])
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_csv(path, records, header_comment: str | None = None):
    """Write records with a mandatory header row and 17 significant digits."""
    with CsvSink(path, header_comment) as sink:
        for rec in records:
            sink(rec)


def read_csv(path) -> list[DiagnosticsRecord]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected diagnostics header {header}")
    return [DiagnosticsRecord(*map(float, row)) for row in reader if row]


def records_to_array(records) -> dict:
    """Column-oriented view: ``{name: np.ndarray}``."""
    return {f.name: np.array([getattr(r, f.name) for r in records]) for f in fields(DiagnosticsRecord)}


def record_to_dict(rec: DiagnosticsRecord) -> dict:
    return asdict(rec)
