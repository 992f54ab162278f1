"""The explicit ground state Q_b and the radial ODE toolkit around it.

``Q_b(r) = (1 + r**p0 / (p0 + 1))**(-1/p0)`` solves ``Q'' + 2Q'/r + r**-b Q**p = 0``.
Its Hessian-free quantities (gradient norm, weighted potential integral,
threshold energy, best Sobolev-type constant) fix the thresholds used by the
classifier. The shooting part integrates the same ODE for a general
coefficient to exhibit finite zeros.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp

from .coefficient import Coefficient, ProblemParams
from ._validation import check_positive
from .errors import NumericFailure, ParameterDomainError

R_SPLIT = 1e6
QUAD_RTOL = 1e-12
SHOOT_R0 = 1e-6


def q_profile(r, params: ProblemParams):
    r = np.asarray(r, dtype=float)
    p0 = params.p0
    return (1.0 + r**p0 / (p0 + 1.0)) ** (-1.0 / p0)


def q_derivs(r, params: ProblemParams):
    """Return ``(Q, Q', Q'')`` from the closed form."""
    r = np.asarray(r, dtype=float)
    p0 = params.p0
    u = 1.0 + r**p0 / (p0 + 1.0)
    q = u ** (-1.0 / p0)
    q1 = -(r ** (p0 - 1.0)) / (p0 + 1.0) * u ** (-1.0 / p0 - 1.0)
    q2 = (
        u ** (-1.0 / p0 - 2.0) * r ** (2.0 * p0 - 2.0) / (p0 + 1.0)
        - (p0 - 1.0) * r ** (p0 - 2.0) / (p0 + 1.0) * u ** (-1.0 / p0 - 1.0)
    )
    return q, q1, q2


def _integrate_halfline(f, tail_coef, tail_power):
    """Integrate ``f`` over (0, inf) in decades up to ``R_SPLIT``, then the tail.

    ``tail_coef * r**-tail_power`` is the leading behaviour of ``f`` at infinity;
    its integral beyond ``R_SPLIT`` is returned as an a-priori tail bound.
    """
    edges = [0.0] + [10.0**k for k in range(-6, int(round(math.log10(R_SPLIT))) + 1)]
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e = quad(f, lo, hi, epsabs=0.0, epsrel=QUAD_RTOL, limit=200)
        total += val
        err += e
    # r = R_SPLIT / t maps the tail onto (0, 1]
    tail, e = quad(lambda t: f(R_SPLIT / t) * R_SPLIT / (t * t) if t > 0 else 0.0,
                   0.0, 1.0, epsabs=0.0, epsrel=QUAD_RTOL, limit=200)
    total += tail
    err += e
    tail_bound = tail_coef * R_SPLIT ** (1.0 - tail_power) / (tail_power - 1.0)
    if not math.isfinite(total) or err > 1e-10 * abs(total) + 1e-300:
        raise NumericFailure(f"quadrature did not converge (estimate {total}, error {err})")
    return total, err, tail_bound


@dataclass(frozen=True)
class GroundState:
    params: ProblemParams
    grad_norm_sq: float
    potential_integral: float
    threshold_energy: float
    best_constant: float
    quad_error: float = 0.0
    tail_bound: float = 0.0

    def Q(self, r):
        return q_profile(r, self.params)

    def Qprime(self, r):
        return q_derivs(r, self.params)[1]

    def summary(self) -> dict:
        return {
            "b": self.params.b,
            "grad_norm_sq": self.grad_norm_sq,
            "potential_integral": self.potential_integral,
            "threshold_energy": self.threshold_energy,
            "best_constant": self.best_constant,
            "quad_error": self.quad_error,
            "tail_bound": self.tail_bound,
        }

    @classmethod
    def from_summary(cls, d: dict) -> "GroundState":
        """Inverse of ``summary`` (no quadrature is redone)."""
        return cls(
            params=ProblemParams(d["b"]),
            grad_norm_sq=d["grad_norm_sq"],
            potential_integral=d["potential_integral"],
            threshold_energy=d["threshold_energy"],
            best_constant=d["best_constant"],
            quad_error=d.get("quad_error", 0.0),
            tail_bound=d.get("tail_bound", 0.0),
        )


def build_ground_state(params: ProblemParams) -> GroundState:
    """Gradient norm, potential integral, threshold energy and best constant of Q_b."""
    b, p, p0 = params.b, params.p, params.p0
    lead = (p0 + 1.0) ** (1.0 / p0)  # Q_b ~ lead / r at infinity

    def grad_integrand(r):
        return 4.0 * math.pi * q_derivs(r, params)[1] ** 2 * r * r

    def pot_integrand(r):
        return 4.0 * math.pi * r ** (2.0 - b) * q_profile(r, params) ** (p + 1.0)

    grad, e1, tb1 = _integrate_halfline(grad_integrand, 4.0 * math.pi * lead**2, 2.0)
    pot, e2, tb2 = _integrate_halfline(pot_integrand, 4.0 * math.pi * lead ** (p + 1.0), p - 1.0 + b)
    energy = grad / 2.0 - pot / (p + 1.0)
    best = pot ** (1.0 / (p + 1.0)) / math.sqrt(grad)
    return GroundState(
        params=params,
        grad_norm_sq=grad,
        potential_integral=pot,
        threshold_energy=energy,
        best_constant=best,
        quad_error=e1 + e2,
        tail_bound=tb1 + tb2,
    )


def trapping_function(y, gs: GroundState):
    """``f(y) = y/2 - C**(p+1) y**((p+1)/2) / (p+1)``; maximal at ``y = |Q_b|^2``."""
    p = gs.params.p
    y = np.asarray(y, dtype=float)
    return 0.5 * y - gs.best_constant ** (p + 1.0) / (p + 1.0) * y ** ((p + 1.0) / 2.0)


def ode_residual(gs: GroundState, r):
    """``Q'' + 2Q'/r + r**-b Q**p`` for the closed-form ground state."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ParameterDomainError("ode_residual needs r > 0")
    q, q1, q2 = q_derivs(r, gs.params)
    return q2 + 2.0 * q1 / r + r ** (-gs.params.b) * q ** gs.params.p


# --------------------------------------------------------------------------- shooting


@dataclass
class ShootingResult:
    Q0: float
    r: np.ndarray
    Q: np.ndarray
    Qprime: np.ndarray
    first_zero: float | None
    H_samples: np.ndarray
    V_samples: np.ndarray
    pohozaev_residual: float
    r0: float = SHOOT_R0
    dense: object = field(default=None, repr=False)

    def trajectory(self):
        return np.column_stack([self.r, self.Q, self.Qprime])

    def at(self, r):
        """Dense-output ``(Q, Q')`` at radii inside the integrated range."""
        r = np.asarray(r, dtype=float)
        y = self.dense(np.log(r))
        return y[0], y[1] / r**2


def _frobenius_start(coef: Coefficient, Q0: float, r0: float, params: ProblemParams):
    """Two-term expansion ``Q0 - Q0**p (h0 r^{2-b}/((2-b)(3-b)) + h1 r^{3-b}/((3-b)(4-b)))``."""
    b, p = params.b, params.p
    h0, h1 = coef.origin_expansion(r0)
    c0 = Q0**p * h0 / ((2.0 - b) * (3.0 - b))
    c1 = Q0**p * h1 / ((3.0 - b) * (4.0 - b))
    q = Q0 - c0 * r0 ** (2.0 - b) - c1 * r0 ** (3.0 - b)
    dq = -c0 * (2.0 - b) * r0 ** (1.0 - b) - c1 * (3.0 - b) * r0 ** (2.0 - b)
    H = h1 * r0 ** (4.0 - b) / (4.0 - b)
    V = Q0 ** (p + 1.0) * H / (p + 1.0)
    return q, dq, H, V


def shoot(coef: Coefficient, Q0: float, r_max: float, params: ProblemParams,
          r0: float = SHOOT_R0, rtol: float = 1e-12, atol: float = 1e-14,
          n_samples: int = 2000) -> ShootingResult:
    """Integrate ``Q'' + 2Q'/r + g Q**p = 0`` from the origin with height ``Q0``.

    Works in ``s = log r`` with the flux variable ``P = r**2 Q'`` so the
    ``2/r`` term disappears. ``H`` and the Pohozaev integral ``V`` ride along
    as extra components. Integration stops at the first zero of ``Q``.

    The flux and integral components start many decades below one, so they are
    controlled by ``rtol`` alone; ``atol`` applies to ``Q`` only.
    """
    Q0 = check_positive("Q0", Q0)
    r_max = check_positive("r_max", r_max)
    if r_max <= r0:
        raise ParameterDomainError("r_max must exceed the start radius")
    b, p = params.b, params.p
    q, dq, H0, V0 = _frobenius_start(coef, Q0, r0, params)

    def rhs(s, y):
        r = math.exp(s)
        Q, P = y[0], y[1]
        h = float(coef.profile(r))
        dh = float(coef.profile_deriv(r))
        Qp = abs(Q) ** p * math.copysign(1.0, Q) if Q != 0 else 0.0
        w = r ** (4.0 - b) * dh
        return [P / r, -(r ** (3.0 - b)) * h * Qp, w, w * abs(Q) ** (p + 1.0) / (p + 1.0)]

    def crossing(s, y):
        return y[0]

    crossing.terminal = True
    crossing.direction = -1

    s0, s1 = math.log(r0), math.log(r_max)
    sol = solve_ivp(rhs, (s0, s1), [q, r0**2 * dq, H0, V0], method="DOP853",
                    rtol=rtol, atol=[atol, 1e-40, 1e-40, 1e-40],
                    dense_output=True, events=crossing)
    if sol.status == -1:
        partial = ShootingResult(Q0, np.exp(sol.t), sol.y[0], sol.y[1] / np.exp(2 * sol.t),
                                 None, sol.y[2], sol.y[3], math.nan, r0, sol.sol)
        raise NumericFailure(f"shooting failed: {sol.message}", partial=partial)

    first_zero = None
    s_end = sol.t[-1]
    if sol.t_events[0].size:
        first_zero = float(math.exp(sol.t_events[0][0]))
        s_end = sol.t_events[0][0]
    s_grid = np.linspace(s0, s_end, n_samples)
    y = sol.sol(s_grid)
    r = np.exp(s_grid)
    Q = y[0]
    Qprime = y[1] / r**2
    result = ShootingResult(
        Q0=Q0, r=r, Q=Q, Qprime=Qprime, first_zero=first_zero,
        H_samples=y[2], V_samples=y[3], pohozaev_residual=math.nan, r0=r0, dense=sol.sol,
    )
    bdry = pohozaev_boundary(coef, r, Q, Qprime, params)
    result.pohozaev_residual = float(np.max(np.abs(result.V_samples - bdry)))
    return result


def compute_H(coef: Coefficient, r: float, params: ProblemParams) -> float:
    """``H(r) = int_0^r s**(3-b) (s**b g)' ds``."""
    if r < 0:
        raise ParameterDomainError("compute_H needs r >= 0")
    if r == 0:
        return 0.0
    b = params.b

    def f(s):
        return s ** (3.0 - b) * float(coef.profile_deriv(s))

    lo = max(coef.domain[0], 0.0)
    val, err = quad(f, lo, r, epsabs=1e-14, epsrel=1e-12, limit=400)
    if not math.isfinite(val):
        raise NumericFailure("H(r) integral is not finite")
    return float(val)


def pohozaev_boundary(coef: Coefficient, r, Q, Qr, params: ProblemParams):
    """Sphere-boundary form of V(r) from the Pohozaev identity on the ball of radius r.

    Surface integrand ``(x.grad Q) dQ/dnu - (x.nu)|grad Q|^2/2 + (x.nu) g Q^{p+1}/(p+1)
    + Q dQ/dnu / 2`` times ``r**2`` (the ``4 pi`` cancels against the volume side).
    """
    r = np.asarray(r, dtype=float)
    p = params.p
    g = coef(r)
    return 0.5 * r**3 * Qr**2 + r**3 * g * np.abs(Q) ** (p + 1.0) / (p + 1.0) + 0.5 * r**2 * Q * Qr


def pohozaev_boundary_displayed(coef: Coefficient, r, Q, Qr, params: ProblemParams):
    """The boundary expression with the printed constants (3, 1, 2); kept for comparison."""
    r = np.asarray(r, dtype=float)
    p = params.p
    return 3.0 * r**3 * Qr**2 + r**3 * coef(r) * np.abs(Q) ** (p + 1.0) + 2.0 * r**2 * Q * Qr


def pohozaev_integral(coef: Coefficient, shot: ShootingResult, r: float, params: ProblemParams):
    """``V(r) = (1/(p+1)) int_0^r s**(3-b) (s**b g)' Q**(p+1) ds`` along a shot trajectory."""
    b, p = params.b, params.p
    r0 = shot.r0
    if r < r0 or r > shot.r[-1] * (1 + 1e-12):
        raise ParameterDomainError("r outside the integrated trajectory")
    _, _, _, V0 = _frobenius_start(coef, shot.Q0, r0, params)
    if r == r0:
        return V0

    def f(s):
        Q = shot.at(s)[0]
        return s ** (3.0 - b) * float(coef.profile_deriv(s)) * abs(float(Q)) ** (p + 1.0)

    val, _ = quad(f, r0, r, epsabs=1e-14, epsrel=1e-11, limit=400)
    return V0 + val / (p + 1.0)


def pohozaev_check(coef: Coefficient, shot: ShootingResult, r: float, params: ProblemParams,
                   return_parts: bool = False):
    """Absolute difference between the volume and boundary forms of V(r)."""
    v_int = pohozaev_integral(coef, shot, r, params)
    Q, Qr = shot.at(r)
    v_bdry = float(pohozaev_boundary(coef, r, Q, Qr, params))
    residual = abs(v_int - v_bdry)
    if return_parts:
        v_disp = float(pohozaev_boundary_displayed(coef, r, Q, Qr, params))
        return residual, {"V_int": v_int, "V_bdry": v_bdry, "V_bdry_displayed": v_disp}
    return residual
