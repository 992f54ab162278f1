"""Strang split-step evolution of radial data.

Half nonlinear phase, exact linear propagation in the discrete sine basis
(which diagonalizes the Dirichlet second difference acting on ``w = r u``),
half nonlinear phase. Each substep is unitary in the discrete mass.
"""

from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from ._validation import check_positive
from .coefficient import Coefficient
from .diagnostics import UNBOUNDED, VirialWeight, grad_norm_sq, record, space_l10
from .errors import NumericFailure, ParameterDomainError
from .state import RadialGrid, RadialState, prepare_initial, tail_mass_fraction  # noqa: F401

log = logging.getLogger(__name__)

STOP_T_END = "t_end"
STOP_BLOWUP = "blowup"
STOP_RESOLUTION = "resolution"
STOP_NUMERIC = "numeric_failure"
BOUNDARY_FRACTION = 0.05
BOUNDARY_LEVEL = 1e-4


def laplacian_eigenvalues(grid: RadialGrid) -> np.ndarray:
    """``mu_k = (4/dr^2) sin^2(k pi / (2(n+1)))``, eigenvalues of minus the Dirichlet stencil."""
    k = np.arange(1, grid.n + 1)
    return (4.0 / grid.dr**2) * np.sin(k * math.pi / (2.0 * (grid.n + 1))) ** 2


class SplitStepper:
    """Caches the node values of ``g`` and the Laplacian spectrum for one grid."""

    def __init__(self, grid: RadialGrid, coef: Coefficient, p: float | None = None):
        self.grid = grid
        self.coef = coef
        self.p = 5.0 - 2.0 * coef.b if p is None else p
        self.g = np.asarray(coef(grid.nodes), dtype=float)
        self.mu = laplacian_eigenvalues(grid)
        self._r = grid.nodes

    def nonlinear_phase(self, w, tau):
        u_abs = np.abs(w) / self._r
        return w * np.exp(1j * tau * self.g * u_abs ** (self.p - 1.0))

    def linear(self, w, dt):
        modes = scipy.fft.dst(w, type=1, norm="ortho")
        modes *= np.exp(-1j * dt * self.mu)
        return scipy.fft.dst(modes, type=1, norm="ortho")

    def advance(self, w, dt):
        w = self.nonlinear_phase(w, 0.5 * dt)
        w = self.linear(w, dt)
        return self.nonlinear_phase(w, 0.5 * dt)

    def phase_rate(self, w):
        """``max_j g(r_j) |u_j|^(p-1)``: the fastest nonlinear rotation."""
        return float(np.max(self.g * (np.abs(w) / self._r) ** (self.p - 1.0)))


def step(state: RadialState, coef: Coefficient, dt: float, stepper: SplitStepper | None = None) -> RadialState:
    """One Strang step of size ``dt``; returns a new state."""
    dt = check_positive("dt", dt)
    stepper = stepper or SplitStepper(state.grid, coef)
    w = stepper.advance(state.w, dt)
    if not np.all(np.isfinite(w)):
        raise NumericFailure(f"non-finite field after step at t={state.t + dt:.6g}")
    return RadialState(state.grid, w, state.t + dt, dict(state.meta))


@dataclass(frozen=True)
class EvolveControls:
    dt0: float = 1e-3
    t_end: float = 1.0
    blowup_grad_factor: float = 4.0
    dt_floor: float = 1e-9
    record_every: float = 0.01
    limiter: bool = True

    def __post_init__(self):
        check_positive("dt0", self.dt0)
        check_positive("dt_floor", self.dt_floor)
        check_positive("t_end", self.t_end, allow_zero=True)
        check_positive("record_every", self.record_every)
        if not self.dt0 > self.dt_floor:
            raise ParameterDomainError("need dt0 > dt_floor > 0")
        if not self.blowup_grad_factor > 1:
            raise ParameterDomainError("blowup_grad_factor must exceed 1")


@dataclass
class RunFragment:
    """Outcome of one evolution: diagnostics series plus termination data."""

    records: list
    stop_reason: str
    stop_time: float
    final_state: RadialState
    truncation_flag: bool = False
    truncation_time: float | None = None
    n_steps: int = 0
    min_dt: float = math.inf
    grid: dict = field(default_factory=dict)


def _boundary_leak(w) -> bool:
    absw = np.abs(w)
    peak = absw.max()
    if peak == 0:
        return False
    edge = max(1, int(math.ceil(BOUNDARY_FRACTION * w.size)))
    return bool(absw[-edge:].max() > BOUNDARY_LEVEL * peak)


def evolve(state: RadialState, coef: Coefficient, controls: EvolveControls, sink=None,
           weight: VirialWeight = UNBOUNDED) -> RunFragment:
    """Advance ``state`` until ``t_end``, a blowup stop or a resolution stop.

    The step is ``min(dt0, dt0 / (1 + dt0 max_j g|u|^(p-1)))``, trimmed so that
    records land exactly on multiples of ``record_every``. ``sink`` (any
    callable) receives every ``DiagnosticsRecord`` as it is produced.
    """
    stepper = SplitStepper(state.grid, coef)
    p = stepper.p
    state = state.copy()
    t0 = state.t
    t_end = t0 + controls.t_end
    recs = []
    window = 0.0

    def emit(st):
        rec = record(st, coef, weight, window, p)
        recs.append(rec)
        if sink is not None:
            sink(rec)
        return rec

    first = emit(state)
    grad0 = first.grad_norm_sq
    leaked = _boundary_leak(state.w)
    leak_time = state.t if leaked else None
    frag = RunFragment(recs, STOP_T_END, state.t, state, leaked, leak_time,
                       grid={"r_max": state.grid.r_max, "n": state.grid.n})
    if controls.t_end == 0:
        return frag

    k_rec = 1
    next_rec = min(t0 + k_rec * controls.record_every, t_end)
    s_prev = space_l10(state)
    n_steps = 0
    min_dt = math.inf
    while True:
        rate = stepper.phase_rate(state.w) if controls.limiter else 0.0
        dt = min(controls.dt0, controls.dt0 / (1.0 + rate * controls.dt0))
        if dt < controls.dt_floor:
            frag.stop_reason = STOP_RESOLUTION
            break
        remaining = next_rec - state.t
        if remaining <= dt * (1 + 1e-12):
            dt = remaining
        elif remaining < 2.0 * dt:
            dt = 0.5 * remaining
        try:
            state = step(state, coef, dt, stepper)
        except NumericFailure:
            frag.stop_reason = STOP_NUMERIC
            break
        n_steps += 1
        min_dt = min(min_dt, dt)
        s_now = space_l10(state)
        window += 0.5 * dt * (s_prev + s_now)
        s_prev = s_now
        hit_record = abs(state.t - next_rec) <= 1e-12 * max(1.0, abs(next_rec))
        if hit_record:
            state.t = next_rec
            emit(state)
            window = 0.0
            if not frag.truncation_flag and _boundary_leak(state.w):
                frag.truncation_flag = True
                frag.truncation_time = state.t
                log.warning("radiation reached the outer boundary at t=%.4g", state.t)
            if state.t >= t_end:
                frag.stop_reason = STOP_T_END
                break
            k_rec += 1
            next_rec = min(t0 + k_rec * controls.record_every, t_end)
        if grad_norm_sq(state) >= controls.blowup_grad_factor * grad0 > 0:
            if not hit_record:
                emit(state)
                window = 0.0
            frag.stop_reason = STOP_BLOWUP
            break
    frag.stop_time = state.t
    frag.final_state = state
    frag.n_steps = n_steps
    frag.min_dt = min_dt
    return frag


# ------------------------------------------------------------------ checkpoints

CHECKPOINT_MAGIC = b"INLSCKPT"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<8sII")  # magic, version, reserved -> 16 bytes
_META = struct.Struct("<dqd")  # r_max, n, t


def write_checkpoint(path, state: RadialState) -> None:
    """Little-endian layout: 16-byte header, grid metadata and time, then
    ``n`` complex128 samples of ``w``."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, 0))
        fh.write(_META.pack(state.grid.r_max, state.grid.n, state.t))
        fh.write(np.ascontiguousarray(state.w, dtype="<c16").tobytes())


def read_checkpoint(path) -> RadialState:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size + _META.size:
        raise ValueError("checkpoint truncated")
    magic, version, _ = _HEADER.unpack_from(blob, 0)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError("not a checkpoint file (bad magic)")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    r_max, n, t = _META.unpack_from(blob, _HEADER.size)
    offset = _HEADER.size + _META.size
    w = np.frombuffer(blob, dtype="<c16", offset=offset)
    if w.size != n:
        raise ValueError(f"checkpoint holds {w.size} samples, header says {n}")
    return RadialState(RadialGrid(r_max, n), w.astype(complex), t)
