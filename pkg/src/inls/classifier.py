"""Threshold hypotheses on initial data, run monitors and the dichotomy verdict.

The classifier never certifies scattering or blowup; it reports whether a run
is *consistent* with one side of the dichotomy, with the evidence spelled out.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import quad

from .coefficient import Coefficient, CoefficientReport
from .diagnostics import energy, grad_norm_sq
from .errors import ParameterDomainError
from .groundstate import GroundState, q_profile
from .state import RadialState

SCATTER = "ScatterHypothesis"
BLOWUP = "BlowupHypothesis"
ABOVE = "AboveThreshold"

GLOBAL_SCATTER_EVIDENCE = "GlobalScatterEvidence"
BLOWUP_EVIDENCE = "BlowupEvidence"
INCONCLUSIVE = "Inconclusive"

S_TAIL_RATIO = 1e-3
COERCIVITY_BAND = (0.5, 2.0)


@dataclass(frozen=True)
class RegionAssessment:
    energy_phi: float
    kinetic_phi: float
    threshold_E: float
    threshold_K: float
    region: str
    margins: dict = field(default_factory=dict)
    hypothesis_met: bool = True
    threshold_E_run_g: float | None = None

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class EvidenceItem:
    name: str
    ok: bool | None  # None = not applicable
    value: float | None = None
    detail: str = ""

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Verdict:
    kind: str
    evidence: tuple
    stop_reason: str
    region: str = ""
    margins: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "region": self.region,
            "verdict": self.kind,
            "stop_reason": self.stop_reason,
            "margins": dict(self.margins),
            "evidence": [e.to_dict() for e in self.evidence],
        }


def assess_region(energy_phi: float, kinetic_phi: float, gs: GroundState,
                  hypothesis_met: bool = True, threshold_E_run_g: float | None = None) -> RegionAssessment:
    """Place ``(E_g(phi), gs_eff |phi|^2)`` relative to the ground-state thresholds."""
    thr_e, thr_k = gs.threshold_energy, gs.grad_norm_sq
    if energy_phi < thr_e:
        region = SCATTER if kinetic_phi < thr_k else BLOWUP
    else:
        region = ABOVE
    return RegionAssessment(
        energy_phi=float(energy_phi),
        kinetic_phi=float(kinetic_phi),
        threshold_E=thr_e,
        threshold_K=thr_k,
        region=region,
        margins={"energy": thr_e - energy_phi, "kinetic": thr_k - kinetic_phi},
        hypothesis_met=hypothesis_met,
        threshold_E_run_g=threshold_E_run_g,
    )


def ground_state_energy_with(coef: Coefficient, gs: GroundState) -> float | None:
    """``E_g(Q_b)`` evaluated with the run's coefficient instead of ``|x|**-b``."""
    b, p = gs.params.b, gs.params.p
    lo, hi = coef.domain
    if lo > 0 or math.isfinite(hi):
        return None

    def f(r):
        return 4.0 * math.pi * r ** (2.0 - b) * float(coef.profile(r)) * q_profile(r, gs.params) ** (p + 1.0)

    pot = sum(quad(f, a, c, limit=200)[0] for a, c in ((0, 1), (1, 1e3), (1e3, math.inf)))
    return gs.grad_norm_sq / 2.0 - pot / (p + 1.0)


def classify_initial(state: RadialState, coef: Coefficient, gs: GroundState,
                     report: CoefficientReport) -> RegionAssessment:
    """Region of the initial datum: energy with the run's ``g`` and ``gs_eff |grad phi|^2``."""
    p = gs.params.p
    e_phi = energy(state, coef, p)
    k_phi = report.gs_eff * grad_norm_sq(state)
    return assess_region(e_phi, k_phi, gs, hypothesis_met=report.variational_ok,
                         threshold_E_run_g=ground_state_energy_with(coef, gs))


def _columns(records):
    return {
        "t": np.array([r.t for r in records]),
        "grad": np.array([r.grad_norm_sq for r in records]),
        "pot": np.array([r.potential for r in records]),
        "energy": np.array([r.energy for r in records]),
        "V": np.array([r.virial_V for r in records]),
        "s": np.array([r.s_increment for r in records]),
    }


def _second_differences(t, v):
    t1, t2, t3 = t[:-2], t[1:-1], t[2:]
    return 2.0 * ((v[2:] - v[1:-1]) / (t3 - t2) - (v[1:-1] - v[:-2]) / (t2 - t1)) / (t3 - t1)


def monitor_trapping(records, gs: GroundState, report: CoefficientReport,
                     assessment: RegionAssessment | None = None) -> list[EvidenceItem]:
    """Kinetic trapping, coercivity band and positivity along a sub-threshold run."""
    if not records:
        return [EvidenceItem("trapping", None, detail="no records")]
    c = _columns(records)
    if assessment is None:
        assessment = assess_region(c["energy"][0], report.gs_eff * c["grad"][0], gs)
    if assessment.region != SCATTER:
        return [EvidenceItem("trapping", None, detail=f"not applicable: initial region {assessment.region}")]

    kin = report.gs_eff * c["grad"]
    kin_margin = float(np.min(gs.grad_norm_sq - kin))
    items = [EvidenceItem("kinetic_trapped", kin_margin > 0, kin_margin,
                          "gs_eff*|grad u|^2 < |grad Q_b|^2 at every record")]

    nonzero = c["grad"] > 0
    if np.any(nonzero):
        ratio = c["energy"][nonzero] / c["grad"][nonzero]
        r0 = ratio[0]
        lo, hi = sorted((COERCIVITY_BAND[0] * r0, COERCIVITY_BAND[1] * r0))
        band_margin = float(min(np.min(ratio - lo), np.min(hi - ratio)))
        items.append(EvidenceItem("coercivity_band", band_margin >= 0, band_margin,
                                  f"E/|grad u|^2 within [{lo:.6g}, {hi:.6g}] (0.5x..2x initial ratio)"))
    else:
        items.append(EvidenceItem("coercivity_band", True, 0.0, "zero state"))

    pos = float(np.min(c["grad"] - c["pot"]))
    items.append(EvidenceItem("positivity", pos >= 0, pos, "|grad u|^2 - int g|u|^{p+1} >= 0"))
    return items


def monitor_negative(records, gs: GroundState, report: CoefficientReport, eta: float = 0.0,
                     assessment: RegionAssessment | None = None,
                     transient_fraction: float = 0.1) -> list[EvidenceItem]:
    """Negativity of ``|grad u|^2 - (1 - eta) int g|u|^{p+1}`` and concavity of the virial."""
    if report.kg is None:
        raise ParameterDomainError("k_g undefined (g0 >= p0 + 1); negativity monitor needs it")
    if not 0.0 <= eta <= report.kg + report.tol:
        raise ParameterDomainError(f"eta={eta} outside [0, k_g={report.kg}]")
    if not records:
        return [EvidenceItem("negativity", None, detail="no records")]
    c = _columns(records)
    if assessment is None:
        assessment = assess_region(c["energy"][0], report.gs_eff * c["grad"][0], gs)
    if assessment.region != BLOWUP:
        return [EvidenceItem("negativity", None, detail=f"not applicable: initial region {assessment.region}")]

    p0 = gs.params.p0
    q = c["grad"] - (1.0 - eta) * c["pot"]
    worst = float(np.max(q))
    items = [EvidenceItem("negativity", worst < 0, worst,
                          f"|grad u|^2 - (1-eta) int g|u|^(p+1) < 0 at every record (eta={eta:g})")]
    coef = p0 - (p0 + 1.0) * eta
    items.append(EvidenceItem("bound_coefficient_positive", coef > 0, coef,
                              "p0 - (p0+1) eta > 0, so the lower-order bound is strictly negative"))
    if len(records) >= 3:
        d2 = _second_differences(c["t"], c["V"])
        skip = int(math.floor(transient_fraction * d2.size))
        tail = d2[skip:]
        worst_d2 = float(np.max(tail)) if tail.size else -math.inf
        items.append(EvidenceItem("virial_concave", bool(tail.size) and worst_d2 <= 0, worst_d2,
                                  f"discrete d2/dt2 of int |x|^2|u|^2 <= 0 after {skip} transient triples"))
    else:
        items.append(EvidenceItem("virial_concave", None, detail="fewer than 3 records"))
    return items


def verdict(run) -> Verdict:
    """Aggregate monitors and the stop reason of a stored run into a verdict.

    ``run`` needs ``records``, ``assessment``, ``ground_state``, ``report``,
    ``stop_reason``, ``stop_time``, ``truncation_flag`` and ``refinement``
    (dict or None); an ``eta`` attribute, if present, feeds the negativity
    monitor.
    The scattering side relies on the blowup criterion read in reverse (a
    stagnating space-time L^10 accumulation), which is a heuristic.
    """
    a = run.assessment
    evidence = []
    margins = dict(a.margins)
    if not a.hypothesis_met:
        evidence.append(EvidenceItem("variational_hypothesis", False, detail="variational condition unmet"))
    if run.truncation_flag:
        evidence.append(EvidenceItem("truncation", False, detail="radiation reached the outer boundary"))
        return Verdict(INCONCLUSIVE, tuple(evidence), run.stop_reason, a.region, margins)

    kind = INCONCLUSIVE
    if a.region == SCATTER:
        items = monitor_trapping(run.records, run.ground_state, run.report, a)
        evidence.extend(items)
        s = np.array([r.s_increment for r in run.records])
        peak = float(s.max()) if s.size else 0.0
        trailing = float(s[-1]) if s.size else 0.0
        decayed = peak == 0.0 or trailing < S_TAIL_RATIO * peak
        evidence.append(EvidenceItem("s_increment_decay", decayed, trailing / peak if peak else 0.0,
                                     f"trailing S-norm increment < {S_TAIL_RATIO:g} x peak (heuristic)"))
        completed = run.stop_reason == "t_end"
        evidence.append(EvidenceItem("completed", completed, detail=f"stop_reason={run.stop_reason}"))
        if completed and decayed and all(i.ok is not False for i in items):
            kind = GLOBAL_SCATTER_EVIDENCE
    elif a.region == BLOWUP:
        eta = getattr(run, "eta", 0.0)
        items = monitor_negative(run.records, run.ground_state, run.report, eta, a)
        evidence.extend(items)
        stopped = run.stop_reason == "blowup"
        evidence.append(EvidenceItem("blowup_stop", stopped, detail=f"stop_reason={run.stop_reason}"))
        ref = getattr(run, "refinement", None)
        if ref:
            consistent = ref.get("stop_reason") == "blowup" and ref["stop_time"] < run.stop_time
            evidence.append(EvidenceItem(
                "refinement_consistent", consistent, ref.get("stop_time"),
                f"refined stop time {ref.get('stop_time')} < base {run.stop_time}"))
        else:
            consistent = True
            evidence.append(EvidenceItem("refinement_consistent", None, detail="no refined companion run"))
        if stopped and consistent and all(i.ok is not False for i in items):
            kind = BLOWUP_EVIDENCE
    else:
        evidence.append(EvidenceItem("region", None, detail="initial data above threshold; no prediction"))
    return Verdict(kind, tuple(evidence), run.stop_reason, a.region, margins)
