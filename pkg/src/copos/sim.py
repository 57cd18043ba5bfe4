"""Closed-loop treatment simulation.

The controller runs at a fixed period: evaluate the premise triple at the
measured plant state, clamp it into the fuzzification box, blend the
per-rule gains with the memberships, mask channels according to the
therapy, recover the physical doses from the transformed inputs, advance
the plant (RK4 on the nonlinear model, or its Euler map) and accumulate
the tracking-error integrators.

The chemotherapy channel drives u1 directly; the immunotherapy channel
drives the transformed input u2* = alpha + k_x2*x2*u2, so "no
immunotherapy" corresponds to u2* = alpha, not u2* = 0. Doses are clamped
to [0, cap] and the integrators carry anti-windup limits; every
intervention is counted on the trajectory record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .fuzzy import AugmentedVertexSystem, clamp_premises, membership, premise_values
from .model import (
    EPS_POS,
    KIND_SADDLE,
    ModelParams,
    State,
    Trajectory,
    find_equilibria,
    rk4_step,
    _rhs,
)

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

THERAPIES = ("none", "chemo-only", "immuno-only", "combined")
PLANTS = ("continuous-rk4", "discrete-euler")

#: Default dose caps in normalized units (full dose rate = 1).
DEFAULT_CAPS = (1.0, 1.0)

#: Guard for the u2 recovery denominator k_x2 * x2.
EPS_DEN = 1e-6

#: Anti-windup limits on the tracking-error integrators (eI1, eI2). The
#: chemo channel saturates for days on the way down from a macroscopic
#: tumor and the immuno channel while the effector density rebuilds;
#: unlimited integrators would overwhelm both channels for the rest of the
#: treatment window (and diverge outright on the failing immuno-only run).
DEFAULT_WINDUP = (200.0, 40.0)


@dataclass(frozen=True)
class Scenario:
    """One treatment run: therapy arm, initial state, reference pair,
    horizon and controller period, and which plant integrates the truth."""

    therapy: str
    x0: State
    z_r: tuple[float, float]
    duration: float
    controller_period: float
    plant: str = "continuous-rk4"
    name: Optional[str] = None

    def __post_init__(self):
        if self.therapy not in THERAPIES:
            raise ValueError(f"therapy must be one of {THERAPIES}, got {self.therapy!r}")
        if self.plant not in PLANTS:
            raise ValueError(f"plant must be one of {PLANTS}, got {self.plant!r}")
        if not (self.x0.x1 > 0.0 and self.x0.x2 > 0.0):
            raise ValueError(f"x0 must lie in the positive orthant, got {self.x0!r}")
        if self.duration <= 0.0 or self.controller_period <= 0.0:
            raise ValueError("duration and controller_period must be positive")
        if self.duration < self.controller_period:
            raise ValueError("duration must cover at least one controller period")


@dataclass(frozen=True)
class OutcomeMetrics:
    """Headline numbers of a treatment run, recomputable from the
    trajectory alone."""

    max_tumor: float
    time_to_benign: Optional[float]
    terminal_state: State
    total_chemo_dose: float
    total_immuno_dose: float
    tracking_error: Optional[float]


def pdc_control(h: np.ndarray, K: Sequence[np.ndarray], xbar: np.ndarray) -> np.ndarray:
    """Membership-weighted gain blend: u = sum_i h_i K_i xbar."""
    h = np.asarray(h, dtype=float)
    xbar = np.asarray(xbar, dtype=float)
    if len(K) != h.shape[0]:
        raise ValueError(f"{h.shape[0]} memberships but {len(K)} gains")
    n = K[0].shape[1]
    if xbar.shape != (n,):
        raise ValueError(f"state has shape {xbar.shape}, gains expect ({n},)")
    u = np.zeros(K[0].shape[0])
    for hi, Ki in zip(h, K):
        u += hi * (Ki @ xbar)
    return u


def recover_inputs(raw: tuple[float, float], s: State, params: ModelParams,
                   caps: tuple[float, float] = DEFAULT_CAPS,
                   eps_den: float = EPS_DEN) -> tuple[tuple[float, float], int]:
    """Physical doses from the transformed controller outputs.

    u1 is clamped into [0, cap1]; u2 = (u2* - alpha) / (k_x2 * x2) with the
    denominator floored at eps_den, then clamped into [0, cap2]. Returns the
    applied pair and the number of interventions (clamps plus denominator
    guards) taken.
    """
    u1_raw, u2_star = raw
    n_events = 0
    u1 = min(max(u1_raw, 0.0), caps[0])
    if u1 != u1_raw:
        n_events += 1
    den = params.k_x2 * max(s.x2, eps_den)
    if s.x2 < eps_den:
        n_events += 1
    u2_unclamped = (u2_star - params.alpha) / den
    u2 = min(max(u2_unclamped, 0.0), caps[1])
    if u2 != u2_unclamped:
        n_events += 1
    return (u1, u2), n_events


def _mask_raw(therapy: str, raw: np.ndarray, alpha: float) -> tuple[float, float]:
    u1, u2s = float(raw[0]), float(raw[1])
    if therapy in ("none", "immuno-only"):
        u1 = 0.0
    if therapy in ("none", "chemo-only"):
        u2s = alpha  # u2* = alpha <=> physical immuno dose exactly zero
    return u1, u2s


def run_closed_loop(scenario: Scenario, system: AugmentedVertexSystem,
                    K: Sequence[np.ndarray], params: ModelParams,
                    caps: tuple[float, float] = DEFAULT_CAPS,
                    eps_den: float = EPS_DEN,
                    windup_limit: tuple[float, float] = DEFAULT_WINDUP,
                    rk4_substeps: int = 1) -> Trajectory:
    """Simulate one scenario under the PDC law.

    The controller acts on the true plant state. Each period: premises ->
    clamped memberships -> raw input (therapy-masked) -> recovered doses ->
    plant advance (RK4 substeps or one Euler step) -> integrator update
    e <- e + T*(z_r - z) using the state at the period start.
    """
    if not system.discrete:
        raise ValueError("run_closed_loop expects a discrete augmented system")
    bounds = system.premise_bounds
    K = [np.asarray(Kj, dtype=float) for Kj in K]
    if len(K) != system.r or any(Kj.shape != (2, 4) for Kj in K):
        raise ValueError(f"expected {system.r} gains of shape (2, 4)")

    T = scenario.controller_period
    n_steps = int(round(scenario.duration / T))
    times = np.arange(n_steps + 1) * T
    states = np.empty((n_steps + 1, 2))
    e_int = np.zeros((n_steps + 1, 2))
    u_raw = np.empty((n_steps + 1, 2))
    u_app = np.empty((n_steps + 1, 2))
    members = np.empty((n_steps + 1, 8))

    x1, x2 = scenario.x0.x1, scenario.x0.x2
    e1 = e2 = 0.0
    zr1, zr2 = scenario.z_r
    w1, w2 = windup_limit
    clamp_events = premise_clamps = windup_events = 0
    dt_sub = T / rk4_substeps

    states[0] = (x1, x2)
    for k in range(n_steps):
        s = State(x1, x2)
        theta, n_cl = clamp_premises(premise_values(params, s), bounds)
        premise_clamps += n_cl
        h = membership(theta, bounds)
        members[k] = h
        raw = pdc_control(h, K, np.array([x1, x2, e1, e2]))
        raw1, raw2 = _mask_raw(scenario.therapy, raw, params.alpha)
        u_raw[k] = (raw1, raw2)
        (u1, u2), n_ev = recover_inputs((raw1, raw2), s, params, caps, eps_den)
        clamp_events += n_ev
        u_app[k] = (u1, u2)

        try:
            if scenario.plant == "continuous-rk4":
                for _ in range(rk4_substeps):
                    x1, x2 = rk4_step(params, x1, x2, u1, u2, dt_sub)
            else:
                d1, d2 = _rhs(params, x1, x2, u1, u2)
                if not (math.isfinite(d1) and math.isfinite(d2)):
                    raise RuntimeError("non-finite Euler derivative")
                x1 = max(x1 + T * d1, EPS_POS)
                x2 = max(x2 + T * d2, EPS_POS)
        except (RuntimeError, OverflowError) as exc:
            raise RuntimeError(
                f"simulation diverged at t={times[k + 1]:.6g} days "
                f"(therapy={scenario.therapy}, doses=({u1:.3g}, {u2:.3g})): {exc}") from exc
        if not (math.isfinite(x1) and math.isfinite(x2)):
            raise RuntimeError(
                f"simulation diverged at t={times[k + 1]:.6g} days "
                f"(therapy={scenario.therapy}, doses=({u1:.3g}, {u2:.3g}))")

        e1 += T * (zr1 - s.x1)
        e2 += T * (zr2 - s.x2)
        for idx, (val, lim) in enumerate(((e1, w1), (e2, w2))):
            if val > lim or val < -lim:
                windup_events += 1
                if idx == 0:
                    e1 = max(min(e1, w1), -w1)
                else:
                    e2 = max(min(e2, w2), -w2)
        states[k + 1] = (x1, x2)
        e_int[k + 1] = (e1, e2)

    # final bookkeeping row: memberships of the terminal state, inputs repeated
    theta, n_cl = clamp_premises(premise_values(params, State(x1, x2)), bounds)
    premise_clamps += n_cl
    members[n_steps] = membership(theta, bounds)
    u_raw[n_steps] = u_raw[n_steps - 1]
    u_app[n_steps] = u_app[n_steps - 1]

    return Trajectory(times=times, states=states, u_applied=u_app, u_raw=u_raw,
                      e_int=e_int, memberships=members,
                      clamp_events=clamp_events,
                      premise_clamp_events=premise_clamps,
                      windup_events=windup_events,
                      z_r=scenario.z_r, therapy=scenario.therapy,
                      name=scenario.name)


def run_scenarios(scenarios: Sequence[Scenario], system: AugmentedVertexSystem,
                  K: Sequence[np.ndarray], params: ModelParams,
                  **kwargs) -> list[Trajectory]:
    """Run a batch of independent scenarios; results in input order."""
    return [run_closed_loop(sc, system, K, params, **kwargs) for sc in scenarios]


def summarize(traj: Trajectory, params: ModelParams) -> OutcomeMetrics:
    """Headline metrics: peak tumor load, the first day the tumor crosses
    the saddle abscissa downward for good, terminal state, dose integrals
    (trapezoid rule) and the terminal tracking error."""
    if traj.states.shape[0] < 2:
        raise ValueError("trajectory must contain at least two samples")
    x1 = traj.states[:, 0]
    max_tumor = float(x1.max())

    saddles = [eq for eq in find_equilibria(params) if eq.kind == KIND_SADDLE]
    time_to_benign: Optional[float] = None
    if saddles:
        threshold = saddles[0].point.x1
        above = np.nonzero(x1 >= threshold)[0]
        if above.size == 0:
            time_to_benign = 0.0
        elif above[-1] + 1 < x1.shape[0]:
            time_to_benign = float(traj.times[above[-1] + 1])

    total_chemo = float(_trapezoid(traj.u_applied[:, 0], traj.times))
    total_immuno = float(_trapezoid(traj.u_applied[:, 1], traj.times))
    terminal = traj.terminal_state()
    tracking = None
    if traj.z_r is not None:
        tracking = float(math.hypot(terminal.x1 - traj.z_r[0], terminal.x2 - traj.z_r[1]))
    return OutcomeMetrics(max_tumor=max_tumor, time_to_benign=time_to_benign,
                          terminal_state=terminal, total_chemo_dose=total_chemo,
                          total_immuno_dose=total_immuno, tracking_error=tracking)


CSV_HEADER = ("t,x1,x2,eI1,eI2,u1_raw,u2star_raw,u1,u2,"
              "h1,h2,h3,h4,h5,h6,h7,h8")


def trajectory_to_csv(traj: Trajectory) -> str:
    """Full-precision CSV (round-trip float formatting) of a closed-loop
    trajectory."""
    for name in ("u_raw", "e_int", "memberships"):
        if getattr(traj, name) is None:
            raise ValueError(f"trajectory lacks {name}; only closed-loop runs export to CSV")
    lines = [CSV_HEADER]
    for k in range(traj.times.shape[0]):
        cells = [repr(float(traj.times[k])),
                 repr(float(traj.states[k, 0])), repr(float(traj.states[k, 1])),
                 repr(float(traj.e_int[k, 0])), repr(float(traj.e_int[k, 1])),
                 repr(float(traj.u_raw[k, 0])), repr(float(traj.u_raw[k, 1])),
                 repr(float(traj.u_applied[k, 0])), repr(float(traj.u_applied[k, 1]))]
        cells.extend(repr(float(v)) for v in traj.memberships[k])
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def metrics_to_dict(metrics: OutcomeMetrics) -> dict:
    return {
        "max_tumor": metrics.max_tumor,
        "time_to_benign": metrics.time_to_benign,
        "terminal_state": {"x1": metrics.terminal_state.x1,
                           "x2": metrics.terminal_state.x2},
        "total_chemo_dose": metrics.total_chemo_dose,
        "total_immuno_dose": metrics.total_immuno_dose,
        "tracking_error": metrics.tracking_error,
    }
