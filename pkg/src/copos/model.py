"""Reformed Stepanova tumor-immune dynamics.

Two states: tumor cell count x1 (units of 1e6 cells) and effector-cell
density x2 (dimensionless). Tumor growth follows a Gompertz law saturating
at the carrying capacity ``x_inf``; the immune compartment is stimulated by
the tumor up to an inverse threshold, decays naturally and receives a
constant influx. Chemotherapy (u1) kills tumor cells proportionally to the
tumor load, immunotherapy (u2) boosts the effector population.

All functions here are pure; the types are immutable value objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# Positivity floor: the Gompertz term is singular at x1 = 0, so integration
# never lets a state cross below this value.
EPS_POS = 1e-12

_POSITIVE_FIELDS = (
    "mu_c", "mu_I", "gamma", "beta", "delta", "alpha", "x_inf", "k_x1", "k_x2",
)


@dataclass(frozen=True)
class ModelParams:
    """Model coefficients; all rates are per day, cell counts in 1e6 cells.

    mu_c    tumor growth coefficient
    mu_I    tumor-stimulated proliferation rate of effector cells
    gamma   tumor/effector interaction rate
    beta    inverse threshold for tumor suppression (dimensionless)
    delta   natural death rate of effector cells
    alpha   influx rate of effector cells from primary organs
    x_inf   fixed carrying capacity of the tumor
    k_x1    maximum dose rate of the chemotherapeutic agent
    k_x2    maximum dose rate of the immunotherapeutic agent
    """

    mu_c: float
    mu_I: float
    gamma: float
    beta: float
    delta: float
    alpha: float
    x_inf: float
    k_x1: float
    k_x2: float

    def __post_init__(self):
        for name in _POSITIVE_FIELDS:
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"ModelParams.{name} must be strictly positive, got {value!r}")


#: Published parameter set for the reformed Stepanova model. The immunotherapy
#: dose-rate constant is not tabulated in the source; it is taken equal to the
#: chemotherapy one (both normalized to 1).
STEPANOVA_TABLE1 = ModelParams(
    mu_c=0.5599,
    mu_I=0.00484,
    gamma=1.0,
    beta=0.00264,
    delta=0.37451,
    alpha=0.1181,
    x_inf=780.0,
    k_x1=1.0,
    k_x2=1.0,
)

PARAM_PRESETS = {"stepanova-table1": STEPANOVA_TABLE1}


@dataclass(frozen=True)
class State:
    """Point in the (x1, x2) plane. The dynamics keep both coordinates
    strictly positive for positive initial data and nonnegative doses."""

    x1: float
    x2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2], dtype=float)


KIND_BENIGN = "stable-node-benign"
KIND_MALIGNANT = "stable-node-malignant"
KIND_SADDLE = "saddle"
KIND_UNSTABLE = "unstable-node"


@dataclass(frozen=True)
class Equilibrium:
    point: State
    kind: str
    eigenvalues: tuple[complex, complex]


def gompertz(x1: float, params: ModelParams) -> float:
    """Gompertz growth factor -ln(x1 / x_inf); positive below the carrying
    capacity, zero at it, negative above."""
    if x1 <= 0.0:
        raise ValueError(f"gompertz requires x1 > 0, got {x1!r}")
    return -math.log(x1 / params.x_inf)


def _rhs(params: ModelParams, x1: float, x2: float, u1: float, u2: float) -> tuple[float, float]:
    f = -math.log(x1 / params.x_inf)
    dx1 = params.mu_c * x1 * f - params.gamma * x1 * x2 - params.k_x1 * x1 * u1
    dx2 = (params.mu_I * (x1 - params.beta * x1 * x1) * x2
           - params.delta * x2 + params.alpha + params.k_x2 * x2 * u2)
    return dx1, dx2


def derivatives(params: ModelParams, s: State, u1: float = 0.0, u2: float = 0.0) -> tuple[float, float]:
    """Right-hand side (dx1/dt, dx2/dt) at state ``s`` under doses (u1, u2)."""
    if s.x1 <= 0.0:
        raise ValueError(f"derivatives requires x1 > 0, got {s.x1!r}")
    return _rhs(params, s.x1, s.x2, u1, u2)


def jacobian(params: ModelParams, s: State) -> np.ndarray:
    """Analytic Jacobian of the unforced model (u = 0) at ``s``."""
    if s.x1 <= 0.0:
        raise ValueError(f"jacobian requires x1 > 0, got {s.x1!r}")
    x1, x2 = s.x1, s.x2
    j11 = -params.mu_c * math.log(x1 / params.x_inf) - params.mu_c - params.gamma * x2
    j12 = -params.gamma * x1
    j21 = params.mu_I * (1.0 - 2.0 * params.beta * x1) * x2
    j22 = params.mu_I * (x1 - params.beta * x1 * x1) - params.delta
    return np.array([[j11, j12], [j21, j22]])


def _eig2(J: np.ndarray) -> tuple[complex, complex]:
    tr = J[0, 0] + J[1, 1]
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    disc = tr * tr - 4.0 * det
    if disc >= 0.0:
        root = math.sqrt(disc)
        lam = (complex((tr - root) / 2.0), complex((tr + root) / 2.0))
    else:
        root = math.sqrt(-disc)
        lam = (complex(tr / 2.0, -root / 2.0), complex(tr / 2.0, root / 2.0))
    return lam


def _classify(J: np.ndarray, x1: float, params: ModelParams) -> tuple[str, tuple[complex, complex]]:
    lam = _eig2(J)
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    if det < 0.0:
        return KIND_SADDLE, lam
    if lam[0].real < 0.0 and lam[1].real < 0.0:
        kind = KIND_BENIGN if x1 < params.x_inf / 2.0 else KIND_MALIGNANT
        return kind, lam
    return KIND_UNSTABLE, lam


def _x2_nullcline(params: ModelParams, x1: float) -> float:
    # dx1/dt = 0 with x1 != 0 pins x2 on this curve.
    return (params.mu_c / params.gamma) * math.log(params.x_inf / x1)


def find_equilibria(
    params: ModelParams,
    x1_scan: Optional[tuple[float, float]] = None,
    grid: int = 2000,
) -> list[Equilibrium]:
    """Unforced equilibria found by reducing to one dimension.

    dx1/dt = 0 (x1 > 0) gives x2 = (mu_c/gamma) ln(x_inf/x1); the residual of
    dx2/dt = 0 along that curve is scanned on ``grid`` points over ``x1_scan``
    and every sign change is bisected to 1e-8 in x1. Roots are classified by
    the eigenvalues of the analytic Jacobian and returned sorted by x1. An
    empty list signals a degenerate parameter set, not a failure.
    """
    if x1_scan is None:
        x1_scan = (1.0, params.x_inf - 1.0)
    lo, hi = x1_scan
    if not (0.0 < lo < hi):
        raise ValueError(f"scan interval must satisfy 0 < lo < hi, got {x1_scan!r}")
    if grid < 100:
        raise ValueError(f"grid must be at least 100, got {grid}")

    def residual(x1: float) -> float:
        x2 = _x2_nullcline(params, x1)
        return (params.mu_I * (x1 - params.beta * x1 * x1) * x2
                - params.delta * x2 + params.alpha)

    xs = np.linspace(lo, hi, grid)
    vals = np.array([residual(x) for x in xs])
    roots = []
    for k in range(grid - 1):
        a, b, fa, fb = xs[k], xs[k + 1], vals[k], vals[k + 1]
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb < 0.0:
            while b - a > 1e-8:
                mid = 0.5 * (a + b)
                fm = residual(mid)
                if fa * fm <= 0.0:
                    b = mid
                else:
                    a, fa = mid, fm
            roots.append(0.5 * (a + b))
    if vals[-1] == 0.0:
        roots.append(xs[-1])

    out = []
    for x1 in roots:
        point = State(x1, _x2_nullcline(params, x1))
        kind, lam = _classify(jacobian(params, point), x1, params)
        out.append(Equilibrium(point=point, kind=kind, eigenvalues=lam))
    out.sort(key=lambda e: e.point.x1)
    return out


@dataclass
class Trajectory:
    """Time-indexed record of one run.

    ``u_applied[k]`` is the dose pair held over [times[k], times[k+1]); the
    final row repeats the last applied value so all sequences share a length.
    Closed-loop runs also carry raw controller outputs (u1, u2*), integrator
    states, memberships and intervention counters; open-loop integrations
    leave those fields as None.
    """

    times: np.ndarray
    states: np.ndarray
    u_applied: np.ndarray
    u_raw: Optional[np.ndarray] = None
    e_int: Optional[np.ndarray] = None
    memberships: Optional[np.ndarray] = None
    clamp_events: int = 0
    premise_clamp_events: int = 0
    windup_events: int = 0
    z_r: Optional[tuple[float, float]] = None
    therapy: Optional[str] = None
    name: Optional[str] = None

    def terminal_state(self) -> State:
        return State(float(self.states[-1, 0]), float(self.states[-1, 1]))


PolicyFn = Callable[[float, State], tuple[float, float]]


def rk4_step(params: ModelParams, x1: float, x2: float, u1: float, u2: float,
             dt: float) -> tuple[float, float]:
    """One classic RK4 step with the dose pair held constant; stage inputs
    are floored at EPS_POS before evaluating the vector field. A non-finite
    stage rejects the step."""

    def f(y1: float, y2: float) -> tuple[float, float]:
        d = _rhs(params, max(y1, EPS_POS), max(y2, EPS_POS), u1, u2)
        if not (math.isfinite(d[0]) and math.isfinite(d[1])):
            raise RuntimeError(
                f"step rejected: non-finite stage derivative at state "
                f"({y1!r}, {y2!r}) with doses ({u1!r}, {u2!r})")
        return d

    k1 = f(x1, x2)
    k2 = f(x1 + 0.5 * dt * k1[0], x2 + 0.5 * dt * k1[1])
    k3 = f(x1 + 0.5 * dt * k2[0], x2 + 0.5 * dt * k2[1])
    k4 = f(x1 + dt * k3[0], x2 + dt * k3[1])
    n1 = x1 + (dt / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    n2 = x2 + (dt / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    return max(n1, EPS_POS), max(n2, EPS_POS)


def integrate_rk4(params: ModelParams, x0: State, policy: PolicyFn,
                  t_end: float, dt: float) -> Trajectory:
    """Fixed-step RK4 integration of the nonlinear model under a dose policy.

    The policy is sampled once per step at the step start and held constant
    over the step (zero-order hold), matching the closed-loop simulator's
    update pattern. States are clamped to the positivity floor after each
    step; a non-finite stage aborts with an error.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if t_end < dt:
        raise ValueError(f"t_end must be at least dt, got t_end={t_end!r}, dt={dt!r}")
    if x0.x1 <= 0.0 or x0.x2 <= 0.0:
        raise ValueError(f"initial state must lie in the positive orthant, got {x0!r}")

    n_steps = int(round(t_end / dt))
    times = np.arange(n_steps + 1) * dt
    states = np.empty((n_steps + 1, 2))
    u_applied = np.empty((n_steps + 1, 2))
    x1, x2 = x0.x1, x0.x2
    states[0] = (x1, x2)
    for k in range(n_steps):
        u1, u2 = policy(float(times[k]), State(x1, x2))
        x1, x2 = rk4_step(params, x1, x2, u1, u2, dt)
        if not (math.isfinite(x1) and math.isfinite(x2)):
            raise RuntimeError(
                f"integration produced a non-finite state at t={times[k + 1]:.6g} "
                f"(u1={u1!r}, u2={u2!r})")
        states[k + 1] = (x1, x2)
        u_applied[k] = (u1, u2)
    u_applied[n_steps] = u_applied[n_steps - 1] if n_steps else (0.0, 0.0)
    return Trajectory(times=times, states=states, u_applied=u_applied)


def zero_policy(t: float, s: State) -> tuple[float, float]:
    """No-treatment policy."""
    return 0.0, 0.0
