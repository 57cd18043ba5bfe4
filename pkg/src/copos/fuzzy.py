"""Sector-nonlinearity fuzzification of the transformed treatment model.

After the immunotherapy change of variable u2* = alpha + k_x2*x2*u2, the
model is linear in (x1, x2) with three state-dependent coefficients:

    theta1 = -mu_c*ln(x1/x_inf) - gamma*x2      (tumor net growth rate)
    theta2 = mu_I*(x1 - beta*x1^2) - delta      (effector net growth rate)
    theta3 = -k_x1*x1                           (chemo input gain)

Bounding each coefficient over a box domain and writing it as a convex
combination of its extremes yields an 8-rule Takagi-Sugeno model that
reproduces the nonlinear right-hand side exactly inside the domain. The
module also builds the integral-action augmentation (4 states) and its
forward-Euler discretization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .model import ModelParams, State

R_RULES = 8

#: Box used for fuzzification when reproducing the published vertex
#: matrices. The published x1 range starts at 0, where theta1 diverges; a
#: lower bound of 0.1 is the value consistent with the published entries.
DEFAULT_DOMAIN_BOUNDS = (0.1, 1000.0, 0.0, 5.0)

#: Box used when building the synthesis model. The Theorem-type LP couples
#: the tumor growth rate at x1_min to the chemo authority ratio
#: x1_max/x1_min; below x1_min ~ 21 the conditions are structurally
#: infeasible at T = 0.01 (see decisions ledger), so the control design
#: uses a tighter tumor range.
CONTROL_DOMAIN_BOUNDS = (30.0, 1000.0, 0.0, 5.0)

#: Default sampling period (days) for the Euler discretization.
DEFAULT_T = 0.01

MODES = ("endpoint", "global")


class DegenerateSectorError(ValueError):
    """A premise has max == min, so its sector has zero width."""


@dataclass(frozen=True)
class Domain:
    """Fuzzification box, x1 in [x1_min, x1_max], x2 in [x2_min, x2_max].

    A zero-width box is representable (ordering is enforced here); it
    surfaces as a DegenerateSectorError when premise bounds are taken.
    """

    x1_min: float
    x1_max: float
    x2_min: float
    x2_max: float

    def __post_init__(self):
        if not (0.0 < self.x1_min <= self.x1_max):
            raise ValueError(f"need 0 < x1_min <= x1_max, got {self.x1_min!r}, {self.x1_max!r}")
        if not (0.0 <= self.x2_min <= self.x2_max):
            raise ValueError(f"need 0 <= x2_min <= x2_max, got {self.x2_min!r}, {self.x2_max!r}")

    def corners(self):
        return [(x1, x2) for x1 in (self.x1_min, self.x1_max)
                for x2 in (self.x2_min, self.x2_max)]

    def contains(self, s: State) -> bool:
        return (self.x1_min <= s.x1 <= self.x1_max
                and self.x2_min <= s.x2 <= self.x2_max)


DEFAULT_DOMAIN = Domain(*DEFAULT_DOMAIN_BOUNDS)
CONTROL_DOMAIN = Domain(*CONTROL_DOMAIN_BOUNDS)


@dataclass(frozen=True)
class PremiseBounds:
    """(min, max) interval per premise plus the mode that produced them."""

    theta1: tuple[float, float]
    theta2: tuple[float, float]
    theta3: tuple[float, float]
    mode: str

    def __post_init__(self):
        for name in ("theta1", "theta2", "theta3"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise DegenerateSectorError(
                    f"premise {name} has a degenerate sector [{lo!r}, {hi!r}]")

    def intervals(self) -> tuple[tuple[float, float], ...]:
        return (self.theta1, self.theta2, self.theta3)


@dataclass(frozen=True)
class VertexSystem:
    """The r=8 local linear models of the continuous transformed plant."""

    r: int
    A: tuple[np.ndarray, ...]
    B: tuple[np.ndarray, ...]
    C: np.ndarray
    premise_bounds: PremiseBounds

    @property
    def state_matrices(self):
        return self.A

    @property
    def input_matrices(self):
        return self.B

    @property
    def n(self) -> int:
        return 2

    @property
    def m(self) -> int:
        return 2


@dataclass(frozen=True)
class AugmentedVertexSystem:
    """Integral-action augmentation (states x1, x2, eI1, eI2), continuous or
    Euler-discretized with period T."""

    Abar: tuple[np.ndarray, ...]
    Bbar: tuple[np.ndarray, ...]
    Dbar: np.ndarray
    Cbar: np.ndarray
    premise_bounds: PremiseBounds
    discrete: bool = False
    T: Optional[float] = None

    @property
    def r(self) -> int:
        return len(self.Abar)

    @property
    def state_matrices(self):
        return self.Abar

    @property
    def input_matrices(self):
        return self.Bbar

    @property
    def n(self) -> int:
        return 4

    @property
    def m(self) -> int:
        return 2


AnySystem = Union[VertexSystem, AugmentedVertexSystem]

# Rule i picks the (M, N, S) corner combination in the fixed order
# h1 = M1*N1*S1, h2 = M1*N1*S2, ..., h8 = M2*N2*S2 (index 1 = maximum).
_CORNER_IS_MAX = tuple(
    (i < 4, i % 4 < 2, i % 2 == 0) for i in range(R_RULES)
)


def premise_values(params: ModelParams, s: State) -> tuple[float, float, float]:
    """Premise triple (theta1, theta2, theta3) at a state."""
    if s.x1 <= 0.0:
        raise ValueError(f"premise_values requires x1 > 0, got {s.x1!r}")
    t1 = -params.mu_c * math.log(s.x1 / params.x_inf) - params.gamma * s.x2
    t2 = params.mu_I * (s.x1 - params.beta * s.x1 * s.x1) - params.delta
    t3 = -params.k_x1 * s.x1
    return t1, t2, t3


def premise_bounds(params: ModelParams, domain: Domain, mode: str = "endpoint") -> PremiseBounds:
    """Premise extrema over the box.

    endpoint mode evaluates the four corners (reproduces the published
    numbers). global mode uses the true extrema: theta1 is monotone in both
    arguments and theta3 is linear, so corners suffice; theta2 is concave in
    x1 with an interior maximum at x1 = 1/(2*beta) when that lies inside the
    box.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    vals = np.array([premise_values(params, State(x1, x2)) for x1, x2 in domain.corners()])
    lo = vals.min(axis=0)
    hi = vals.max(axis=0)
    if mode == "global":
        x1_star = 1.0 / (2.0 * params.beta)
        if domain.x1_min < x1_star < domain.x1_max:
            hi[1] = params.mu_I / (4.0 * params.beta) - params.delta
    return PremiseBounds(theta1=(float(lo[0]), float(hi[0])),
                         theta2=(float(lo[1]), float(hi[1])),
                         theta3=(float(lo[2]), float(hi[2])),
                         mode=mode)


def clamp_premises(theta: tuple[float, float, float],
                   bounds: PremiseBounds) -> tuple[tuple[float, float, float], int]:
    """Clamp each premise into its sector; returns the clamped triple and
    how many components required clamping."""
    out = []
    n_clamped = 0
    for v, (lo, hi) in zip(theta, bounds.intervals()):
        w = min(max(v, lo), hi)
        if w != v:
            n_clamped += 1
        out.append(w)
    return (out[0], out[1], out[2]), n_clamped


def membership(theta: tuple[float, float, float], bounds: PremiseBounds) -> np.ndarray:
    """Normalized rule activations h[8]; sums to one, each in [0, 1].

    Premises are clamped into their sectors first, so out-of-domain states
    still produce a point on the simplex.
    """
    (t1, t2, t3), _ = clamp_premises(theta, bounds)
    coords = []
    for v, (lo, hi) in zip((t1, t2, t3), bounds.intervals()):
        coords.append((v - lo) / (hi - lo))
    m1, n1, s1 = coords
    h = np.empty(R_RULES)
    for i, (mm, nn, ss) in enumerate(_CORNER_IS_MAX):
        h[i] = ((m1 if mm else 1.0 - m1)
                * (n1 if nn else 1.0 - n1)
                * (s1 if ss else 1.0 - s1))
    return h


def build_vertices(bounds: PremiseBounds) -> VertexSystem:
    """The eight (A_i, B_i) pairs: A_i = diag(theta1 corner, theta2 corner),
    B_i = diag(theta3 corner, 1), C = identity."""
    A, B = [], []
    for mm, nn, ss in _CORNER_IS_MAX:
        t1 = bounds.theta1[1] if mm else bounds.theta1[0]
        t2 = bounds.theta2[1] if nn else bounds.theta2[0]
        t3 = bounds.theta3[1] if ss else bounds.theta3[0]
        A.append(np.diag([t1, t2]))
        B.append(np.diag([t3, 1.0]))
    return VertexSystem(r=R_RULES, A=tuple(A), B=tuple(B), C=np.eye(2),
                        premise_bounds=bounds)


def blend(h: np.ndarray, system: AnySystem) -> tuple[np.ndarray, np.ndarray]:
    """Convex combination of the vertex matrices with weights h."""
    h = np.asarray(h, dtype=float)
    if h.shape != (system.r,):
        raise ValueError(f"membership vector has shape {h.shape}, expected ({system.r},)")
    if abs(float(h.sum()) - 1.0) > 1e-12 or h.min() < -1e-12 or h.max() > 1.0 + 1e-12:
        raise ValueError(f"membership vector violates the simplex: {h!r}")
    A = sum(hi * Ai for hi, Ai in zip(h, system.state_matrices))
    B = sum(hi * Bi for hi, Bi in zip(h, system.input_matrices))
    return A, B


def augment(system: VertexSystem) -> AugmentedVertexSystem:
    """Append the tracking-error integrators eI = integral(z_r - z) dt.

    State order (x1, x2, eI1, eI2):
        Abar_i = [[A_i, 0], [-C, 0]]   Bbar_i = [[B_i], [0]]
        Dbar   = [[0, 0], [0, I]]      Cbar   = [C, 0]
    """
    Abar, Bbar = [], []
    for Ai, Bi in zip(system.A, system.B):
        Ab = np.zeros((4, 4))
        Ab[:2, :2] = Ai
        Ab[2:, :2] = -system.C
        Bb = np.zeros((4, 2))
        Bb[:2, :] = Bi
        Abar.append(Ab)
        Bbar.append(Bb)
    Dbar = np.zeros((4, 4))
    Dbar[2:, 2:] = np.eye(2)
    Cbar = np.hstack([system.C, np.zeros((2, 2))])
    return AugmentedVertexSystem(Abar=tuple(Abar), Bbar=tuple(Bbar), Dbar=Dbar,
                                 Cbar=Cbar, premise_bounds=system.premise_bounds)


def discretize_euler(system: AugmentedVertexSystem, T: float) -> AugmentedVertexSystem:
    """Forward-Euler discretization with sampling period T (days):
    Ad = I + T*Abar, Bd = T*Bbar, Dd = T*Dbar."""
    if T <= 0.0:
        raise ValueError(f"sampling period must be positive, got {T!r}")
    if system.discrete:
        raise ValueError("system is already discrete")
    eye = np.eye(4)
    Ad = tuple(eye + T * Ab for Ab in system.Abar)
    Bd = tuple(T * Bb for Bb in system.Bbar)
    return AugmentedVertexSystem(Abar=Ad, Bbar=Bd, Dbar=T * system.Dbar,
                                 Cbar=system.Cbar, premise_bounds=system.premise_bounds,
                                 discrete=True, T=T)


def _bounds_to_dict(b: PremiseBounds) -> dict:
    return {"theta1": list(b.theta1), "theta2": list(b.theta2),
            "theta3": list(b.theta3), "mode": b.mode}


def system_to_dict(system: AnySystem) -> dict:
    """JSON-ready dictionary (matrix lists, bounds, mode, sampling data)."""
    out = {
        "r": system.r,
        "premise_bounds": _bounds_to_dict(system.premise_bounds),
    }
    if isinstance(system, VertexSystem):
        out["kind"] = "vertex"
        out["A"] = [Ai.tolist() for Ai in system.A]
        out["B"] = [Bi.tolist() for Bi in system.B]
        out["C"] = system.C.tolist()
    else:
        out["kind"] = "augmented"
        out["discrete"] = system.discrete
        out["T"] = system.T
        out["Abar"] = [Ai.tolist() for Ai in system.Abar]
        out["Bbar"] = [Bi.tolist() for Bi in system.Bbar]
        out["Dbar"] = system.Dbar.tolist()
        out["Cbar"] = system.Cbar.tolist()
    return out


def system_from_dict(data: dict) -> AnySystem:
    """Inverse of :func:`system_to_dict`."""
    b = data["premise_bounds"]
    bounds = PremiseBounds(theta1=tuple(b["theta1"]), theta2=tuple(b["theta2"]),
                           theta3=tuple(b["theta3"]), mode=b["mode"])
    if data["kind"] == "vertex":
        return VertexSystem(r=data["r"],
                            A=tuple(np.array(m) for m in data["A"]),
                            B=tuple(np.array(m) for m in data["B"]),
                            C=np.array(data["C"]),
                            premise_bounds=bounds)
    return AugmentedVertexSystem(Abar=tuple(np.array(m) for m in data["Abar"]),
                                 Bbar=tuple(np.array(m) for m in data["Bbar"]),
                                 Dbar=np.array(data["Dbar"]),
                                 Cbar=np.array(data["Cbar"]),
                                 premise_bounds=bounds,
                                 discrete=data["discrete"], T=data["T"])
