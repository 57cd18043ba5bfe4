"""Positivity checks, linear co-positive Lyapunov analysis and LP-based
parallel-distributed-compensation synthesis.

Stability of a discrete positive blended system x(k+1) = sum_i h_i A_i x(k)
is certified by a linear co-positive Lyapunov function V(x) = p^T x with
p >> 0. The certificate for the system itself requires (A_i^T - I) p << 0;
testing the transposed (dual) vertex set instead gives (A_i - I) p << 0,
and stability of the dual is equivalent to stability of the original.

Controller synthesis poses four condition families as one LP over a
diagonal matrix Q = diag(q) and per-rule gain pre-images M_j:

    (a) [(A_i - I) Q + B_i M_j] 1 << 0        for all i, j
    (b) Q >> 0
    (c) M_j <= 0 elementwise                  (optional, off by default)
    (d) (A_i Q + B_i M_j)_{ht} >= 0           for configured rows h, all t

Gains are recovered as K_j = M_j Q^{-1} and the closed-loop certificate is
p = Q 1. Conditions (a)-(d) bound neither the magnitude nor the sign of
the integral-channel gains (those only ever cost Lyapunov margin), so a
bare feasibility vertex lands on gain boundaries: zero integral action and
closed-loop eigenvalues exactly on the unit circle. The default options
therefore pin the integral and cross-coupling channels to loop-shaped
ratios (equality rows m_zt = kappa * q_t, substituted during assembly) and
let the LP decide the rest; ``gain_pins=None`` recovers the bare
conditions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .fuzzy import (
    CONTROL_DOMAIN,
    DEFAULT_T,
    AugmentedVertexSystem,
    Domain,
    VertexSystem,
    augment,
    build_vertices,
    discretize_euler,
    premise_bounds,
)
from .lp import DEFAULT_MARGIN, DEFAULT_Q_MAX, LinearProgram, solve, strictify
from .model import ModelParams

log = logging.getLogger("copos.synthesis")

#: Loop-shaped gain ratios for the 4-state augmented treatment design,
#: keyed by (input row z, state column t) of K. Chemotherapy (row 0) reacts
#: to the immune density and its own tracking-error integral; immunotherapy
#: (row 1) to the effector density and its integral. Cross-integrator
#: channels are pinned to zero so the integrator coupling block stays
#: nonsingular (otherwise the closed loop keeps an eigenvalue at exactly 1).
DEFAULT_GAIN_PINS: dict[tuple[int, int], float] = {
    (0, 1): -1.0,
    (0, 2): -0.025,
    (0, 3): 0.0,
    (1, 0): 0.0,
    (1, 1): -0.15,
    (1, 2): 0.0,
    (1, 3): 0.012,
}

_NONNEG_TOL = 1e-9


@dataclass(frozen=True)
class SynthesisOptions:
    """Knobs for :func:`synthesize_pdc`.

    positivity_rows: "plant" restricts condition (d) to the physical state
    rows of an augmented system (the integrator block contains -C and can
    never be elementwise nonnegative); "all" or an explicit tuple override.
    gain_pins: "default" applies :data:`DEFAULT_GAIN_PINS` to the 4-state,
    2-input augmented design and nothing elsewhere; None disables pinning;
    a mapping gives explicit ratios.
    """

    eps: float = DEFAULT_MARGIN
    q_max: float = DEFAULT_Q_MAX
    enforce_8c: bool = False
    positivity_rows: Union[str, tuple[int, ...]] = "plant"
    gain_pins: Union[str, None, Mapping[tuple[int, int], float]] = "default"


@dataclass(frozen=True)
class StabilityCertificate:
    """Lyapunov vector p (>> 0) and per-matrix decrement margins: entry k is
    max over rows of (G_k - I) p, strictly negative for every certified
    matrix."""

    p: np.ndarray
    margins: np.ndarray

    @property
    def worst_margin(self) -> float:
        return float(self.margins.max())


@dataclass(frozen=True)
class PositivityReport:
    mode: str
    a_ok: tuple[bool, ...]
    b_ok: tuple[bool, ...]

    @property
    def all_ok(self) -> bool:
        return all(self.a_ok) and all(self.b_ok)


@dataclass(frozen=True)
class ClosedLoopReport:
    """Per-pair recomputation of the closed loop A_i + B_i K_j, independent
    of the LP solution path."""

    closed_loop: np.ndarray          # (r, r, n, n)
    nonneg_ok: np.ndarray            # (r, r) bool, restricted rows
    radii: np.ndarray                # (r, r)
    rows_checked: tuple[int, ...]
    margins: Optional[np.ndarray]    # (r, r) decrement margins of supplied p
    certificate: Optional[StabilityCertificate]  # independent re-solve

    @property
    def worst_radius(self) -> float:
        return float(self.radii.max())

    @property
    def all_nonneg(self) -> bool:
        return bool(self.nonneg_ok.all())

    @property
    def all_schur(self) -> bool:
        return bool((self.radii < 1.0).all())

    @property
    def passed(self) -> bool:
        ok = self.all_nonneg and self.all_schur and self.certificate is not None
        if self.margins is not None:
            ok = ok and bool((self.margins < 0.0).all())
        return ok

    def summary_lines(self) -> list[str]:
        lines = [
            f"closed-loop pairs: {self.radii.size}",
            f"worst spectral radius: {self.worst_radius:.6f} "
            f"({'all Schur' if self.all_schur else 'NOT all Schur'})",
            f"row-nonnegativity on rows {self.rows_checked}: "
            f"{'ok' if self.all_nonneg else 'VIOLATED'}",
        ]
        if self.margins is not None:
            lines.append(f"worst Lyapunov decrement margin: {self.margins.max():.3e}")
        lines.append("independent LCPLF certificate: "
                     + ("found" if self.certificate is not None else "NOT FOUND"))
        return lines


@dataclass(frozen=True)
class SynthesisResult:
    feasible: bool
    Q: Optional[np.ndarray] = None
    M: tuple[np.ndarray, ...] = ()
    K: tuple[np.ndarray, ...] = ()
    certificate: Optional[StabilityCertificate] = None
    report: Optional[ClosedLoopReport] = None
    diagnostics: tuple[str, ...] = ()
    options: Optional[SynthesisOptions] = None


def check_positivity(A_list: Sequence[np.ndarray],
                     B_list: Optional[Sequence[np.ndarray]] = None,
                     mode: str = "discrete") -> PositivityReport:
    """Elementwise nonnegativity (discrete) or Metzler structure of A plus
    nonnegativity of B (continuous), per vertex."""
    if mode not in ("discrete", "continuous"):
        raise ValueError(f"mode must be 'discrete' or 'continuous', got {mode!r}")
    a_ok = []
    for A in A_list:
        A = np.asarray(A, dtype=float)
        if mode == "discrete":
            a_ok.append(bool((A >= 0.0).all()))
        else:
            off = A - np.diag(np.diag(A))
            a_ok.append(bool((off >= 0.0).all()))
    b_ok = []
    if B_list is not None:
        for B in B_list:
            b_ok.append(bool((np.asarray(B, dtype=float) >= 0.0).all()))
    return PositivityReport(mode=mode, a_ok=tuple(a_ok), b_ok=tuple(b_ok))


def spectral_radius(M: np.ndarray, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest eigenvalue magnitude.

    2x2 uses the closed-form eigenvalues. Elementwise-nonnegative matrices
    use power iteration from a deterministic start, falling back to the
    characteristic polynomial when the iteration stalls (periodic spectra);
    other matrices up to 4x4 use the characteristic-polynomial roots.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"spectral_radius expects a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("spectral_radius requires finite entries")
    n = M.shape[0]
    if n == 1:
        return float(abs(M[0, 0]))
    if n == 2:
        tr = M[0, 0] + M[1, 1]
        det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        disc = tr * tr - 4.0 * det
        if disc >= 0.0:
            r = np.sqrt(disc)
            return float(max(abs((tr + r) / 2.0), abs((tr - r) / 2.0)))
        return float(np.sqrt(det))
    if np.all(M >= 0.0):
        rho = _power_iteration(M, tol, max_iter)
        if rho is not None:
            return rho
        if n <= 4:
            return _charpoly_radius(M)
        raise RuntimeError(
            f"power iteration did not converge within {max_iter} iterations "
            f"for a {n}x{n} nonnegative matrix")
    if n <= 4:
        return _charpoly_radius(M)
    raise ValueError("matrices with negative entries are supported up to 4x4")


def _power_iteration(M: np.ndarray, tol: float, max_iter: int) -> Optional[float]:
    n = M.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    est = 0.0
    stable = 0
    for _ in range(max_iter):
        w = M @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        new_est = norm
        if abs(new_est - est) <= tol * max(1.0, new_est):
            stable += 1
            if stable >= 3:
                return new_est
        else:
            stable = 0
        est = new_est
        v = w / norm
    return None


def _charpoly_radius(M: np.ndarray) -> float:
    # Faddeev-LeVerrier coefficients, then companion roots
    n = M.shape[0]
    coeffs = [1.0]
    Mk = M.copy()
    for k in range(1, n + 1):
        ck = -np.trace(Mk) / k
        coeffs.append(float(ck))
        if k < n:
            Mk = M @ (Mk + ck * np.eye(n))
    roots = np.roots(coeffs)
    return float(np.abs(roots).max())


def lcplf_stability(A_list: Sequence[np.ndarray], eps: float = DEFAULT_MARGIN,
                    q_max: float = DEFAULT_Q_MAX,
                    dual: bool = False) -> Optional[StabilityCertificate]:
    """Search for a linear co-positive Lyapunov function by LP.

    Without the flag this certifies the blended system built from A_list
    directly (rows p^T (A_i - I) << 0). With ``dual=True`` every vertex is
    transposed first, i.e. the dual system is tested, whose certificate
    satisfies (A_i - I) p << 0 and still proves stability of the original.
    Returns None when the LP is infeasible; that is an analytical answer
    (no LCPLF of this form exists), not an error.
    """
    mats = [np.asarray(A, dtype=float) for A in A_list]
    n = mats[0].shape[0]
    for A in mats:
        if A.shape != (n, n):
            raise ValueError("all matrices must be square and of equal size")
    G = [A if dual else A.T for A in mats]

    lp = LinearProgram(n)
    for t in range(n):
        lp.set_bounds(t, eps, q_max)
    rel, rhs = strictify("<", 0.0, eps)
    for i, Gi in enumerate(G):
        GmI = Gi - np.eye(n)
        for h in range(n):
            lp.add_constraint(GmI[h, :], rel, rhs, label=f"lcplf[i={i},row={h}]")
    out = solve(lp)
    if not out.is_feasible:
        return None
    p = out.x
    margins = np.array([float(((Gi - np.eye(n)) @ p).max()) for Gi in G])
    return StabilityCertificate(p=p, margins=margins)


def _as_discrete_lists(system) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Accepts a discrete AugmentedVertexSystem, a VertexSystem whose
    matrices are taken as already-discrete, or a plain (A_list, B_list)
    pair."""
    if isinstance(system, AugmentedVertexSystem):
        if not system.discrete:
            raise ValueError("synthesis requires a discrete system; "
                             "apply discretize_euler first")
        return list(system.Abar), list(system.Bbar)
    if isinstance(system, VertexSystem):
        return list(system.A), list(system.B)
    A_list, B_list = system
    return ([np.asarray(A, dtype=float) for A in A_list],
            [np.asarray(B, dtype=float) for B in B_list])


def _resolve_rows(spec_rows, n: int) -> tuple[int, ...]:
    if spec_rows == "plant":
        return (0, 1) if n == 4 else tuple(range(n))
    if spec_rows == "all":
        return tuple(range(n))
    rows = tuple(int(r) for r in spec_rows)
    if any(r < 0 or r >= n for r in rows):
        raise ValueError(f"positivity rows {rows} out of range for n={n}")
    return rows


def _resolve_pins(gain_pins, n: int, m: int) -> dict[tuple[int, int], float]:
    if gain_pins is None:
        return {}
    if gain_pins == "default":
        return dict(DEFAULT_GAIN_PINS) if (n, m) == (4, 2) else {}
    pins = {}
    for (z, t), ratio in dict(gain_pins).items():
        if not (0 <= z < m and 0 <= t < n):
            raise ValueError(f"gain pin ({z}, {t}) out of range for m={m}, n={n}")
        pins[(z, t)] = float(ratio)
    return pins


def synthesize_pdc(system, opts: Optional[SynthesisOptions] = None) -> SynthesisResult:
    """Assemble and solve the synthesis LP, recover gains and verify.

    Pinned gain entries are substituted during assembly (m_zt = ratio *
    q_t), which leaves the LP over q and the unpinned entries of every M_j.
    On feasibility the gains K_j = M_j Q^{-1}, the certificate p = Q 1 with
    its per-pair decrement margins, and a full closed-loop verification
    report are returned. Infeasible outcomes carry the labels of the rows
    that retained artificial residue in phase 1.
    """
    opts = opts or SynthesisOptions()
    A, B = _as_discrete_lists(system)
    r = len(A)
    n = A[0].shape[0]
    m = B[0].shape[1]
    for Ai, Bi in zip(A, B):
        if Ai.shape != (n, n) or Bi.shape != (n, m):
            raise ValueError("vertex matrix dimensions are inconsistent")
    rows_checked = _resolve_rows(opts.positivity_rows, n)
    pins = _resolve_pins(opts.gain_pins, n, m)

    if opts.enforce_8c:
        bad = [f"8c-pin[z={z},t={t}]" for (z, t), ratio in pins.items() if ratio > 0.0]
        if bad:
            log.info("positive gain pins contradict M <= 0: %s", bad)
            return SynthesisResult(feasible=False, diagnostics=tuple(bad), options=opts)

    free = [(z, t) for z in range(m) for t in range(n) if (z, t) not in pins]
    n_vars = n + r * len(free)

    def m_col(j: int, z: int, t: int) -> int:
        return n + j * len(free) + free.index((z, t))

    def m_coeff_into(row: np.ndarray, j: int, z: int, t: int, coeff: float) -> None:
        # pinned entries contribute coeff * ratio to the q_t column
        if (z, t) in pins:
            row[t] += coeff * pins[(z, t)]
        else:
            row[m_col(j, z, t)] += coeff

    lp = LinearProgram(n_vars)
    for t in range(n):
        lp.set_bounds(t, opts.eps, opts.q_max)  # (b): Q >> 0, plus the scale cap
    if opts.enforce_8c:
        for j in range(r):
            for (z, t) in free:
                lp.set_bounds(m_col(j, z, t), -np.inf, 0.0)  # (c): M_j <= 0

    rel_a, rhs_a = strictify("<", 0.0, opts.eps)
    for i in range(r):
        AmI = A[i] - np.eye(n)
        for j in range(r):
            for h in range(n):
                row = np.zeros(n_vars)
                for t in range(n):
                    row[t] += AmI[h, t]
                    for z in range(m):
                        m_coeff_into(row, j, z, t, B[i][h, z])
                lp.add_constraint(row, rel_a, rhs_a, label=f"8a[i={i},j={j},h={h}]")
    for i in range(r):
        for j in range(r):
            for h in rows_checked:
                for t in range(n):
                    row = np.zeros(n_vars)
                    row[t] += A[i][h, t]
                    for z in range(m):
                        m_coeff_into(row, j, z, t, B[i][h, z])
                    lp.add_constraint(row, ">=", 0.0, label=f"8d[i={i},j={j},h={h},t={t}]")

    log.info("synthesis LP: %d variables, %d rows (%d pinned gain channels)",
             n_vars, lp.n_constraints, len(pins))
    out = solve(lp)
    if not out.is_feasible:
        log.info("synthesis LP infeasible: %s", out.violated[:8])
        return SynthesisResult(feasible=False, diagnostics=out.violated, options=opts)

    q = out.x[:n].copy()
    M = []
    for j in range(r):
        Mj = np.empty((m, n))
        for z in range(m):
            for t in range(n):
                Mj[z, t] = pins[(z, t)] * q[t] if (z, t) in pins else out.x[m_col(j, z, t)]
        M.append(Mj)
    K = tuple(Mj / q[None, :] for Mj in M)

    p = q.copy()  # Q 1^n for diagonal Q
    margins = np.empty((r, r))
    for i in range(r):
        for j in range(r):
            F = A[i] + B[i] @ K[j]
            margins[i, j] = float(((F - np.eye(n)) @ p).max())
    certificate = StabilityCertificate(p=p, margins=margins)
    report = verify_closed_loop((A, B), K, opts, p=p)
    return SynthesisResult(feasible=True, Q=q, M=tuple(M), K=K,
                           certificate=certificate, report=report, options=opts)


def verify_closed_loop(system, K: Sequence[np.ndarray],
                       opts: Optional[SynthesisOptions] = None,
                       p: Optional[np.ndarray] = None) -> ClosedLoopReport:
    """Recompute every A_i + B_i K_j from first principles: row-restricted
    nonnegativity, per-pair spectral radii, decrement margins of a supplied
    Lyapunov vector, and an independent LCPLF re-solve on the closed-loop
    vertex set."""
    A, B = _as_discrete_lists(system)
    r = len(A)
    n = A[0].shape[0]
    opts = opts or SynthesisOptions()
    rows_checked = _resolve_rows(opts.positivity_rows, n)
    K = [np.asarray(Kj, dtype=float) for Kj in K]
    if len(K) != r or any(Kj.shape != (B[0].shape[1], n) for Kj in K):
        raise ValueError(f"expected {r} gains of shape ({B[0].shape[1]}, {n})")

    closed = np.empty((r, r, n, n))
    nonneg = np.empty((r, r), dtype=bool)
    radii = np.empty((r, r))
    margins = np.empty((r, r)) if p is not None else None
    for i in range(r):
        for j in range(r):
            F = A[i] + B[i] @ K[j]
            closed[i, j] = F
            nonneg[i, j] = bool((F[list(rows_checked), :] >= -_NONNEG_TOL).all())
            radii[i, j] = spectral_radius(F)
            if margins is not None:
                margins[i, j] = float(((F - np.eye(n)) @ p).max())
    flat = [closed[i, j] for i in range(r) for j in range(r)]
    certificate = lcplf_stability(flat, eps=opts.eps, q_max=opts.q_max, dual=True)
    return ClosedLoopReport(closed_loop=closed, nonneg_ok=nonneg, radii=radii,
                            rows_checked=rows_checked, margins=margins,
                            certificate=certificate)


def default_control_system(params: ModelParams, T: float = DEFAULT_T,
                           domain: Domain = CONTROL_DOMAIN,
                           mode: str = "endpoint") -> AugmentedVertexSystem:
    """The discrete augmented synthesis model used by the CLI defaults:
    endpoint fuzzification over the control domain, integral augmentation,
    Euler discretization at period T."""
    bounds = premise_bounds(params, domain, mode)
    return discretize_euler(augment(build_vertices(bounds)), T)


def synthesis_result_to_dict(result: SynthesisResult) -> dict:
    out = {"feasible": result.feasible}
    if result.options is not None:
        out["options"] = {
            "eps": result.options.eps,
            "q_max": result.options.q_max,
            "enforce_8c": result.options.enforce_8c,
            "positivity_rows": list(result.options.positivity_rows)
            if not isinstance(result.options.positivity_rows, str)
            else result.options.positivity_rows,
            "gain_pins": None if result.options.gain_pins is None
            else ("default" if result.options.gain_pins == "default"
                  else {f"{z},{t}": v for (z, t), v in dict(result.options.gain_pins).items()}),
        }
    if not result.feasible:
        out["diagnostics"] = list(result.diagnostics)
        return out
    out["Q"] = result.Q.tolist()
    out["M"] = [Mj.tolist() for Mj in result.M]
    out["K"] = [Kj.tolist() for Kj in result.K]
    out["p"] = result.certificate.p.tolist()
    out["margins"] = result.certificate.margins.tolist()
    rep = result.report
    out["report"] = {
        "worst_radius": rep.worst_radius,
        "all_schur": rep.all_schur,
        "all_nonneg": rep.all_nonneg,
        "rows_checked": list(rep.rows_checked),
        "radii": rep.radii.tolist(),
        "independent_certificate": rep.certificate.p.tolist()
        if rep.certificate is not None else None,
        "passed": rep.passed,
    }
    return out
