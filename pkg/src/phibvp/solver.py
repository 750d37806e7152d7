"""Boundary value solver: damped fixed-point iteration plus an independent
shooting oracle.

``solve`` iterates the class-appropriate integral map with adaptive
damping and (for the Dirichlet and classic classes) a homotopy parameter
continued from 0 to 1.  Where plain iteration provably cannot converge
(the classic map has expanding directions whenever df/du' > 0 along the
solution), a Newton-Krylov pass on the fixed-point residual takes over;
this is reported in ``SolveReport.method`` and never happens silently.

``shooting_oracle`` solves the same problem by a genuinely different
discretization: RK4 time stepping of the first-order system in
(u, phi(u')) with scalar or two-parameter root finding on the initial
data.  Tests compare the two routes; they share no discretization code.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .expr import EvalDomainError, Expr, eval_many
from .function_space import (
    Grid,
    GridFunction,
    cumulative_integral_from_0,
    l1_norm,
    norms,
    sup_norm,
    zero_function,
)
from .homeomorphism import EPS_DOM, Homeomorphism, Kind
from .operators import (
    AdmissibilityViolation,
    classic_threepoint_map,
    dirichlet_map,
    nemytskii,
    singular_threepoint_map,
)

log = logging.getLogger(__name__)

BC_RESIDUAL_TOL = 1e-8
_LAMBDA_STEP_MIN = 1e-3
_THETA_MIN = 1e-3
_DIVERGENCE_CAP = 1e8


class ProblemClass(enum.Enum):
    DIRICHLET_BOUNDED = "dirichlet"
    THREEPOINT_SINGULAR = "threepoint_singular"
    THREEPOINT_CLASSIC = "threepoint_classic"


_REQUIRED_KIND = {
    ProblemClass.DIRICHLET_BOUNDED: Kind.BOUNDED,
    ProblemClass.THREEPOINT_SINGULAR: Kind.SINGULAR,
    ProblemClass.THREEPOINT_CLASSIC: Kind.CLASSIC,
}


@dataclass(frozen=True)
class ProblemSpec:
    """A boundary value problem instance plus solver knobs.

    method: "auto" runs damped fixed-point iteration and falls back to
    Newton-Krylov on the residual if a homotopy stage stalls; "picard"
    disables the fallback and reports non-convergence instead.
    """

    problem: ProblemClass
    phi: Homeomorphism
    f: Expr
    T: float
    grid_n: int = 1001
    tol_fp: float = 1e-10
    tol_res: float = 1e-4
    max_iter: int = 10_000
    lambda_step: float = 0.1
    theta0: float = 1.0
    method: str = "auto"

    def __post_init__(self) -> None:
        need = _REQUIRED_KIND[self.problem]
        if self.phi.kind is not need:
            raise ValueError(
                f"{self.problem.value} needs a {need.value} homeomorphism, "
                f"got {self.phi.name} ({self.phi.kind.value})")
        if not (self.T > 0 and np.isfinite(self.T)):
            raise ValueError(f"T must be positive, got {self.T}")
        if self.grid_n < 2:
            raise ValueError("grid_n must be at least 2")
        if not 0.0 < self.lambda_step <= 1.0:
            raise ValueError("lambda_step must lie in (0, 1]")
        if self.method not in ("auto", "picard"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class SolveReport:
    """Solve outcome and diagnostics.

    fp_residual is the integral norm of u - M(u) at the final iterate
    (undamped map gap, not the damped step size); ode_residual the sup of
    the centered-difference defect over interior nodes; omega_margin the
    slack of the bounded-class admissibility bound, None elsewhere.
    """

    solution: GridFunction
    converged: bool
    fp_residual: float
    ode_residual: float
    bc_residual: float
    omega_margin: float | None
    lambda_path: tuple[tuple[float, int], ...]
    method: str
    iterations: int

    def report_text(self) -> str:
        lines = [
            f"converged={str(self.converged).lower()}",
            f"method={self.method}",
            f"fp_residual={self.fp_residual!r}",
            f"ode_residual={self.ode_residual!r}",
            f"bc_residual={self.bc_residual!r}",
            f"omega_margin={'n/a' if self.omega_margin is None else repr(self.omega_margin)}",
            f"iterations={self.iterations}",
            "lambda_path=" + ",".join(f"{lam!r}:{it}" for lam, it in self.lambda_path),
        ]
        return "\n".join(lines) + "\n"


class NonConvergence(Exception):
    """Iteration exhausted its budget.  Existence is not disproved; the
    attached report carries the best iterate and its diagnostics."""

    def __init__(self, best_residual: float, iterations: int, report: SolveReport):
        self.best_residual = best_residual
        self.iterations = iterations
        self.report = report
        super().__init__(
            f"no convergence after {iterations} iterations "
            f"(best residual {best_residual!r})")


class OracleFailure(Exception):
    """The shooting oracle could not bracket or polish a root."""


def apply_fixed_point_map(spec: ProblemSpec, w: GridFunction,
                          lam: float = 1.0) -> GridFunction:
    if spec.problem is ProblemClass.DIRICHLET_BOUNDED:
        return dirichlet_map(spec.phi, spec.f, w, lam)
    if spec.problem is ProblemClass.THREEPOINT_SINGULAR:
        return singular_threepoint_map(spec.phi, spec.f, w)
    return classic_threepoint_map(spec.phi, spec.f, w, lam)


def _fp_distance(aw: GridFunction, bw: GridFunction) -> float:
    """Integral norm of the u-component gap; the convergence metric."""
    return l1_norm(aw.grid, np.abs(aw.u - bw.u))


def _fp_scale(w: GridFunction) -> float:
    return 1.0 + norms(w).l1


def _blend(aw: GridFunction, bw: GridFunction, theta: float) -> GridFunction:
    return GridFunction(aw.grid,
                        (1.0 - theta) * aw.u + theta * bw.u,
                        (1.0 - theta) * aw.du + theta * bw.du)


@dataclass
class _StageResult:
    u: GridFunction
    iterations: int
    converged: bool
    best_residual: float


def _picard_stage(spec: ProblemSpec, lam: float, u: GridFunction,
                  first_stage: bool) -> _StageResult:
    theta = spec.theta0
    prev_r = np.inf
    best_r = np.inf
    best_u = u
    for k in range(1, spec.max_iter + 1):
        try:
            w = apply_fixed_point_map(spec, u, lam)
        except EvalDomainError:
            if first_stage and k == 1:
                raise  # a fault at the start point is a problem-definition fault
            return _StageResult(best_u, k, False, best_r)
        r = _fp_distance(u, w)
        if r <= spec.tol_fp * _fp_scale(u):
            return _StageResult(u, k, True, r)
        if r < best_r:
            best_r = r
            best_u = u
        if not np.isfinite(r) or r > _DIVERGENCE_CAP:
            return _StageResult(best_u, k, False, best_r)
        theta = max(theta / 2.0, _THETA_MIN) if r > prev_r \
            else min(theta * 1.2, 1.0)
        prev_r = r
        u = _blend(u, w, theta)
    return _StageResult(best_u, spec.max_iter, False, best_r)


def _newton_stage(spec: ProblemSpec, lam: float, u: GridFunction) -> _StageResult:
    """Newton-Krylov on z - M(z) in the stacked (u, du) representation."""
    grid = u.grid
    n = grid.n
    evals = 0

    def residual(z: np.ndarray) -> np.ndarray:
        nonlocal evals
        evals += 1
        w = GridFunction(grid, z[:n], z[n:])
        mw = apply_fixed_point_map(spec, w, lam)
        return z - np.concatenate([mw.u, mw.du])

    z0 = np.concatenate([u.u, u.du])
    f_tol = 0.25 * spec.tol_fp / max(1.0, spec.T)
    try:
        z = scipy.optimize.newton_krylov(residual, z0, f_tol=f_tol, maxiter=100)
    except (scipy.optimize.NoConvergence, ValueError, AdmissibilityViolation):
        # EvalDomainError is a ValueError; any of these means the pass failed
        return _StageResult(u, evals, False, np.inf)
    out = GridFunction(grid, z[:n], z[n:])
    w = apply_fixed_point_map(spec, out, lam)
    r = _fp_distance(out, w)
    ok = r <= spec.tol_fp * _fp_scale(out)
    return _StageResult(out, evals, ok, r)


def ode_residual_samples(phi: Homeomorphism, f: Expr, w: GridFunction) -> np.ndarray:
    """Per-node defect of (phi(w'))' = f(t, w, w').

    Centered differences of phi(w') at interior nodes, one-sided at the
    two endpoints.
    """
    grid = w.grid
    pw = np.asarray(phi.forward(w.du), dtype=float)
    fv = nemytskii(f, w)
    out = np.empty(grid.n)
    h = grid.h
    out[1:-1] = (pw[2:] - pw[:-2]) / (2.0 * h) - fv[1:-1]
    out[0] = (pw[1] - pw[0]) / h - fv[0]
    out[-1] = (pw[-1] - pw[-2]) / h - fv[-1]
    return out


def ode_residual(phi: Homeomorphism, f: Expr, w: GridFunction) -> float:
    """Sup over interior nodes of the centered-difference defect."""
    return float(np.max(np.abs(ode_residual_samples(phi, f, w)[1:-1])))


def bc_residual(problem: ProblemClass, w: GridFunction) -> float:
    u0 = float(w.u[0])
    uT = float(w.u[-1])
    du0 = float(w.du[0])
    duT = float(w.du[-1])
    if problem is ProblemClass.DIRICHLET_BOUNDED:
        return max(abs(u0), abs(uT))
    if problem is ProblemClass.THREEPOINT_SINGULAR:
        return max(abs(uT - u0), abs(duT - u0))
    return max(abs(uT - du0), abs(duT - du0))


def omega_margin(spec: ProblemSpec, w: GridFunction) -> float | None:
    """a/2 minus the sup-norm of the Dirichlet map's inner integral at
    lam = 1; None for the other classes."""
    if spec.problem is not ProblemClass.DIRICHLET_BOUNDED:
        return None
    g = cumulative_integral_from_0(w.grid, nemytskii(spec.f, w))
    return spec.phi.a / 2.0 - sup_norm(g)


def _build_report(spec: ProblemSpec, u: GridFunction,
                  path: list[tuple[float, int]], method: str) -> SolveReport:
    try:
        w = apply_fixed_point_map(spec, u, 1.0)
        fp_res = _fp_distance(u, w)
    except (AdmissibilityViolation, EvalDomainError):
        fp_res = np.inf
    try:
        margin = omega_margin(spec, u)
    except EvalDomainError:
        margin = None
    try:
        ode_res = ode_residual(spec.phi, spec.f, u)
    except EvalDomainError:
        ode_res = np.inf
    converged = (fp_res <= spec.tol_fp * _fp_scale(u)
                 and bc_residual(spec.problem, u) <= BC_RESIDUAL_TOL)
    return SolveReport(
        solution=u,
        converged=converged,
        fp_residual=fp_res,
        ode_residual=ode_res,
        bc_residual=bc_residual(spec.problem, u),
        omega_margin=margin,
        lambda_path=tuple(path),
        method=method,
        iterations=sum(it for _, it in path),
    )


def solve(spec: ProblemSpec) -> SolveReport:
    """Iterate the fixed-point map to tolerance and return diagnostics.

    Raises NonConvergence (with the diagnostic report attached) when the
    iteration budget runs out, and AdmissibilityViolation when even the
    smallest homotopy step leaves the Dirichlet map's admissible set.
    """
    grid = Grid(spec.T, spec.grid_n)
    u = zero_function(grid)
    path: list[tuple[float, int]] = []
    method = "picard"
    lam_step = spec.lambda_step
    lam_done = 0.0
    first = True
    single_pass = spec.problem is ProblemClass.THREEPOINT_SINGULAR
    while True:
        lam = 1.0 if single_pass else min(1.0, lam_done + lam_step)
        try:
            st = _picard_stage(spec, lam, u, first)
        except AdmissibilityViolation:
            if not single_pass and lam_step / 2.0 >= _LAMBDA_STEP_MIN:
                lam_step /= 2.0
                continue
            raise
        first = False
        if not st.converged and spec.method == "auto":
            log.warning("fixed-point iteration stalled at lambda=%g "
                        "(best residual %g); switching to Newton-Krylov",
                        lam, st.best_residual)
            nst = _newton_stage(spec, lam, st.u)
            st = _StageResult(nst.u, st.iterations + nst.iterations,
                              nst.converged, min(st.best_residual, nst.best_residual))
            method = "picard+newton"
        path.append((lam, st.iterations))
        u = st.u
        if not st.converged:
            report = _build_report(spec, u, path, method)
            raise NonConvergence(st.best_residual, report.iterations, report)
        lam_done = lam
        if single_pass or lam_done >= 1.0:
            break

    report = _build_report(spec, u, path, method)
    if not report.converged:
        # the per-stage criterion passed but the final diagnostics did not
        raise NonConvergence(report.fp_residual, report.iterations, report)
    return report


# ------------------------------------------------------------------ shooting

_SHOOT_SCAN = 41
_FD_STEP = 1e-6
_NEWTON_STEPS = 60


def _rk4_batch(spec: ProblemSpec, grid: Grid, u0: np.ndarray,
               w0: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integrate u' = phi^{-1}(w), w' = f(t, u, phi^{-1}(w)) for a batch of
    initial states.  Returns (U, W, invalid): trajectories of shape
    (n, m) and a mask of runs whose w left phi's range (bounded phi only);
    invalid runs are nan-filled.
    """
    phi = spec.phi
    f = spec.f
    n = grid.n
    h = grid.h
    bounded = phi.kind is Kind.BOUNDED
    cap = (phi.a - EPS_DOM) if bounded else np.inf

    u = np.array(u0, dtype=float)
    w = np.array(w0, dtype=float)
    m = u.shape[0]
    U = np.empty((n, m))
    W = np.empty((n, m))
    U[0] = u
    W[0] = w
    invalid = np.zeros(m, dtype=bool)

    def rhs(t: float, uu: np.ndarray, ww: np.ndarray):
        nonlocal invalid
        if bounded:
            invalid |= np.abs(ww) > cap
            ww = np.clip(ww, -cap, cap)
        v = np.asarray(phi.inverse(ww), dtype=float)
        dw = eval_many(f, t, uu, v, lenient=True)
        return v, dw

    for i in range(n - 1):
        t = grid.nodes[i]
        k1u, k1w = rhs(t, u, w)
        k2u, k2w = rhs(t + 0.5 * h, u + 0.5 * h * k1u, w + 0.5 * h * k1w)
        k3u, k3w = rhs(t + 0.5 * h, u + 0.5 * h * k2u, w + 0.5 * h * k2w)
        k4u, k4w = rhs(t + h, u + h * k3u, w + h * k3w)
        u = u + (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        w = w + (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        U[i + 1] = u
        W[i + 1] = w

    invalid |= ~np.isfinite(U[-1]) | ~np.isfinite(W[-1])
    U[:, invalid] = np.nan
    W[:, invalid] = np.nan
    return U, W, invalid


def _trajectory_function(spec: ProblemSpec, grid: Grid, u0: float,
                         w0: float) -> GridFunction:
    U, W, bad = _rk4_batch(spec, grid, np.array([u0]), np.array([w0]))
    if bad[0]:
        raise OracleFailure("final shooting trajectory left the admissible range")
    du = np.asarray(spec.phi.inverse(W[:, 0]), dtype=float)
    return GridFunction(grid, U[:, 0], du)


def _shoot_dirichlet(spec: ProblemSpec, grid: Grid) -> GridFunction:
    a = spec.phi.a
    margin = 1e-6 * a
    cands = np.linspace(-a + margin, a - margin, _SHOOT_SCAN)
    U, _, bad = _rk4_batch(spec, grid, np.zeros(_SHOOT_SCAN), cands)
    end = U[-1]
    bracket = None
    for i in range(_SHOOT_SCAN - 1):
        if bad[i] or bad[i + 1]:
            continue
        if end[i] == 0.0:
            return _trajectory_function(spec, grid, 0.0, float(cands[i]))
        if end[i] * end[i + 1] <= 0.0:
            bracket = (float(cands[i]), float(cands[i + 1]))
            break
    if bracket is None:
        raise OracleFailure("no sign change of u(T) over the shooting scan")

    def end_value(w0: float) -> float:
        Us, _, b = _rk4_batch(spec, grid, np.zeros(1), np.array([w0]))
        if b[0]:
            raise OracleFailure(f"trajectory at w0={w0!r} left the admissible range")
        return float(Us[-1, 0])

    root = scipy.optimize.brentq(end_value, bracket[0], bracket[1],
                                 xtol=1e-13, rtol=4 * np.finfo(float).eps,
                                 maxiter=200)
    return _trajectory_function(spec, grid, 0.0, float(root))


def _shoot_two_point_newton(spec: ProblemSpec, grid: Grid,
                            starts: list[tuple[float, float]]) -> GridFunction:
    """Damped Newton (FD Jacobian, step 1e-6) on the two initial values.

    Residual for the classic class: (u'(T) - u'(0), u(T) - u'(0));
    for the singular class: (u(T) - u(0), u'(T) - u(0)).
    """
    phi = spec.phi
    classic = spec.problem is ProblemClass.THREEPOINT_CLASSIC

    def residuals(points: np.ndarray) -> np.ndarray:
        U, W, bad = _rk4_batch(spec, grid, points[:, 0], points[:, 1])
        with np.errstate(all="ignore"):
            v0 = np.asarray(phi.inverse(W[0]), dtype=float)
            vT = np.asarray(phi.inverse(W[-1]), dtype=float)
        if classic:
            out = np.stack([vT - v0, U[-1] - v0], axis=1)
        else:
            out = np.stack([U[-1] - U[0], vT - U[0]], axis=1)
        out[bad] = np.nan
        return out

    for start in starts:
        p = np.array(start, dtype=float)
        ok = False
        for _ in range(_NEWTON_STEPS):
            batch = np.array([p, p + [_FD_STEP, 0.0], p + [0.0, _FD_STEP]])
            R = residuals(batch)
            if not np.all(np.isfinite(R[0])):
                break
            r0 = R[0]
            nr0 = float(np.max(np.abs(r0)))
            if nr0 <= 1e-11 * (1.0 + float(np.max(np.abs(p)))):
                ok = True
                break
            J = np.stack([(R[1] - r0) / _FD_STEP, (R[2] - r0) / _FD_STEP], axis=1)
            try:
                step = np.linalg.solve(J, -r0)
            except np.linalg.LinAlgError:
                break
            alpha = 1.0
            improved = False
            while alpha >= 2.0 ** -20:
                trial = p + alpha * step
                rt = residuals(trial[None, :])[0]
                if np.all(np.isfinite(rt)) and np.max(np.abs(rt)) < nr0:
                    p = trial
                    improved = True
                    break
                alpha /= 2.0
            if not improved:
                break
        if ok:
            return _trajectory_function(spec, grid, float(p[0]), float(p[1]))
    raise OracleFailure("no Newton start converged in the shooting oracle")


def shooting_oracle(spec: ProblemSpec) -> GridFunction:
    """Solve the problem by RK4 shooting on the same grid.

    Completely independent of the fixed-point route: different
    discretization family, different unknowns.  Intended for
    cross-validation, not as the primary solver.
    """
    grid = Grid(spec.T, spec.grid_n)
    if spec.problem is ProblemClass.DIRICHLET_BOUNDED:
        return _shoot_dirichlet(spec, grid)

    if spec.problem is ProblemClass.THREEPOINT_CLASSIC:
        slopes = (0.5, -0.5, 0.0, 1.0, -1.0, 2.0, -2.0, 0.25, -0.25)
        starts = [(s * (1.0 - spec.T), float(spec.phi.forward(s))) for s in slopes]
    else:
        a = spec.phi.a
        levels = (0.0, 0.3, -0.3, 0.6, -0.6)
        starts = [(c * a, float(spec.phi.forward(c * a * 0.9))) for c in levels]
    return _shoot_two_point_newton(spec, grid, starts)
