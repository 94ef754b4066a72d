"""Well-prepared discrete initial data.

Two projections of an exact steady state onto the discrete kernel of the
global-flux operators: a line-by-line march driven by the LobattoIIIA
integration tables, and an equality-constrained least-squares fit of the
velocities solved through its KKT system. Both rebuild the pressure from a
corner-anchored blend of the two source-integral paths, with the sources
evaluated on the *discrete* velocities, which keeps constant-coefficient
problems in the kernel to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import OperatorSet1D
from .gf import compute_gf_vars, gf_divergence
from .grid import Field, Grid2D, State, max_norm
from .problems import Problem, SourceEval, exact_state
from .schemes import SchemeConfig, spatial_residual


@dataclass
class ProjectionReport:
    method: str
    kernel_residual: float      # recomputed post hoc, interior max-norm
    deviation_l2: float         # distance from the nodal exact data
    lam: float
    rank_deficiency: int = 0


def _require_steady(problem: Problem) -> None:
    if not problem.steady or problem.exact is None:
        raise ValueError(
            f"projection needs a steady problem with an exact solution, got {problem.name!r}")


def _pressure_from_sources(problem: Problem, grid: Grid2D,
                           ops_x: OperatorSet1D, ops_y: OperatorSet1D,
                           state: State, lam: float) -> np.ndarray:
    """Corner-anchored lambda-blend of the two pressure integration paths.

    Source arrays are taken from the discrete velocities so that the result
    sits in the kernel of the velocity operators whenever the Coriolis
    coefficient is constant.
    """
    src = SourceEval(problem, grid).arrays(state, 0.0)
    B = ops_x.I.apply_x(src.su)          # int_x0^x S_u(., y)
    A = ops_y.I.apply_y(src.sv)          # int_y0^y S_v(x, .)
    p00 = float(np.asarray(problem.exact(np.array(grid.box[0]),
                                         np.array(grid.box[2]), 0.0)[2]))
    return p00 + lam * (A[0:1, :] + B) + (1.0 - lam) * (B[:, 0:1] + A)


def line_by_line_projection(problem: Problem, grid: Grid2D,
                            ops_x: OperatorSet1D, ops_y: OperatorSet1D,
                            lam: float = 0.5) -> tuple[State, ProjectionReport]:
    """March u along x and v along y from exact boundary traces.

    The march integrates the nodally sampled steady slopes -(dv_e/dy - S_p)
    and -(du_e/dx - S_p); since the sampled constraint holds exactly at the
    nodes, the resulting velocities satisfy the discrete divergence balance
    identically.
    """
    _require_steady(problem)
    if problem.du_dx is None or problem.dv_dy is None:
        raise ValueError(f"problem {problem.name!r} lacks analytic steady derivatives")
    X, Y = grid.meshgrid()
    sp = problem.s_p(X, Y, 0.0) if problem.s_p else np.zeros(grid.shape)
    slope_u = -(problem.dv_dy(X, Y) - sp)
    slope_v = -(problem.du_dx(X, Y) - sp)

    ue, ve, _ = problem.exact(X, Y, 0.0)
    u = ue[0:1, :] + ops_x.I.apply_x(slope_u)
    v = ve[:, 0:1] + ops_y.I.apply_y(slope_v)

    state = State(Field(grid, u), Field(grid, v), Field(grid, np.zeros(grid.shape)))
    state.p.values[:] = _pressure_from_sources(problem, grid, ops_x, ops_y, state, lam)
    report = _report("line_by_line", problem, grid, ops_x, ops_y, state, lam)
    return state, report


def optimization_projection(problem: Problem, grid: Grid2D,
                            ops_x: OperatorSet1D, ops_y: OperatorSet1D,
                            lam: float = 0.5) -> tuple[State, ProjectionReport]:
    """Minimal mass-weighted correction of the interpolated velocities onto
    the discrete divergence constraint, then pressure rebuilt from sources.

    The equality-constrained quadratic is solved exactly: with W the tensor
    mass weights and A the constraint, q = q0 + W^-1 A^T mu where
    (A W^-1 A^T) mu = b - A q0 restricted to an independent row subset found
    by rank-revealing QR.
    """
    _require_steady(problem)
    st0 = exact_state(problem, grid)
    X, Y = grid.meshgrid()
    sp = problem.s_p(X, Y, 0.0) if problem.s_p else np.zeros(grid.shape)

    nx, ny = grid.shape
    n = nx * ny
    Dx = ops_x.D.toarray()
    Dy = ops_y.D.toarray()
    Ix = ops_x.I.toarray()
    Iy = ops_y.I.toarray()
    # constraint rows: (Dx (x) Dy)[(1 (x) Iy) u + (Ix (x) 1) v] = (Dx Ix (x) Dy Iy) sp
    Au = np.kron(Dx, Dy @ Iy)
    Av = np.kron(Dx @ Ix, Dy)
    b = (Dx @ Ix @ sp @ (Dy @ Iy).T).ravel()

    winv_u = 1.0 / np.outer(ops_x.mass_diag, ops_y.mass_diag).ravel()
    q0 = np.concatenate([st0.u.values.ravel(), st0.v.values.ravel()])
    r = b - Au @ q0[:n] - Av @ q0[n:]

    # Gram matrix of the constraint in the W^-1 metric
    G = (Au * winv_u) @ Au.T + (Av * winv_u) @ Av.T
    # independent rows via pivoted QR of the full constraint matrix
    Afull = np.hstack([Au, Av])
    _, R, piv = scipy.linalg.qr(Afull.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > diag[0] * max(Afull.shape) * np.finfo(float).eps)) if diag.size else 0
    keep = piv[:rank]
    mu = np.zeros(Afull.shape[0])
    mu[keep] = scipy.linalg.solve(G[np.ix_(keep, keep)], r[keep], assume_a="sym")

    du = winv_u * (Au.T @ mu)
    dv = winv_u * (Av.T @ mu)
    u = (q0[:n] + du).reshape(nx, ny)
    v = (q0[n:] + dv).reshape(nx, ny)

    state = State(Field(grid, u), Field(grid, v), Field(grid, np.zeros(grid.shape)))
    state.p.values[:] = _pressure_from_sources(problem, grid, ops_x, ops_y, state, lam)
    report = _report("optimize", problem, grid, ops_x, ops_y, state, lam,
                     rank_deficiency=Afull.shape[0] - rank)
    return state, report


def _report(method: str, problem: Problem, grid: Grid2D,
            ops_x: OperatorSet1D, ops_y: OperatorSet1D, state: State,
            lam: float, rank_deficiency: int = 0) -> ProjectionReport:
    src = SourceEval(problem, grid).arrays(state, 0.0)
    gfv = compute_gf_vars(state, src, ops_x, ops_y)
    div = gf_divergence(gfv, ops_x, ops_y)
    kres = max_norm(div, interior_only=True)
    st0 = exact_state(problem, grid)
    w = np.outer(ops_x.mass_diag, ops_y.mass_diag)
    dev = np.sqrt(sum(np.sum(w * (a - b) ** 2)
                      for a, b in zip(state.arrays(), st0.arrays())))
    return ProjectionReport(method=method, kernel_residual=float(kres),
                            deviation_l2=float(dev), lam=lam,
                            rank_deficiency=rank_deficiency)


def projection_residual(problem: Problem, grid: Grid2D,
                        ops_x: OperatorSet1D, ops_y: OperatorSet1D,
                        state: State, stabilization: str = "su",
                        alpha: float | None = None) -> float:
    """Interior max-norm of the full GF spatial residual on a candidate state."""
    from .schemes import default_alpha
    cfg = SchemeConfig("gf", stabilization,
                       default_alpha(stabilization, grid.K) if alpha is None else alpha,
                       grid.h)
    src = SourceEval(problem, grid).arrays(state, 0.0)
    ru, rv, rp = spatial_residual(state, src, ops_x, ops_y, cfg)
    return max(max_norm(r, interior_only=True) for r in (ru, rv, rp))
