"""Explicit deferred-correction time stepping.

The corrector couples a high-order LobattoIIIA-in-time quadrature of the
spatial residual with a mass-lumped, stabilization-free forward-Euler
predictor. Because the predictor terms at the frozen initial sub-state cancel
between consecutive sweeps and the tensor mass matrix is diagonal, each sweep
reduces to the explicit update

    q^m <- q^0 - Minv * [dt * sum_r theta[m,r] * R(q^r, t^r) + T(q^m - q^0)]

where R is the full weak spatial residual (Galerkin plus stabilization space
part) of the previous iterate and T the SU terms multiplying the sub-step
increment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .basis import OperatorSet1D, gauss_lobatto_rule, integral_block, neumann_closure
from .grid import Field, Grid2D, State
from .problems import Problem, SourceEval
from .schemes import SchemeConfig, has_time_stab, pin_dirichlet, spatial_residual, stab_su_time


class BlowUpError(RuntimeError):
    def __init__(self, step: int, t: float):
        super().__init__(f"non-finite state at step {step}, t = {t:.6g}")
        self.step = step
        self.t = t


def default_cfl(K: int) -> float:
    return 0.1 if K <= 5 else 1.0 / (2.0 * (2.0 * K + 1.0))


def dec_coefficients(M: int) -> tuple[np.ndarray, np.ndarray]:
    """Sub-node fractions beta[m] and weights theta[m, r] on the unit interval.

    theta is the LobattoIIIA tableau of the degree-M Gauss-Lobatto rule:
    theta[m, r] = integral over [0, beta_m] of the r-th cardinal polynomial,
    so theta[0] = 0 and the last row sums to one.
    """
    if M < 1:
        raise ValueError("need at least one sub-interval")
    rule = gauss_lobatto_rule(M)
    return rule.nodes.copy(), integral_block(rule)


@dataclass
class DeCConfig:
    M: int                     # sub-intervals (M+1 Gauss-Lobatto sub-nodes)
    kappa: int                 # correction sweeps
    cfl: float
    beta: np.ndarray = field(repr=False, default=None)
    theta: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.beta is None:
            self.beta, self.theta = dec_coefficients(self.M)

    @classmethod
    def for_degree(cls, K: int, cfl: float | None = None) -> "DeCConfig":
        # smallest M with 2M >= K+1; K+1 sweeps give space-time order K+1
        M = max(1, (K + 2) // 2)
        return cls(M=M, kappa=K + 1, cfl=default_cfl(K) if cfl is None else cfl)


def dec_ode_step(F: Callable, q0, t: float, dt: float, cfg: DeCConfig):
    """One DeC step of q' + F(q, t) = 0 for a plain ODE (same engine core)."""
    beta, theta = cfg.beta, cfg.theta
    M = cfg.M
    q0 = np.asarray(q0, dtype=float)
    stages = [q0.copy() for _ in range(M + 1)]
    for _ in range(cfg.kappa):
        fs = [F(s, t + b * dt) for s, b in zip(stages, beta)]
        for m in range(1, M + 1):
            acc = theta[m, 0] * fs[0]
            for r in range(1, M + 1):
                acc = acc + theta[m, r] * fs[r]
            stages[m] = q0 - dt * acc
    return stages[M]


class Stepper:
    """DeC time integration of one residual scheme on one grid."""

    def __init__(self, problem: Problem, grid: Grid2D,
                 ops_x: OperatorSet1D, ops_y: OperatorSet1D,
                 scheme: SchemeConfig, dec: Optional[DeCConfig] = None):
        if scheme.formulation == "gf" and grid.periodic:
            raise ValueError("global-flux quadrature is not defined on periodic grids")
        if problem.bc == "dirichlet" and problem.exact is None:
            raise ValueError("dirichlet boundary conditions need an exact solution")
        self.problem = problem
        self.grid = grid
        # homogeneous Neumann is realized as a mirror-extension closure of the
        # operator assembly; the one-sided rows are long-time unstable
        if problem.bc == "neumann":
            ops_x = neumann_closure(ops_x)
            ops_y = neumann_closure(ops_y)
        self.ops_x = ops_x
        self.ops_y = ops_y
        self.scheme = scheme
        self.dec = dec or DeCConfig.for_degree(grid.K)
        self.sources = SourceEval(problem, grid)
        self.minv = 1.0 / np.outer(ops_x.mass_diag, ops_y.mass_diag)
        self.dt = self.dec.cfl * grid.h  # unit wave speed

    def _residual(self, state: State, t: float):
        src = self.sources.arrays(state, t)
        return spatial_residual(state, src, self.ops_x, self.ops_y, self.scheme)

    def step(self, state: State, t: float, dt: float | None = None) -> State:
        dt = self.dt if dt is None else dt
        beta, theta = self.dec.beta, self.dec.theta
        M = self.dec.M
        dirichlet = self.problem.bc == "dirichlet"
        su = has_time_stab(self.scheme)

        start = state.copy()
        u0, v0, p0 = start.arrays()
        stages: list[State] = [start] + [start.copy() for _ in range(M)]
        sub_t = [t + b * dt for b in beta]
        res0 = self._residual(start, sub_t[0])

        for _ in range(self.dec.kappa):
            res = [res0] + [self._residual(stages[m], sub_t[m])
                            for m in range(1, M + 1)]
            for m in range(1, M + 1):
                du = theta[m, 0] * res[0][0]
                dv = theta[m, 0] * res[0][1]
                dp = theta[m, 0] * res[0][2]
                for r in range(1, M + 1):
                    du = du + theta[m, r] * res[r][0]
                    dv = dv + theta[m, r] * res[r][1]
                    dp = dp + theta[m, r] * res[r][2]
                du, dv, dp = dt * du, dt * dv, dt * dp
                if su:
                    um, vm, pm = stages[m].arrays()
                    tu, tv, tp = stab_su_time(um - u0, vm - v0, pm - p0,
                                              self.ops_x, self.ops_y, self.scheme)
                    du, dv, dp = du + tu, dv + tv, dp + tp
                new = State(Field(self.grid, u0 - self.minv * du),
                            Field(self.grid, v0 - self.minv * dv),
                            Field(self.grid, p0 - self.minv * dp))
                if dirichlet:
                    pin_dirichlet(new, self.problem.exact, sub_t[m])
                stages[m] = new
        return stages[M]

    def run(self, state: State, T: float, t0: float = 0.0,
            callback: Optional[Callable] = None,
            callback_every: int = 1) -> tuple[State, float]:
        """Fixed-step loop from t0 to t0 + T, shortening the last step to land
        exactly on the final time. The callback receives (step, t, state)."""
        if T <= 0:
            raise ValueError("final time must be positive")
        t = t0
        t_end = t0 + T
        state = state.copy()
        if callback is not None:
            callback(0, t, state)
        step = 0
        while t < t_end - 1e-14 * max(1.0, abs(t_end)):
            dt = min(self.dt, t_end - t)
            state = self.step(state, t, dt)
            step += 1
            t = t0 + step * self.dt if dt == self.dt else t_end
            if not all(np.isfinite(a).all() for a in state.arrays()):
                raise BlowUpError(step, t)
            if callback is not None and (step % callback_every == 0 or t >= t_end):
                callback(step, t, state)
        return state, t


def dec_step(state: State, problem: Problem, grid: Grid2D,
             ops_x: OperatorSet1D, ops_y: OperatorSet1D,
             scheme: SchemeConfig, dec: DeCConfig, t: float, dt: float) -> State:
    return Stepper(problem, grid, ops_x, ops_y, scheme, dec).step(state, t, dt)


def run(problem: Problem, grid: Grid2D, ops_x: OperatorSet1D, ops_y: OperatorSet1D,
        scheme: SchemeConfig, state: State, T: float,
        dec: Optional[DeCConfig] = None, callback: Optional[Callable] = None,
        callback_every: int = 1) -> tuple[State, float]:
    stepper = Stepper(problem, grid, ops_x, ops_y, scheme, dec)
    return stepper.run(state, T, callback=callback, callback_every=callback_every)
