"""Shared test utilities: dense Kronecker oracles, random kernel states, and
interpolant evaluation for quadrature cross-checks."""

import numpy as np

from gfsem.basis import OperatorSet1D, lagrange_deriv, lagrange_eval
from gfsem.gf import SourceArrays
from gfsem.grid import Field, Grid2D, State


def kron_apply(ax: np.ndarray, ay: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Dense (ax (x) ay) vec(q) reference, reshaped back to grid layout."""
    n = values.shape
    return (np.kron(ax, ay) @ values.ravel()).reshape(ax.shape[0], ay.shape[0])


def smooth_random(grid: Grid2D, rng, terms: int = 3) -> np.ndarray:
    X, Y = grid.meshgrid()
    out = np.zeros(grid.shape)
    for _ in range(terms):
        a, b = rng.uniform(0.5, 3.0, 2)
        c, d = rng.uniform(-1.0, 1.0, 2)
        out += c * np.sin(a * np.pi * X + d) * np.cos(b * np.pi * Y - d)
    return out


def smooth_profile(coords: np.ndarray, rng) -> np.ndarray:
    a = rng.uniform(0.5, 2.5)
    c1, c2, c3 = rng.uniform(-1.0, 1.0, 3)
    return c1 * np.sin(a * np.pi * coords) + c2 * coords + c3


def prefix_invert(ops: OperatorSet1D, target: np.ndarray, first: np.ndarray) -> np.ndarray:
    """Solve (prefix I along axis 0) s = target for s, given s on the first node.

    target must vanish on the starting line; per cell the LobattoIIIA block
    rows 1..K are inverted with the interface value carried over.
    """
    K, N = ops.K, ops.N
    iloc = ops.i_loc
    body = np.linalg.inv(iloc[1:, 1:])
    s = np.zeros_like(target)
    s[0] = first
    for i in range(N):
        sl = slice(i * K, (i + 1) * K + 1)
        t_loc = target[sl] - target[i * K]
        s[i * K + 1:(i + 1) * K + 1] = body @ (t_loc[1:] - np.outer(iloc[1:, 0], s[i * K]))
    return s


def random_kernel_data(grid: Grid2D, ox: OperatorSet1D, oy: OperatorSet1D,
                       rng) -> tuple[State, SourceArrays]:
    """State and source arrays exactly in the discrete global-flux kernel.

    Construction mirrors the discrete steady-state characterization: the
    velocities are marched from random boundary traces with slopes whose sum
    matches S_p nodally, the pressure is a random y-profile plus the
    x-integral of a random S_u, and S_v is recovered by inverting the
    y-prefix so that p minus its y-integral is a pure function of x.
    """
    a = smooth_random(grid, rng)
    sp = smooth_random(grid, rng)
    slope_u, slope_v = a, sp - a
    u = smooth_profile(grid.yline, rng)[None, :] + ox.I.apply_x(slope_u)
    v = smooth_profile(grid.xline, rng)[:, None] + oy.I.apply_y(slope_v)

    su = smooth_random(grid, rng)
    p = smooth_profile(grid.yline, rng)[None, :] + ox.I.apply_x(su)
    target = p - p[:, 0:1]
    sv = prefix_invert(oy, target.T, smooth_profile(grid.xline, rng)).T

    state = State(Field(grid, u), Field(grid, v), Field(grid, p))
    return state, SourceArrays(su=su, sv=sv, sp=sp)


def eval_cell(field_vals: np.ndarray, ox: OperatorSet1D, oy: OperatorSet1D,
              cell: tuple[int, int], xs: np.ndarray, ys: np.ndarray,
              dx: int = 0, dy: int = 0) -> np.ndarray:
    """Evaluate the tensor interpolant (or a derivative) of one cell at the
    physical points xs (x) ys."""
    i, j = cell
    K = ox.K
    loc = field_vals[i * K:(i + 1) * K + 1, j * K:(j + 1) * K + 1]
    tx = (xs - ox.nodes[i * K]) / ox.delta
    ty = (ys - oy.nodes[j * K]) / oy.delta
    fx = lagrange_deriv if dx else lagrange_eval
    fy = lagrange_deriv if dy else lagrange_eval
    bx = np.array([fx(ox.rule, p, tx) for p in range(K + 1)]).T  # (npts, K+1)
    by = np.array([fy(oy.rule, q, ty) for q in range(K + 1)]).T
    vals = bx @ loc @ by.T
    if dx:
        vals /= ox.delta
    if dy:
        vals /= oy.delta
    return vals


def residual_max(triple, interior=True) -> float:
    vals = []
    for r in triple:
        vals.append(np.abs(r[1:-1, 1:-1] if interior else r).max())
    return max(vals)
