"""Random-walk Green's function and the s-condition integral beta.

beta_kspace is the plain Riemann sum over the dual grid with the k=0 mode
excluded; beta_xspace evaluates the same quantity through torus convolutions
of the zero-mode-removed Green's function, so the two must agree to machine
precision (Parseval).  Convergence to the infinite-lattice integral is probed
by refining the grid M -> 2M -> 4M.
"""

import math
from dataclasses import dataclass

import numpy as np

from .steps import StepDistribution
from .torus import TorusField, TorusGrid, convolve, field_at_zero, real_dft

# A refinement sequence is flagged divergent when successive increments
# fail to shrink.  Convergent cases contract geometrically, but barely
# finite ones only at ratio ~ 1/2 per doubling, so the cut sits at 1
# (increments must strictly decrease).
CAUCHY_RATIO = 1.0


def folded_dhat(dist: StepDistribution, grid: TorusGrid) -> np.ndarray:
    """Transform of the torus-folded step weights (real array)."""
    return real_dft(dist.fold(grid))


def greens_c(dist: StepDistribution, grid: TorusGrid, z: float) -> TorusField:
    """C_z-hat(k) = 1/(1 - z Dhat_M(k)); requires 0 <= z < 1."""
    if not 0.0 <= z < 1.0:
        raise ValueError("z must lie in [0, 1)")
    dhat = folded_dhat(dist, grid)
    return TorusField(grid, 1.0 / (1.0 - z * dhat), "k")


def greens_c_critical(dist: StepDistribution, grid: TorusGrid) -> TorusField:
    """z = 1 Green's function with the k = 0 mode removed."""
    dhat = folded_dhat(dist, grid)
    vals = np.zeros_like(dhat)
    mask = np.ones_like(dhat, dtype=bool)
    mask[(0,) * grid.d] = False
    vals[mask] = 1.0 / (1.0 - dhat[mask])
    return TorusField(grid, vals, "k")


def return_probability(dist: StepDistribution, grid: TorusGrid, n: int) -> float:
    """D^{*n}(0) by repeated torus convolution."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return 1.0
    dm = dist.fold(grid)
    acc = dm
    for _ in range(n - 1):
        acc = convolve(acc, dm)
    return field_at_zero(acc)


def return_probability_kspace(dist: StepDistribution, grid: TorusGrid,
                              n: int) -> float:
    dhat = folded_dhat(dist, grid)
    return float(np.mean(dhat ** n))


@dataclass
class BetaReport:
    s: int
    M: int
    beta_kspace: float
    beta_xspace: float
    sup_d: float
    zero_mode_policy: str
    refinement: list  # [(M, beta_kspace)]
    divergent: bool
    analytic_threshold: float
    analytic_finite: bool
    tail_bound: float = 0.0


def _beta_kspace_on_grid(dist: StepDistribution, grid: TorusGrid, s: int) -> float:
    dhat = folded_dhat(dist, grid)
    mask = np.ones_like(dhat, dtype=bool)
    mask[(0,) * grid.d] = False
    v = dhat[mask]
    return float(np.sum(v ** 2 / (1.0 - v) ** s) / grid.n_sites)


def _beta_xspace_on_grid(dist: StepDistribution, grid: TorusGrid, s: int) -> float:
    from .torus import idft
    dm = dist.fold(grid)
    c1 = idft(greens_c_critical(dist, grid))
    c1 = TorusField(grid, c1.values.real, "x")
    u = convolve(dm, c1)  # D * C_1
    if s == 2:
        # (D*C1*D*C1)(0) = sum_x u(x) u(-x)
        rev = np.roll(u.values[tuple(slice(None, None, -1)
                                     for _ in range(grid.d))],
                      1, axis=tuple(range(grid.d)))
        return float(np.sum(u.values * rev))
    uu = convolve(u, u)
    return field_at_zero(convolve(uu, c1))


def beta(dist: StepDistribution, grid: TorusGrid, s: int,
         refinements: int = 3) -> BetaReport:
    if s not in (2, 3):
        raise ValueError("s must be 2 or 3")
    aw2 = dist.alpha_wedge_2
    threshold = aw2 * s
    seq = []
    M = grid.M
    for i in range(refinements):
        g = TorusGrid(grid.d, M * 2 ** i)
        seq.append((g.M, _beta_kspace_on_grid(dist, g, s)))
    bk = _beta_kspace_on_grid(dist, grid, s)
    bx = _beta_xspace_on_grid(dist, grid, s)
    divergent = False
    if len(seq) >= 3:
        d1 = abs(seq[1][1] - seq[0][1])
        d2 = abs(seq[2][1] - seq[1][1])
        divergent = d2 > CAUCHY_RATIO * d1
    return BetaReport(
        s=s, M=grid.M, beta_kspace=bk, beta_xspace=bx, sup_d=dist.sup_d,
        zero_mode_policy="k=0 dual point excluded; x-space C_1 built from "
                         "the transform with its zero mode removed",
        refinement=seq, divergent=divergent,
        analytic_threshold=threshold,
        analytic_finite=dist.d > threshold,
        tail_bound=dist.tail_bound)


# -- separable fast path for product-form transforms ---------------------

def _combine_dp(vals: np.ndarray, d: int, op: str, decimals: int = 10):
    """Distribution of d-fold sums/products of one grid axis' values.

    Returns (keys, counts) with counts summing to M^d.  Valid because the
    nn and uniform transforms depend on k only through sum_j cos(k_j) or
    prod_j W(k_j).
    """
    v, c = np.unique(np.round(vals, 12), return_counts=True)
    keys = np.array([0.0 if op == "+" else 1.0])
    cnts = np.array([1.0])
    for _ in range(d):
        if op == "+":
            kk = (keys[:, None] + v[None, :]).ravel()
        else:
            kk = (keys[:, None] * v[None, :]).ravel()
        cc = (cnts[:, None] * c[None, :]).ravel()
        u, inv = np.unique(np.round(kk, decimals), return_inverse=True)
        s = np.zeros(len(u))
        np.add.at(s, inv, cc)
        keys, cnts = u, s
    return keys, cnts


def beta_separable(dist: StepDistribution, M: int, s: int) -> float:
    """k-space beta for nn/uniform without materializing the M^d grid."""
    t = 2.0 * np.pi * np.arange(M) / M
    if dist.family == "nn":
        keys, cnts = _combine_dp(np.cos(t), dist.d, "+")
        dhat = keys / dist.d
    elif dist.family == "uniform":
        n = 2 * dist.L + 1
        small = np.abs(np.sin(t / 2)) < 1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(small, float(n), np.sin(n * t / 2) / np.sin(t / 2))
        keys, cnts = _combine_dp(w, dist.d, "*")
        dhat = (keys - 1.0) / (n ** dist.d - 1)
    else:
        raise ValueError("separable path needs a product-form transform")
    mask = np.abs(1.0 - dhat) > 1e-12
    return float(np.sum(cnts[mask] * dhat[mask] ** 2
                        / (1.0 - dhat[mask]) ** s) / M ** dist.d)


def beta_scaling_table(family: str, s: int, sweep: dict) -> list:
    """Sweep beta over d (nn) or L (uniform) and report the scaled column.

    The dual grid is held fixed across a sweep so the swept parameter is the
    only variable.  Rows: (parameter, beta, scaled beta).
    """
    rows = []
    if family == "nn":
        M = sweep.get("M", 16)
        for d in sweep["d_values"]:
            b = beta_separable(StepDistribution("nn", d), M, s)
            rows.append({"d": d, "M": M, "beta": b, "scaled": d * b,
                         "scale": "d*beta"})
    elif family == "uniform":
        d = sweep["d"]
        M = sweep.get("M", 32)
        for L in sweep["L_values"]:
            b = beta_separable(StepDistribution("uniform", d, L=L), M, s)
            rows.append({"L": L, "M": M, "beta": b, "scaled": L ** d * b,
                         "scale": "L^%d*beta" % d})
    elif family == "power":
        d = sweep["d"]
        for L in sweep["L_values"]:
            dist = StepDistribution("power", d, L=L, alpha=sweep["alpha"])
            grid = TorusGrid(d, sweep.get("M", 16))
            rep = beta(dist, grid, s, refinements=sweep.get("refinements", 3))
            rows.append({"L": L, "M": grid.M, "beta": rep.beta_kspace,
                         "scaled": L ** d * rep.beta_kspace,
                         "scale": "L^%d*beta" % d,
                         "divergent": rep.divergent})
    else:
        raise ValueError("unknown family %r" % family)
    return rows


def bound_diagnostics(dist: StepDistribution, grid: TorusGrid, s: int) -> dict:
    """Cauchy-Schwarz split of beta, with the spread-out region split.

    beta <= sqrt(D^{*4}(0)) * sqrt(mean_k (1-Dhat)^{-2s}), both sides on the
    same grid with the zero mode excluded; for L > 1 families the k-sum is
    also split at ||k||_inf = 1/L.
    """
    dhat = folded_dhat(dist, grid)
    mask = np.ones_like(dhat, dtype=bool)
    mask[(0,) * grid.d] = False
    v = dhat[mask]
    lhs = float(np.sum(v ** 2 / (1.0 - v) ** s) / grid.n_sites)
    d4 = float(np.sum(dhat ** 4) / grid.n_sites)
    inv = float(np.sum(1.0 / (1.0 - v) ** (2 * s)) / grid.n_sites)
    rhs = math.sqrt(d4) * math.sqrt(inv)

    record = {"s": s, "M": grid.M, "beta": lhs,
              "d4_return": d4, "inverse_power_mean": inv,
              "cauchy_schwarz_rhs": rhs, "holds": lhs <= rhs * (1 + 1e-12)}

    L = dist.L if dist.family != "nn" else 1
    if L > 1:
        kv = grid.dual_values()
        kinf = np.max(np.abs(kv), axis=0)[mask]
        inner = kinf <= 1.0 / L
        record["inner_region"] = float(
            np.sum(v[inner] ** 2 / (1.0 - v[inner]) ** s) / grid.n_sites)
        record["outer_region"] = float(
            np.sum(v[~inner] ** 2 / (1.0 - v[~inner]) ** s) / grid.n_sites)
    return record
