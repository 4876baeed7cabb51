"""The three step-distribution families and their condition verifiers.

Families:
  nn       D(x) = 1/(2d) on |x| = 1.
  uniform  D(x) = 1/((2L+1)^d - 1) on 0 < ||x||_inf <= L.
  power    D(x) = (|x/L| v 1)^{-d-alpha} / norm_const on x != 0, with the
           normalization summed over the truncated support plus an integral
           tail bound so that sum_x D(x) = 1 by construction.

All families put no mass at the origin and are invariant under coordinate
permutations and sign flips.
"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .torus import TorusField, TorusGrid

POWER_POINT_BUDGET = int(2e7)  # support-point cap for the power family
POWER_TAIL_TARGET = 1e-9
_CHUNK = 1 << 20


def _sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _power_tail_bound(d: int, L: int, alpha: float, R: float) -> float:
    """Upper bound on sum_{|x| > R} (|x/L| v 1)^{-d-alpha}.

    Unit cells centered at lattice points x with |x| > R cover the region
    |y| > R - sqrt(d)/2, on which the integrand dominates each cell value.
    """
    r0 = max(R - math.sqrt(d), 1.0)
    return 2.0 * _sphere_area(d) * L ** (d + alpha) * r0 ** (-alpha) / alpha


@dataclass(frozen=True)
class StepDistribution:
    family: str  # "nn" | "uniform" | "power"
    d: int
    L: int = 1
    alpha: float | None = None
    support_radius: int | None = None
    # caches, filled in __post_init__
    norm_const: float = field(default=0.0, compare=False)
    tail_bound: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be a positive integer")
        if self.family not in ("nn", "uniform", "power"):
            raise ValueError("unknown family %r" % (self.family,))
        if self.family != "nn" and self.L < 1:
            raise ValueError("L must be a positive integer")
        if self.family == "power":
            if self.alpha is None or self.alpha <= 0:
                raise ValueError("power family needs alpha > 0")
            radius = self.support_radius or self._default_power_radius()
            object.__setattr__(self, "support_radius", radius)
            norm, tail = self._power_norm(radius)
            object.__setattr__(self, "norm_const", norm)
            object.__setattr__(self, "tail_bound", tail / norm)

    # -- power-law truncation policy ------------------------------------
    def _default_power_radius(self) -> int:
        d, L, a = self.d, self.L, self.alpha
        # crude lower bound on the norm: the 2d nearest neighbors alone (h=1)
        target = POWER_TAIL_TARGET * 2 * d
        r = 10.0 * L
        while _power_tail_bound(d, L, a, r) > target and r < 1e12:
            r *= 2.0
        budget_r = int((POWER_POINT_BUDGET ** (1.0 / d) - 1) / 2)
        return int(min(r, max(budget_r, 2 * L)))

    def _power_h_chunks(self):
        """Yield (offsets, h-values) blocks covering 0 < |x|, ||x||_inf <= R."""
        R = self.support_radius
        d, L, a = self.d, self.L, self.alpha
        if d == 1:
            for start in range(1, R + 1, _CHUNK):
                stop = min(start + _CHUNK - 1, R)
                x = np.arange(start, stop + 1, dtype=np.int64)
                h = np.maximum(x / L, 1.0) ** (-(d + a))
                xs = np.concatenate([x, -x])[:, None]
                yield xs, np.concatenate([h, h])
            return
        axis = np.arange(-R, R + 1, dtype=np.int64)
        # iterate over hyperplanes of the first coordinate to bound memory
        rest = np.stack([c.ravel() for c in
                         np.meshgrid(*([axis] * (d - 1)), indexing="ij")], axis=1)
        for x0 in axis:
            xs = np.concatenate(
                [np.full((rest.shape[0], 1), x0, dtype=np.int64), rest], axis=1)
            r = np.sqrt(np.sum((xs / L) ** 2, axis=1))
            h = np.maximum(r, 1.0) ** (-(d + a))
            keep = np.any(xs != 0, axis=1)
            yield xs[keep], h[keep]

    def _power_norm(self, radius: int):
        total = 0.0
        for _, h in self._power_h_chunks():
            total += float(np.sum(h))
        tail = _power_tail_bound(self.d, self.L, self.alpha, radius)
        return total + tail, tail

    # -- evaluation ------------------------------------------------------
    def eval_d(self, x) -> float:
        x = np.asarray(x, dtype=np.int64)
        if x.shape != (self.d,):
            raise ValueError("x must be a %d-vector" % self.d)
        if not np.any(x):
            return 0.0
        if self.family == "nn":
            return 1.0 / (2 * self.d) if np.sum(np.abs(x)) == 1 else 0.0
        if self.family == "uniform":
            inside = 0 < np.max(np.abs(x)) <= self.L
            return 1.0 / ((2 * self.L + 1) ** self.d - 1) if inside else 0.0
        r = float(np.sqrt(np.sum((x / self.L) ** 2)))
        return max(r, 1.0) ** (-(self.d + self.alpha)) / self.norm_const

    def eval_d_exact(self, x) -> Fraction:
        """Exact rational value; nn and uniform families only."""
        p = self.eval_d(x)
        if self.family == "nn":
            return Fraction(1, 2 * self.d) if p else Fraction(0)
        if self.family == "uniform":
            return (Fraction(1, (2 * self.L + 1) ** self.d - 1)
                    if p else Fraction(0))
        raise ValueError("exact rationals only for nn/uniform families")

    def support(self):
        """Materialized (offsets, probs); power family truncated per policy."""
        if self.family == "nn":
            offs = []
            for a in range(self.d):
                for s in (1, -1):
                    v = [0] * self.d
                    v[a] = s
                    offs.append(v)
            offs = np.array(offs, dtype=np.int64)
            return offs, np.full(len(offs), 1.0 / (2 * self.d))
        if self.family == "uniform":
            axis = range(-self.L, self.L + 1)
            offs = np.array([x for x in itertools.product(axis, repeat=self.d)
                             if any(x)], dtype=np.int64)
            return offs, np.full(len(offs), 1.0 / len(offs))
        offs, probs = [], []
        for xs, h in self._power_h_chunks():
            offs.append(xs)
            probs.append(h / self.norm_const)
        return np.concatenate(offs), np.concatenate(probs)

    def support_chunks(self):
        """Chunked (offsets, probs) iterator; safe for huge 1-d supports."""
        if self.family == "power":
            for xs, h in self._power_h_chunks():
                yield xs, h / self.norm_const
        else:
            yield self.support()

    @property
    def sup_d(self) -> float:
        if self.family == "nn":
            return 1.0 / (2 * self.d)
        if self.family == "uniform":
            return 1.0 / ((2 * self.L + 1) ** self.d - 1)
        return 1.0 / self.norm_const

    @property
    def alpha_wedge_2(self) -> float:
        return min(self.alpha, 2.0) if self.family == "power" else 2.0

    # -- Fourier ----------------------------------------------------------
    def fourier_d(self, k) -> np.ndarray | float:
        """Dhat(k) = sum_x D(x) cos(k.x); k is (d,) or (n, d)."""
        k = np.asarray(k, dtype=float)
        single = k.ndim == 1
        ks = k[None, :] if single else k
        if ks.shape[-1] != self.d:
            raise ValueError("k must have %d components" % self.d)
        if self.family == "nn":
            out = np.mean(np.cos(ks), axis=-1)
        elif self.family == "uniform":
            # product of per-axis Dirichlet kernels, origin term removed
            n = 2 * self.L + 1
            prod = np.ones(len(ks))
            for a in range(self.d):
                t = ks[:, a]
                small = np.abs(np.sin(t / 2)) < 1e-12
                with np.errstate(divide="ignore", invalid="ignore"):
                    w = np.where(small, float(n),
                                 np.sin(n * t / 2) / np.sin(t / 2))
                prod *= w
            out = (prod - 1.0) / (n ** self.d - 1)
        else:
            out = np.zeros(len(ks))
            for xs, p in self.support_chunks():
                out += np.cos(ks @ xs.T.astype(float)) @ p
        return float(out[0]) if single else out

    def fourier_d_support_sum(self, k) -> np.ndarray | float:
        """Generic support-sum path (oracle for the closed forms)."""
        k = np.asarray(k, dtype=float)
        single = k.ndim == 1
        ks = k[None, :] if single else k
        out = np.zeros(len(ks))
        for xs, p in self.support_chunks():
            out += np.cos(ks @ xs.T.astype(float)) @ p
        return float(out[0]) if single else out

    # -- torus folding ------------------------------------------------------
    def fold(self, grid: TorusGrid) -> TorusField:
        """D_M(x) = sum over images y = x mod M of D(y)."""
        if grid.d != self.d:
            raise ValueError("grid dimension mismatch")
        vals = np.zeros(grid.n_sites)
        strides = np.array([grid.M ** (self.d - 1 - a) for a in range(self.d)],
                           dtype=np.int64)
        for xs, p in self.support_chunks():
            flat = (np.mod(xs, grid.M) @ strides).astype(np.int64)
            np.add.at(vals, flat, p)
        return TorusField(grid, vals.reshape(grid.shape), "x")

    # -- moments and condition scan -------------------------------------
    def moment(self, kappa: float):
        """Sum |x|^kappa D(x), or the string "divergent".

        Divergence is decided analytically for the power family
        (kappa >= alpha) and confirmed by a shell ratio heuristic.
        """
        if self.family in ("nn", "uniform"):
            offs, probs = self.support()
            r = np.sqrt(np.sum(offs.astype(float) ** 2, axis=1))
            return float(np.sum(r ** kappa * probs))
        if kappa >= self.alpha:
            return "divergent"
        total = 0.0
        for xs, p in self.support_chunks():
            r = np.sqrt(np.sum(xs.astype(float) ** 2, axis=1))
            total += float(np.sum(np.maximum(r, 1.0) ** kappa * p))
        return total

    def shell_ratio_divergent(self, kappa: float) -> bool:
        """Ratio heuristic: partial sums over radius grow like r^{kappa-alpha}."""
        if self.family != "power":
            return False
        radii = np.geomspace(4 * self.L, max(self.support_radius, 8 * self.L), 6)
        partial = []
        for R in radii:
            tot = 0.0
            for xs, p in self.support_chunks():
                r = np.sqrt(np.sum(xs.astype(float) ** 2, axis=1))
                m = r <= R
                tot += float(np.sum(np.maximum(r[m], 1.0) ** kappa * p[m]))
            partial.append(tot)
        diffs = np.diff(partial)
        return bool(len(diffs) >= 2 and diffs[-1] > 0.5 * diffs[-2] > 0)

    def to_spec(self) -> dict:
        out = {"family": self.family, "d": self.d}
        if self.family != "nn":
            out["L"] = self.L
        if self.family == "power":
            out["alpha"] = self.alpha
            out["truncation"] = self.support_radius
        return out

    @classmethod
    def from_spec(cls, spec: dict) -> "StepDistribution":
        return cls(family=spec["family"], d=int(spec["d"]),
                   L=int(spec.get("L", 1)),
                   alpha=spec.get("alpha"),
                   support_radius=spec.get("truncation"))


@dataclass
class ConditionReport:
    c1_hat: float
    c2_hat: float
    sup_d: float
    moment_table: list
    ok: bool
    violations: list
    grid_res: int
    eps: float


def verify_conditions(dist: StepDistribution, grid_res: int = 16,
                      eps: float = 0.1) -> ConditionReport:
    """Scan the dual grid for the small-k and large-k constants.

    c1_hat: largest c1 with 1 - Dhat(k) >= c1 L^{a^2} |k|^{a^2} on tested k
    with ||k||_inf <= 1/L (a^2 = alpha wedge 2); c2_hat: largest c2 with
    1 - Dhat > c2 outside that box and 1 - Dhat < 2 - c2 everywhere.
    """
    if grid_res < 4:
        raise ValueError("grid_res must be >= 4")
    d, L = dist.d, dist.L if dist.family != "nn" else 1
    aw2 = dist.alpha_wedge_2

    axis = 2.0 * np.pi * (np.arange(grid_res) - grid_res // 2) / grid_res
    if d <= 3:
        ks = np.stack([c.ravel() for c in
                       np.meshgrid(*([axis] * d), indexing="ij")], axis=1)
    else:
        rng = np.random.default_rng(12345)
        choice = axis[rng.integers(0, grid_res, size=(grid_res ** 3, d))]
        ks = choice
    # always include a fine sample of the inner box ||k||_inf <= 1/L
    inner_axis = np.linspace(-1.0 / L, 1.0 / L, grid_res)
    if d <= 3:
        inner = np.stack([c.ravel() for c in
                          np.meshgrid(*([inner_axis] * d), indexing="ij")], axis=1)
    else:
        rng = np.random.default_rng(54321)
        inner = inner_axis[rng.integers(0, grid_res, size=(grid_res ** 3, d))]
    ks = np.concatenate([ks, inner])
    ks = ks[np.any(ks != 0.0, axis=1)]

    one_minus = 1.0 - np.asarray(dist.fourier_d(ks))
    norm_inf = np.max(np.abs(ks), axis=1)
    norm_2 = np.sqrt(np.sum(ks ** 2, axis=1))

    violations = []
    small = norm_inf <= 1.0 / L
    if np.any(small):
        ratios = one_minus[small] / (L ** aw2 * norm_2[small] ** aw2)
        c1_hat = float(np.min(ratios))
        if c1_hat <= 0:
            worst = ks[small][int(np.argmin(ratios))]
            violations.append({"condition": "small-k lower bound",
                               "k": worst.tolist()})
    else:
        c1_hat = float("nan")
    large = ~small
    c2_low = float(np.min(one_minus[large])) if np.any(large) else float("inf")
    c2_high = float(np.min(2.0 - one_minus))
    c2_hat = min(c2_low, c2_high)
    if c2_hat <= 0:
        violations.append({"condition": "large-k bounds", "k": None})

    table = []
    kappas = [2.0, 2.0 + eps]
    if dist.family == "power":
        kappas += [dist.alpha - eps, dist.alpha]
    for kappa in kappas:
        table.append((kappa, dist.moment(kappa)))

    return ConditionReport(c1_hat=c1_hat, c2_hat=c2_hat, sup_d=dist.sup_d,
                           moment_table=table, ok=not violations,
                           violations=violations, grid_res=grid_res, eps=eps)


def ising_tau(J: dict, z: float):
    """tau(z) = sum_y tanh(z J(y)) and the induced step weights.

    J maps offset tuples to nonnegative couplings (origin excluded); both
    tau and D(x) = tanh(z J(x)) / tau are returned.
    """
    if any(v < 0 for v in J.values()):
        raise ValueError("couplings must be nonnegative")
    terms = {x: math.tanh(z * Jx) for x, Jx in J.items() if any(x)}
    tau = sum(terms.values())
    if tau == 0.0:
        raise ValueError("tau(z) = 0: step normalization undefined")
    return tau, {x: t / tau for x, t in terms.items()}
