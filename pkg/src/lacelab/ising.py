"""Ferromagnetic Ising model: exact enumeration oracle plus Metropolis.

Instances are explicit coupling matrices (n_sites x n_sites, symmetric,
nonnegative, zero diagonal).  The helper coupling_matrix_from_torus folds a
translation-invariant coupling table onto a torus; note that on very small
tori distinct offsets can alias onto the same pair, in which case their
couplings add.
"""

import math
from dataclasses import dataclass

import numpy as np

from .kernels import metropolis_run
from .perc import batch_means_se
from .torus import TorusGrid

EXACT_SPIN_LIMIT = 20


@dataclass
class IsingConfig:
    J: np.ndarray    # symmetric coupling matrix, zero diagonal
    z: float         # inverse temperature
    h: float = 0.0
    sweeps: int = 4000
    burn_in: int = 500
    thinning: int = 2
    seed: int = 0
    replicas: int = 1

    def __post_init__(self):
        self.J = np.asarray(self.J, dtype=float)
        n = self.J.shape[0]
        if self.J.shape != (n, n):
            raise ValueError("J must be square")
        if np.any(self.J < 0):
            raise ValueError("ferromagnetic model needs J >= 0")
        if np.max(np.abs(self.J - self.J.T)) > 1e-12:
            raise ValueError("J must be symmetric")
        if np.max(np.abs(np.diag(self.J))) > 0:
            raise ValueError("J must have zero diagonal")

    @property
    def n_sites(self):
        return self.J.shape[0]


def coupling_matrix_from_torus(grid: TorusGrid, J_table: dict,
                               R: float | None = None):
    """Fold an offset->coupling table onto torus pairs (aliased offsets add)."""
    n = grid.n_sites
    strides = np.array([grid.M ** (grid.d - 1 - a) for a in range(grid.d)],
                       dtype=np.int64)
    J = np.zeros((n, n))
    for off, val in J_table.items():
        off = np.asarray(off, dtype=np.int64)
        if not np.any(off):
            continue
        if R is not None and math.sqrt(float(np.sum(off ** 2))) > R:
            continue
        for site in range(n):
            sv = np.array(np.unravel_index(site, grid.shape))
            nb = int(np.dot((sv + off) % grid.M, strides))
            if nb != site:
                J[site, nb] += val / 2.0
                J[nb, site] += val / 2.0
    return J


def coupling_tail(J_table: dict, z: float, R: float) -> float:
    """Share of sum_y tanh(zJ(y)) lost to the range cutoff."""
    total, outside = 0.0, 0.0
    for off, val in J_table.items():
        if not any(off):
            continue
        t = math.tanh(z * val)
        total += t
        if math.sqrt(sum(v * v for v in off)) > R:
            outside += t
    return outside / total if total > 0 else 0.0


@dataclass
class SpinSample:
    g: np.ndarray        # G(t) = <phi_0 phi_t> per site index (translation avg)
    g_se: np.ndarray
    chi_hat: float
    chi_se: float
    m_hat: float
    m_se: float
    samples: int
    equilibrated: bool = True


def exact_ising(config: IsingConfig) -> SpinSample:
    """Exact expectations by summing all 2^n spin configurations."""
    n = config.n_sites
    corr = exact_correlation_matrix(config)
    mag = _exact_magnetization(config)
    chi = float(np.sum(corr[0]))
    return SpinSample(g=corr[0].copy(), g_se=np.zeros(n), chi_hat=chi,
                      chi_se=0.0, m_hat=mag, m_se=0.0, samples=1 << n)


def _exact_magnetization(config: IsingConfig) -> float:
    n = config.n_sites
    num, den = 0.0, 0.0
    ref = None
    for start in range(0, 1 << n, 1 << 16):
        idx = np.arange(start, min(start + (1 << 16), 1 << n), dtype=np.int64)
        bits = (idx[:, None] >> np.arange(n)[None, :]) & 1
        phi = 2.0 * bits - 1.0
        energy = -0.5 * np.einsum("ci,ij,cj->c", phi, config.J, phi)
        logw = -config.z * energy + config.h * phi.sum(axis=1)
        if ref is None:
            ref = float(logw.max())
        w = np.exp(logw - ref)
        den += w.sum()
        num += float(w @ phi[:, 0])
    return num / den


def exact_correlation_matrix(config: IsingConfig) -> np.ndarray:
    """Full <phi_i phi_j> matrix from the exact sum."""
    n = config.n_sites
    if n > EXACT_SPIN_LIMIT:
        raise ValueError("exact enumeration limited to %d spins"
                         % EXACT_SPIN_LIMIT)
    corr = np.zeros((n, n))
    total_w = 0.0
    ref = None
    for start in range(0, 1 << n, 1 << 16):
        idx = np.arange(start, min(start + (1 << 16), 1 << n), dtype=np.int64)
        bits = (idx[:, None] >> np.arange(n)[None, :]) & 1
        phi = 2.0 * bits - 1.0
        energy = -0.5 * np.einsum("ci,ij,cj->c", phi, config.J, phi)
        logw = -config.z * energy + config.h * phi.sum(axis=1)
        if ref is None:
            ref = float(logw.max())
        w = np.exp(logw - ref)
        total_w += w.sum()
        corr += np.einsum("c,ci,cj->ij", w, phi, phi)
    return corr / total_w


def metropolis(config: IsingConfig) -> SpinSample:
    """Single-spin-flip Metropolis with batch-means errors.

    Correlations are translation-averaged through a target map: target t
    pairs every site i with the site at "i + t" in the row ordering of J,
    which is exact for torus-folded couplings and reduces to plain pairs
    otherwise.
    """
    n = config.n_sites
    max_deg = int(np.max(np.sum(config.J > 0, axis=1)))
    neighbor_idx = np.full((n, max(max_deg, 1)), -1, dtype=np.int64)
    neighbor_j = np.zeros((n, max(max_deg, 1)))
    for i in range(n):
        nz = np.nonzero(config.J[i])[0]
        neighbor_idx[i, :len(nz)] = nz
        neighbor_j[i, :len(nz)] = config.J[i, nz]
    # translation map: valid when sites are a flattened torus
    corr_targets = np.array([[(i + t) % n for t in range(n)]
                             for i in range(n)], dtype=np.int64)
    mags, corrs = [], []
    for rep in range(config.replicas):
        mag, corr = metropolis_run(
            neighbor_idx, neighbor_j, n, config.z, config.h,
            config.seed, rep, config.sweeps, config.burn_in,
            config.thinning, corr_targets)
        mags.append(mag)
        corrs.append(corr)
    mag = np.concatenate(mags)
    corr = np.concatenate(corrs, axis=0)
    g = corr.mean(axis=0)
    g_se = np.array([batch_means_se(corr[:, t]) for t in range(n)])
    chi_samples = corr.sum(axis=1)
    half = len(mag) // 2
    drift = abs(np.mean(mag[:half]) - np.mean(mag[half:]))
    drift_scale = batch_means_se(mag) * 3.0
    return SpinSample(
        g=g, g_se=g_se,
        chi_hat=float(np.mean(chi_samples)),
        chi_se=batch_means_se(chi_samples),
        m_hat=float(np.mean(mag)), m_se=batch_means_se(mag),
        samples=len(mag),
        equilibrated=bool(drift <= max(drift_scale, 1e-9)))


def tau_and_g_relation_check(config: IsingConfig, sample: SpinSample,
                             grid: TorusGrid, J_table: dict,
                             sigma_slack: float = 3.0) -> dict:
    """Single-step bound: G(x) - delta <= tau (D*G)(x) within noise."""
    from .steps import ising_tau
    tau, dstep = ising_tau(J_table, config.z)
    n = grid.n_sites
    strides = np.array([grid.M ** (grid.d - 1 - a) for a in range(grid.d)],
                       dtype=np.int64)
    g = sample.g
    worst = -np.inf
    worst_site = None
    for x in range(n):
        xv = np.array(np.unravel_index(x, grid.shape))
        conv = 0.0
        for off, w in dstep.items():
            y = int(np.dot((xv - np.asarray(off)) % grid.M, strides))
            conv += w * g[y]
        lhs = g[x] - (1.0 if x == 0 else 0.0)
        slack = sigma_slack * (sample.g_se[x] if sample.g_se[x] > 0 else 0.0)
        margin = tau * conv + slack - lhs
        if -margin > worst:
            worst = -margin
            worst_site = x
    return {"tau": tau, "holds": worst <= 1e-10, "worst_excess": worst,
            "worst_site": worst_site}
