"""Finite periodic box Z^d / M Z^d with exact DFTs and convolutions.

Conventions: the dual grid is {2*pi*m/M : m in {-M/2,...,M/2-1}}^d, stored in
numpy index order (index m represents frequency 2*pi*m/M, wrapped).  The
transform is fhat(k) = sum_x f(x) exp(+i k.x), so dft = M^d * ifftn and
idft = fftn / M^d.  x-space fields live on {0,...,M-1}^d; wherever a
magnitude |x| matters the centered representative in {-M/2,...,M/2-1}^d is
used.
"""

from dataclasses import dataclass

import numpy as np

DIRECT_CONV_MAX_SITES = 4096


@dataclass(frozen=True)
class TorusGrid:
    d: int
    M: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.M < 4 or self.M % 2 != 0:
            raise ValueError("M must be even and >= 4")

    @property
    def shape(self):
        return (self.M,) * self.d

    @property
    def n_sites(self):
        return self.M ** self.d

    def centered_coords(self):
        """Per-axis centered representatives, shape (d, M, ..., M)."""
        c = np.indices(self.shape)
        return np.where(c >= self.M // 2, c - self.M, c)

    def dual_values(self):
        """Per-axis dual variable 2*pi*m/M wrapped to [-pi, pi)."""
        return 2.0 * np.pi * self.centered_coords() / self.M

    def index_vector(self, flat):
        return np.unravel_index(flat, self.shape)


@dataclass
class TorusField:
    grid: TorusGrid
    values: np.ndarray
    space: str = "x"  # "x" or "k"

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.shape:
            raise ValueError("field shape does not match grid")
        if self.space not in ("x", "k"):
            raise ValueError("space tag must be 'x' or 'k'")

    def copy(self):
        return TorusField(self.grid, self.values.copy(), self.space)


def delta_field(grid: TorusGrid) -> TorusField:
    v = np.zeros(grid.shape)
    v[(0,) * grid.d] = 1.0
    return TorusField(grid, v, "x")


def dft(f: TorusField) -> TorusField:
    if f.space != "x":
        raise ValueError("dft expects an x-space field")
    vhat = np.fft.ifftn(f.values) * f.grid.n_sites
    return TorusField(f.grid, vhat, "k")


def idft(fhat: TorusField) -> TorusField:
    if fhat.space != "k":
        raise ValueError("idft expects a k-space field")
    v = np.fft.fftn(fhat.values) / fhat.grid.n_sites
    return TorusField(fhat.grid, v, "x")


def real_dft(f: TorusField, tol: float = 1e-10) -> np.ndarray:
    """Transform of a symmetric field, returned as a real array."""
    vhat = dft(f).values
    if np.max(np.abs(vhat.imag)) > tol * max(1.0, np.max(np.abs(vhat.real))):
        raise ValueError("field is not symmetric enough for a real transform")
    return vhat.real


def convolve(f: TorusField, g: TorusField) -> TorusField:
    """(f*g)(x) = sum_y f(y) g(x-y), computed through the transform."""
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    if f.space != "x" or g.space != "x":
        raise ValueError("convolve expects x-space fields")
    vhat = np.fft.ifftn(f.values) * np.fft.ifftn(g.values) * f.grid.n_sites
    out = np.fft.fftn(vhat)
    if np.isrealobj(f.values) and np.isrealobj(g.values):
        out = out.real
    return TorusField(f.grid, out, "x")


def convolve_direct(f: TorusField, g: TorusField) -> TorusField:
    """O(M^{2d}) summation oracle; guarded to small grids."""
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    if f.grid.n_sites > DIRECT_CONV_MAX_SITES:
        raise ValueError("direct convolution limited to M^d <= %d"
                         % DIRECT_CONV_MAX_SITES)
    M, d = f.grid.M, f.grid.d
    fv = f.values.ravel()
    out = np.zeros(f.grid.shape, dtype=np.result_type(f.values, g.values))
    idx = np.indices(f.grid.shape).reshape(d, -1)
    for y_flat, fy in enumerate(fv):
        if fy == 0:
            continue
        y = np.unravel_index(y_flat, f.grid.shape)
        shifted = tuple((idx[a] - y[a]) % M for a in range(d))
        out += (fy * g.values[shifted]).reshape(f.grid.shape)
    return TorusField(f.grid, out, "x")


def delta_k(ghat: TorusField, k_index, l_index) -> complex:
    """ghat(l-k) + ghat(l+k) - 2 ghat(l) with periodic index wrap."""
    if ghat.space != "k":
        raise ValueError("delta_k expects a k-space field")
    M = ghat.grid.M
    k = np.asarray(k_index, dtype=int)
    l = np.asarray(l_index, dtype=int)
    v = ghat.values
    return (v[tuple((l - k) % M)] + v[tuple((l + k) % M)]
            - 2.0 * v[tuple(l % M)])


def one_minus_cos_sum(g: TorusField, k_index) -> float:
    """sum_x [1 - cos(k.x)] |g(x)| with x in the centered domain."""
    if g.space != "x":
        raise ValueError("one_minus_cos_sum expects an x-space field")
    grid = g.grid
    k = 2.0 * np.pi * np.asarray(k_index, dtype=float) / grid.M
    xc = grid.centered_coords()
    phase = np.tensordot(k, xc, axes=(0, 0))
    return float(np.sum((1.0 - np.cos(phase)) * np.abs(g.values)))


def field_at_zero(f: TorusField) -> float:
    return float(np.real(f.values[(0,) * f.grid.d]))


def reflect(f: TorusField) -> TorusField:
    """g(x) = f(-x mod M)."""
    idx = tuple(slice(None, None, -1) for _ in range(f.grid.d))
    return TorusField(f.grid, np.roll(f.values[idx], 1, axis=tuple(range(f.grid.d))), f.space)


def is_symmetric(f: TorusField, tol: float = 1e-10) -> bool:
    return bool(np.max(np.abs(reflect(f).values - f.values))
                <= tol * max(1.0, float(np.max(np.abs(f.values)))))
