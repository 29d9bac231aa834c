"""
Periodic frequency grids, real spectral fields and the operations built on them.

Coefficients follow the angular convention ``f_hat(xi) = int f(x) exp(-i x xi) dx``
discretized on the torus ``[-L/2, L/2)``, so ``coeffs(xi_k) = dx * sum_j f(x_j) exp(-i xi_k x_j)``.
Frequency integrals become Riemann sums with weight ``dxi``; a product of two
fields has coefficients ``(dxi / 2 pi) * sum u_hat(xi1) v_hat(xi - xi1)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.fft as sfft

HERMITIAN_RTOL = 1e-12
MEAN_RTOL = 1e-12


@dataclass(frozen=True)
class FrequencyGrid:
    """
    Torus of period ``period_L`` sampled with ``modes_N`` points.

    Wavenumbers are ``k * dxi`` for ``k = -N/2, ..., N/2 - 1`` in ascending order.
    """

    period_L: float
    modes_N: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.period_L) or self.period_L <= 0:
            raise ValueError(f"period_L must be positive, got {self.period_L}")
        if int(self.modes_N) != self.modes_N or self.modes_N % 2 or self.modes_N < 8:
            raise ValueError(f"modes_N must be an even integer >= 8, got {self.modes_N}")
        object.__setattr__(self, "period_L", float(self.period_L))
        object.__setattr__(self, "modes_N", int(self.modes_N))

    @property
    def dxi(self) -> float:
        return 2.0 * np.pi / self.period_L

    @property
    def dx(self) -> float:
        return self.period_L / self.modes_N

    @property
    def k(self) -> np.ndarray:
        """Integer mode indices, ascending."""
        half = self.modes_N // 2
        return np.arange(-half, half)

    @property
    def wavenumbers(self) -> np.ndarray:
        return self.k * self.dxi

    @property
    def xi_max(self) -> float:
        return self.modes_N // 2 * self.dxi

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.period_L + self.dx * np.arange(self.modes_N)

    @property
    def zero_index(self) -> int:
        return self.modes_N // 2

    def retained(self) -> np.ndarray:
        """Boolean mask of modes kept by the 2/3 rule, |k| < N/3."""
        return 3 * np.abs(self.k) < self.modes_N

    def zeros(self) -> "SpectralField":
        return SpectralField(self, np.zeros(self.modes_N, dtype=complex))


def make_grid(period_L: float, modes_N: int) -> FrequencyGrid:
    return FrequencyGrid(period_L, modes_N)


class SpectralField:
    """
    Fourier coefficients of a real function on a :class:`FrequencyGrid`.

    The coefficient array is stored in ascending wavenumber order and is
    read-only. Hermitian symmetry is checked on construction and the unmatched
    ``-N/2`` mode is zeroed. The zero mode is kept as given so that operations
    needing mean-zero input can reject it; use :meth:`without_mean` to drop it.
    """

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid: FrequencyGrid, coeffs, *, check: bool = True):
        c = np.array(coeffs, dtype=complex, copy=True).reshape(-1)
        if c.size != grid.modes_N:
            raise ValueError(f"expected {grid.modes_N} coefficients, got {c.size}")
        c[0] = 0.0
        if check:
            scale = np.max(np.abs(c)) if c.size else 0.0
            asym = np.max(np.abs(c[1:] - np.conj(c[1:][::-1]))) if scale > 0 else 0.0
            if asym > HERMITIAN_RTOL * scale:
                raise ValueError(f"coefficients are not Hermitian (defect {asym / scale:.2e})")
        c.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, name, value):
        raise AttributeError("SpectralField is immutable")

    def __repr__(self) -> str:
        return f"SpectralField(L={self.grid.period_L:g}, N={self.grid.modes_N})"

    # arithmetic on a shared grid
    def _other(self, other: "SpectralField") -> np.ndarray:
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.grid != self.grid:
            raise ValueError("grid mismatch")
        return other.coeffs

    def __add__(self, other):
        return SpectralField(self.grid, self.coeffs + self._other(other), check=False)

    def __sub__(self, other):
        return SpectralField(self.grid, self.coeffs - self._other(other), check=False)

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs, check=False)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField) or np.iscomplexobj(scalar):
            return NotImplemented
        return SpectralField(self.grid, float(scalar) * self.coeffs, check=False)

    __rmul__ = __mul__

    @property
    def mean_mode(self) -> complex:
        return complex(self.coeffs[self.grid.zero_index])

    def without_mean(self) -> "SpectralField":
        c = self.coeffs.copy()
        c[self.grid.zero_index] = 0.0
        return SpectralField(self.grid, c, check=False)

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    # physical space
    @classmethod
    def from_physical(cls, grid: FrequencyGrid, values) -> "SpectralField":
        v = np.asarray(values, dtype=float)
        if v.shape != (grid.modes_N,):
            raise ValueError(f"expected {grid.modes_N} samples, got shape {v.shape}")
        c = sfft.fftshift(sfft.fft(v)) * grid.dx * _phase(grid)
        # exact Hermitian symmetry regardless of FFT rounding
        c[1:] = 0.5 * (c[1:] + np.conj(c[1:][::-1]))
        return cls(grid, c, check=False)

    @classmethod
    def from_function(cls, grid: FrequencyGrid, func) -> "SpectralField":
        return cls.from_physical(grid, func(grid.x))

    def to_physical(self) -> np.ndarray:
        c = self.coeffs * _phase(self.grid)
        return sfft.ifft(sfft.ifftshift(c)).real / self.grid.dx

    # rfft layout used by the time stepper: index k = 0 .. N/2, no phase factor
    def to_half(self) -> np.ndarray:
        g = self.grid
        h = np.zeros(g.modes_N // 2 + 1, dtype=complex)
        h[:-1] = self.coeffs[g.zero_index:] * _phase(g)[g.zero_index:]
        return h

    @classmethod
    def from_half(cls, grid: FrequencyGrid, half) -> "SpectralField":
        z = grid.zero_index
        c = np.zeros(grid.modes_N, dtype=complex)
        c[z:] = half[:-1]
        c[1:z] = np.conj(half[1:z][::-1])
        return cls(grid, c * _phase(grid), check=False)

    # serialization
    def to_json(self) -> str:
        rows = [[int(k), float(z.real), float(z.imag)] for k, z in zip(self.grid.k, self.coeffs)]
        doc = {"period_L": self.grid.period_L, "modes_N": self.grid.modes_N, "coeffs": rows}
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "SpectralField":
        doc = json.loads(text)
        grid = FrequencyGrid(doc["period_L"], doc["modes_N"])
        c = np.zeros(grid.modes_N, dtype=complex)
        for k, re, im in doc["coeffs"]:
            c[int(k) + grid.zero_index] = complex(re, im)
        return cls(grid, c)

    def save(self, path) -> Path:
        """Write the field; ``.json`` gives text, anything else ``.npz``."""
        path = Path(path)
        if path.suffix == ".json":
            path.write_text(self.to_json())
        else:
            with open(path, "wb") as fh:
                np.savez(fh, period_L=self.grid.period_L, modes_N=self.grid.modes_N,
                         k=self.grid.k, coeffs=self.coeffs)
        return path

    @classmethod
    def load(cls, path) -> "SpectralField":
        path = Path(path)
        if path.suffix == ".json":
            return cls.from_json(path.read_text())
        with np.load(path) as data:
            grid = FrequencyGrid(float(data["period_L"]), int(data["modes_N"]))
            c = np.zeros(grid.modes_N, dtype=complex)
            c[data["k"] + grid.zero_index] = data["coeffs"]
        return cls(grid, c)


def _phase(grid: FrequencyGrid) -> np.ndarray:
    # exp(-i xi_k x_0) with x_0 = -L/2 equals (-1)^k
    return np.where(grid.k % 2 == 0, 1.0, -1.0)


def japanese(xi) -> np.ndarray:
    return np.sqrt(1.0 + np.square(xi))


def sobolev_norm(f: SpectralField, s: float) -> float:
    xi = f.grid.wavenumbers
    w = japanese(xi) ** (2.0 * s)
    return float(np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2) * f.grid.dxi))


def apply_multiplier(f: SpectralField, symbol) -> SpectralField:
    """Multiply coefficients by ``symbol`` sampled on the wavenumbers."""
    return SpectralField(f.grid, np.asarray(symbol) * f.coeffs, check=False)


def apply_dx(f: SpectralField) -> SpectralField:
    return apply_multiplier(f, 1j * f.grid.wavenumbers)


def check_mean_zero(f: SpectralField, what: str = "field") -> None:
    scale = np.sqrt(np.sum(np.abs(f.coeffs) ** 2))
    if abs(f.mean_mode) > MEAN_RTOL * max(scale, np.finfo(float).tiny):
        raise ValueError(f"{what} has a nonzero mean (zero mode {f.mean_mode:.3e})")


def apply_inv_dx(f: SpectralField) -> SpectralField:
    check_mean_zero(f, "apply_inv_dx input")
    xi = f.grid.wavenumbers
    sym = np.zeros_like(xi, dtype=complex)
    nz = xi != 0
    sym[nz] = 1.0 / (1j * xi[nz])
    return apply_multiplier(f, sym)


def dealiased_product(u: SpectralField, v: SpectralField) -> SpectralField:
    """
    Coefficients of ``u * v`` under the 2/3 rule.

    Inputs are truncated to |k| < N/3 and the output is returned on the same band,
    which makes the result the exact convolution of the truncated inputs.
    """
    if u.grid != v.grid:
        raise ValueError("grid mismatch")
    g = u.grid
    keep = g.retained()
    a = np.where(keep, u.coeffs, 0.0)
    b = np.where(keep, v.coeffs, 0.0)
    pa = sfft.ifft(sfft.ifftshift(a))
    pb = pa if u is v else sfft.ifft(sfft.ifftshift(b))
    prod = sfft.fftshift(sfft.fft(pa * pb)) * (g.modes_N / g.period_L)
    return SpectralField(g, np.where(keep, prod, 0.0), check=False)


def project_band(f: SpectralField, kind: str, c: float = 0.0, *, ratio: float = 100.0,
                 pivot: float | None = None) -> SpectralField:
    """
    Zero coefficients outside a frequency band.

    ``kind`` is ``"low_ball"`` (|xi| <= c), ``"high_tail"`` (|xi| > c) or
    ``"relative_high"`` (|xi| > |pivot| / ratio).
    """
    xi = np.abs(f.grid.wavenumbers)
    if kind == "low_ball":
        keep = xi <= c
    elif kind == "high_tail":
        keep = xi > c
    elif kind == "relative_high":
        if pivot is None:
            raise ValueError("relative_high needs a pivot frequency")
        keep = xi * ratio > abs(pivot)
    else:
        raise ValueError(f"unknown band kind {kind!r}")
    return SpectralField(f.grid, np.where(keep, f.coeffs, 0.0), check=False)


def band_energies(f: SpectralField) -> list[tuple[int, float]]:
    """Dyadic energies ``E_j = sum_{2^j <= |xi| < 2^(j+1)} |c|^2 dxi`` over nonempty bands."""
    xi = np.abs(f.grid.wavenumbers)
    nz = xi > 0
    j = np.floor(np.log2(xi[nz])).astype(int)
    # guard log2 rounding at exact powers of two
    j[2.0 ** (j + 1) <= xi[nz]] += 1
    j[2.0 ** j > xi[nz]] -= 1
    e = np.abs(f.coeffs[nz]) ** 2 * f.grid.dxi
    lo, hi = j.min(), j.max()
    sums = np.bincount(j - lo, weights=e, minlength=hi - lo + 1)
    counts = np.bincount(j - lo, minlength=hi - lo + 1)
    return [(int(lo + i), float(sums[i])) for i in range(hi - lo + 1) if counts[i]]


def inner(f: SpectralField, g: SpectralField) -> complex:
    """Discrete L2 pairing ``sum conj(f_hat) g_hat dxi``."""
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    return complex(np.vdot(f.coeffs, g.coeffs) * f.grid.dxi)
