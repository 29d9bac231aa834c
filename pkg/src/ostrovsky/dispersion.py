"""Dispersion relation, resonance function and the free Ostrovsky propagator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .spectral import SpectralField, check_mean_zero, japanese


class ResonantRegimeError(ValueError):
    """Raised when a kernel divides by a resonance function that may vanish."""


@dataclass(frozen=True)
class DispersionParams:
    """
    Coefficients of ``u_t + beta u_xxx - gamma dx^{-1} u + (u^2)_x = 0``.

    ``cutoff_Xi0`` is the frequency above which a mode counts as high and
    ``lowhigh_ratio`` the factor separating low from high in a low-high pair.
    """

    beta: float = 1.0
    gamma: float = 1.0
    cutoff_Xi0: float = 10.0
    lowhigh_ratio: float = 100.0

    def __post_init__(self) -> None:
        if self.beta == 0 or not np.isfinite(self.beta):
            raise ValueError("beta must be finite and nonzero")
        if not np.isfinite(self.gamma):
            raise ValueError("gamma must be finite")
        if self.cutoff_Xi0 <= 0:
            raise ValueError("cutoff_Xi0 must be positive")
        if self.lowhigh_ratio <= 1:
            raise ValueError("lowhigh_ratio must exceed 1")

    @property
    def nonresonant(self) -> bool:
        return self.beta * self.gamma > 0

    def require_nonresonant(self) -> None:
        if not self.nonresonant:
            raise ResonantRegimeError(
                f"resonant regime: beta*gamma = {self.beta * self.gamma:g} <= 0, "
                "the resonance function can vanish")


@dataclass(frozen=True)
class ResonanceTriple:
    """Frequencies with ``xi == xi1 + xi2``; build with :meth:`from_pair`."""

    xi: float
    xi1: float
    xi2: float

    def __post_init__(self) -> None:
        if self.xi1 + self.xi2 != self.xi:
            raise ValueError("xi must equal xi1 + xi2 exactly")
        if 0.0 in (self.xi, self.xi1, self.xi2):
            raise ValueError("resonance triple has a zero frequency")

    @classmethod
    def from_pair(cls, xi: float, xi1: float) -> "ResonanceTriple":
        xi2 = xi - xi1
        if xi1 + xi2 != xi:
            raise ValueError(f"xi - xi1 is not exact in floating point for ({xi!r}, {xi1!r})")
        return cls(xi, xi1, xi2)

    def resonance(self, p: DispersionParams) -> float:
        return float(resonance(self.xi, self.xi1, p))


def _nonzero(*arrays) -> None:
    for a in arrays:
        if np.any(np.asarray(a) == 0):
            raise ValueError("frequency must be nonzero")


def phase(xi, p: DispersionParams):
    """``phi(xi) = beta xi^3 - gamma / xi``."""
    _nonzero(xi)
    xi = np.asarray(xi, dtype=float)
    out = p.beta * xi**3 - p.gamma / xi
    return out if out.ndim else float(out)


def phase_symbol(xi, p: DispersionParams) -> np.ndarray:
    """Phase on a wavenumber array with the zero mode mapped to 0."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros_like(xi)
    nz = xi != 0
    out[nz] = p.beta * xi[nz] ** 3 - p.gamma / xi[nz]
    return out


def resonance(xi, xi1, p: DispersionParams):
    """``phi(xi) - phi(xi1) - phi(xi - xi1)`` by direct differences."""
    xi = np.asarray(xi, dtype=float)
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = xi - xi1
    _nonzero(xi, xi1, xi2)
    out = phase(xi, p) - phase(xi1, p) - phase(xi2, p)
    return out


def resonance_rational(xi, xi1):
    """Closed rational form of the resonance function for ``beta = gamma = 1``."""
    xi = np.asarray(xi, dtype=float)
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = xi - xi1
    _nonzero(xi, xi1, xi2)
    num = 3.0 * (xi * xi1 * xi2) ** 2 + xi**2 + xi1**2 - xi * xi1
    out = num / (xi * xi1 * xi2)
    return out if out.ndim else float(out)


def resonance_numerator(xi, xi1):
    xi = np.asarray(xi, dtype=float)
    xi1 = np.asarray(xi1, dtype=float)
    return 3.0 * (xi * xi1 * (xi - xi1)) ** 2 + xi**2 + xi1**2 - xi * xi1


def resonance_bigphi(xi, eta):
    """``3 xi eta (xi - eta) + 1/xi - 1/eta - 1/(xi - eta)``: the resonance for beta=1, gamma=-1."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    out = 3.0 * xi * eta * (xi - eta) + 1.0 / xi - 1.0 / eta - 1.0 / (xi - eta)
    return out if out.ndim else float(out)


def kbound(xi, xi1):
    """``K(xi, xi1) = |xi1| / (xi^2 xi1^2 + 1)``."""
    xi = np.asarray(xi, dtype=float)
    xi1 = np.asarray(xi1, dtype=float)
    out = np.abs(xi1) / (xi**2 * xi1**2 + 1.0)
    return out if out.ndim else float(out)


def cutoff_m(xi, xi1, p: DispersionParams):
    """Sharp low-high indicator: 1 iff |xi| > Xi0 and one input is below |xi| / ratio."""
    xi = np.asarray(xi, dtype=float)
    xi1 = np.asarray(xi1, dtype=float)
    axi = np.abs(xi)
    low = (np.abs(xi1) * p.lowhigh_ratio <= axi) | (np.abs(xi - xi1) * p.lowhigh_ratio <= axi)
    out = ((axi > p.cutoff_Xi0) & low).astype(int)
    return out if out.ndim else int(out)


def free_evolution(f: SpectralField, t: float, p: DispersionParams) -> SpectralField:
    """
    Linear flow ``S(t)`` solving ``v_t + L v = 0`` with ``L = beta d^3 - gamma d^{-1}``.

    On the Fourier side ``L`` has symbol ``-i phi(xi)``, so each mode is
    multiplied by ``exp(i phi(xi) t)``.
    """
    check_mean_zero(f, "free_evolution input")
    sym = np.exp(1j * phase_symbol(f.grid.wavenumbers, p) * t)
    return SpectralField(f.grid, sym * f.coeffs, check=False)


def linear_symbol(xi, p: DispersionParams) -> np.ndarray:
    """Fourier symbol of ``L``: ``-i phi(xi)`` (zero at xi = 0)."""
    return -1j * phase_symbol(xi, p)


def scan_kbound_ratio(xi_min: float = 10.0, xi_max: float = 1e4, n: int = 2000,
                      ratio: float = 100.0, p: DispersionParams | None = None):
    """
    Evaluate ``1 / (|Phi| K)`` on a log grid of the low-high region.

    Returns ``(xi, xi1, value)`` arrays of shape ``(n, 2n)``; ``xi1`` takes both
    signs with ``|xi1|`` log-spaced in ``[xi * 1e-8, xi / ratio]``.
    """
    p = p or DispersionParams()
    xi = np.geomspace(xi_min * (1 + 1e-12), xi_max, n)
    frac = np.geomspace(1e-8, 1.0 / ratio, n)
    xi1 = np.concatenate([-frac[::-1], frac])
    X = xi[:, None] * np.ones_like(xi1)[None, :]
    X1 = xi[:, None] * xi1[None, :]
    val = 1.0 / (np.abs(resonance(X, X1, p)) * kbound(X, X1))
    return X, X1, val


def k_maximum(xi: float) -> tuple[float, float]:
    """Numerically maximize ``K(xi, .)`` over ``xi1 > 0``; returns ``(argmax, max)``."""
    from scipy.optimize import minimize_scalar

    a = abs(xi)
    # search in log(xi1) so the bracket is scale free
    res = minimize_scalar(lambda y: -kbound(a, math.exp(y)),
                          bracket=(math.log(0.1 / a), math.log(10.0 / a)),
                          tol=1e-12)
    x1 = math.exp(res.x)
    return x1, float(kbound(a, x1))


def _lemma_phi(beta_exp: float, a: float) -> float:
    ja = math.sqrt(1.0 + a * a)
    if beta_exp > 1:
        return 1.0
    if beta_exp == 1:
        return math.log(1.0 + ja)
    return ja ** (1.0 - beta_exp)


def sum_lemma_integral(beta_exp: float, gamma_exp: float, a1: float, a2: float,
                       cut: float = 1e4) -> tuple[float, float]:
    """
    ``int dx / (<x - a1>^beta <x - a2>^gamma)`` over the line.

    Adaptive quadrature on ``(-cut, cut)`` with breakpoints at the centres; the
    two tails are mapped through ``x = exp(y)`` where the algebraic decay becomes
    exponential. Returns ``(value, error_estimate)``.
    """
    def g(x):
        return (1.0 + (x - a1) ** 2) ** (-0.5 * beta_exp) * (1.0 + (x - a2) ** 2) ** (-0.5 * gamma_exp)

    lo, hi = -cut, cut
    pts = sorted({min(max(a, lo), hi) for a in (a1, a2, 0.5 * (a1 + a2))} - {lo, hi})
    edges = [lo, *pts, hi]
    total = err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(g, a, b, epsabs=0.0, epsrel=1e-11, limit=500)
        total += v
        err += e
    decay = beta_exp + gamma_exp - 1.0
    ymax = math.log(cut) + 60.0 / decay
    for sign in (1.0, -1.0):
        v, e = integrate.quad(lambda y: g(sign * math.exp(y)) * math.exp(y),
                              math.log(cut), ymax, epsabs=0.0, epsrel=1e-11, limit=500)
        total += v
        err += e
    return total, err


def check_sum_lemma(beta_exp: float, gamma_exp: float, a1: float, a2: float) -> float:
    """Ratio of the two-bump integral to ``<a1 - a2>^{-gamma} phi_beta(a1 - a2)``."""
    if not (beta_exp >= gamma_exp >= 0 and beta_exp + gamma_exp > 1):
        raise ValueError("need beta >= gamma >= 0 and beta + gamma > 1")
    a = a1 - a2
    value, _ = sum_lemma_integral(beta_exp, gamma_exp, a1, a2)
    bound = float(japanese(a)) ** (-gamma_exp) * _lemma_phi(beta_exp, abs(a))
    return value / bound
