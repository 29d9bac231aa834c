"""Integrating-factor RK4 time stepping for the full Ostrovsky flow."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as sfft

from .dispersion import DispersionParams, free_evolution, phase_symbol
from .spectral import SpectralField, band_energies, check_mean_zero, dealiased_product, sobolev_norm

log = logging.getLogger(__name__)

UNDER_RESOLVED_FRACTION = 1e-8
BLOWUP_FACTOR = 1e6


class BlowUpError(RuntimeError):
    def __init__(self, time: float, norm: float):
        super().__init__(f"solution blew up at t={time:.6g} (L2 norm {norm:.3e})")
        self.time = time
        self.norm = norm


@dataclass(frozen=True)
class EvolutionConfig:
    params: DispersionParams = field(default_factory=DispersionParams)
    dt: float = 1e-4
    horizon_T: float = 0.5
    record_every: int = 100
    nonlinear: bool = True
    hs_index: float = 0.0

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.horizon_T > 0:
            raise ValueError("horizon_T must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.horizon_T / self.dt - 1e-9))


@dataclass
class Trajectory:
    times: list[float]
    states: list[SpectralField]
    l2: list[float]
    hs: list[float]
    under_resolved: bool = False

    @property
    def final(self) -> SpectralField:
        return self.states[-1]

    def l2_drift(self) -> float:
        if self.l2[0] == 0:
            return 0.0
        return max(abs(v / self.l2[0] - 1.0) for v in self.l2)


def rhs_nonlinear(u: SpectralField) -> SpectralField:
    """``N(u) = (u^2)_x`` with a dealiased square."""
    sq = dealiased_product(u, u)
    c = 1j * u.grid.wavenumbers * sq.coeffs
    c[u.grid.zero_index] = 0.0
    return SpectralField(u.grid, c, check=False)


class _IFRK4:
    """
    Stepper on rfft-layout coefficients.

    The interaction-picture variable ``exp(-i phi t) u_hat`` is advanced by RK4,
    so the linear part is applied exactly through the unimodular factor.
    """

    def __init__(self, grid, p: DispersionParams, dt: float, nonlinear: bool = True):
        self.n = grid.modes_N
        self.dt = dt
        kk = np.arange(self.n // 2 + 1)
        xi = kk * grid.dxi
        self.mask = (3 * kk < self.n).astype(float)
        self.mask[0] = 0.0
        self.deriv = -1j * xi * grid.dx * self.mask
        self.inv_dx = 1.0 / grid.dx
        phi = phase_symbol(xi, p)
        self.E = np.exp(0.5j * phi * dt)
        self.E2 = self.E * self.E
        self.E2[-1] = 0.0
        self.nonlinear = nonlinear

    def F(self, d):
        u = sfft.irfft(d * self.mask, n=self.n) * self.inv_dx
        return self.deriv * sfft.rfft(u * u)

    def step(self, d):
        E, E2, dt = self.E, self.E2, self.dt
        if not self.nonlinear:
            return E2 * d
        g1 = self.F(d)
        g2 = self.F(E * (d + 0.5 * dt * g1))
        g3 = self.F(E * d + 0.5 * dt * g2)
        g4 = self.F(E2 * d + dt * E * g3)
        return E2 * d + (dt / 6.0) * (E2 * g1 + 2.0 * E * (g2 + g3) + g4)


def step_ifrk4(u: SpectralField, dt: float, p: DispersionParams, nonlinear: bool = True) -> SpectralField:
    if dt == 0:
        return u
    out = _IFRK4(u.grid, p, dt, nonlinear).step(u.to_half())
    if not np.all(np.isfinite(out)):
        raise BlowUpError(dt, float("inf"))
    return SpectralField.from_half(u.grid, out)


def top_band_fraction(u: SpectralField) -> float:
    """Energy fraction in the highest dyadic band that holds retained modes."""
    g = u.grid
    kept = SpectralField(g, np.where(g.retained(), u.coeffs, 0.0), check=False)
    bands = band_energies(kept)
    kmax = np.max(np.abs(g.k[g.retained()])) * g.dxi
    jtop = int(np.floor(np.log2(kmax)))
    total = sum(e for _, e in bands)
    if total == 0:
        return 0.0
    return sum(e for j, e in bands if j >= jtop) / total


def evolve(f: SpectralField, cfg: EvolutionConfig, *, backward: bool = False,
           check_resolution: bool = True) -> Trajectory:
    """
    Integrate from ``f`` over ``[0, T]`` (or ``[0, -T]`` when ``backward``).

    Snapshots are stored every ``record_every`` steps and at the final time.
    Raises :class:`BlowUpError` on non-finite or exploding states. With
    ``check_resolution`` the top-band energy of the final state is checked and
    a ``RuntimeWarning`` issued when it exceeds the threshold.
    """
    check_mean_zero(f, "initial datum")
    n_steps = cfg.n_steps
    dt = cfg.horizon_T / n_steps * (-1.0 if backward else 1.0)
    stepper = _IFRK4(f.grid, cfg.params, dt, cfg.nonlinear)
    d = f.to_half()
    d[0] = 0.0
    n0 = sobolev_norm(f, 0.0)

    traj = Trajectory([0.0], [f], [n0], [sobolev_norm(f, cfg.hs_index)])
    for n in range(1, n_steps + 1):
        d = stepper.step(d)
        if n % cfg.record_every == 0 or n == n_steps:
            u = SpectralField.from_half(f.grid, d)
            l2 = sobolev_norm(u, 0.0)
            if not np.isfinite(l2) or (n0 > 0 and l2 > BLOWUP_FACTOR * n0):
                raise BlowUpError(n * dt, l2)
            traj.times.append(n * dt)
            traj.states.append(u)
            traj.l2.append(l2)
            traj.hs.append(sobolev_norm(u, cfg.hs_index))
    if not check_resolution:
        return traj
    frac = top_band_fraction(traj.final)
    if frac > UNDER_RESOLVED_FRACTION:
        traj.under_resolved = True
        msg = f"top dyadic band holds {frac:.2e} of the energy at t={traj.times[-1]:.4g}"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        log.warning(msg)
    return traj


def duhamel_part(traj: Trajectory, f: SpectralField, p: DispersionParams) -> list[SpectralField]:
    """``v(t) = u(t) - S(t) f`` along the recorded snapshots."""
    return [u - free_evolution(f, t, p) for t, u in zip(traj.times, traj.states)]


@dataclass
class KdvLimitTable:
    gammas: list[float]
    errors: list[float]

    @property
    def monotone(self) -> bool:
        """Errors nonincreasing as gamma decreases."""
        order = np.argsort(self.gammas)[::-1]
        e = np.asarray(self.errors)[order]
        return bool(np.all(np.diff(e) <= 0))

    @property
    def strictly_decreasing(self) -> bool:
        order = np.argsort(self.gammas)[::-1]
        e = np.asarray(self.errors)[order]
        return bool(np.all(np.diff(e) < 0))

    def rows(self):
        return list(zip(self.gammas, self.errors))


def kdv_limit_study(f: SpectralField, gamma_list, cfg: EvolutionConfig) -> KdvLimitTable:
    """``||u_gamma(T) - u_0(T)||_{L2}`` where ``u_0`` solves KdV (rotation term dropped)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ref = evolve(f, replace(cfg, params=replace(cfg.params, gamma=0.0))).final
        errors = []
        for g in gamma_list:
            if g < 0:
                raise ValueError("gamma_list entries must be >= 0")
            if g == 0:
                errors.append(0.0)
                continue
            u = evolve(f, replace(cfg, params=replace(cfg.params, gamma=float(g)))).final
            errors.append(sobolev_norm(u - ref, 0.0))
    return KdvLimitTable([float(g) for g in gamma_list], errors)


def temporal_order(f: SpectralField, p: DispersionParams, horizon_T: float, dts) -> tuple[list[float], list[float]]:
    """
    Errors at ``T`` against a reference at ``min(dts) / 8`` and the observed
    orders between consecutive step sizes.
    """
    dts = sorted(dts, reverse=True)

    def final(dt):
        cfg = EvolutionConfig(params=p, dt=dt, horizon_T=horizon_T, record_every=10**9)
        return evolve(f, cfg, check_resolution=False).final

    ref = final(dts[-1] / 8.0)
    scale = max(sobolev_norm(ref, 0.0), 1e-300)
    errs = [sobolev_norm(final(dt) - ref, 0.0) / scale for dt in dts]
    orders = []
    for (d1, e1), (d2, e2) in zip(zip(dts, errs), zip(dts[1:], errs[1:])):
        orders.append(math.log(e1 / e2) / math.log(d1 / d2) if e1 > 0 and e2 > 0 else float("nan"))
    return errs, orders
