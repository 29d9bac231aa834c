import math

import numpy as np
import pytest
from scipy.integrate import simpson

from ostrovsky.dispersion import DispersionParams, resonance
from ostrovsky.picard import (FamilyConstructionError, PicardFamilySpec, PiecewiseProfile, QuadratureError,
                              band_norm, big_phi, growth_scan, kernel, make_family, picard_hat,
                              picard_hat_with_error)

P0 = DispersionParams(gamma=0.0)
PNEG = DispersionParams(gamma=-1.0)
PPOS = DispersionParams()


def simpson_oracle(profile, xi, t, p, n=20001):
    """Dense fixed-grid evaluation over every ordered pair of pieces."""
    tot = 0j
    for alo, ahi, va in profile.pieces():
        for blo, bhi, vb in profile.pieces():
            lo, hi = max(alo, xi - bhi), min(ahi, xi - blo)
            if hi <= lo:
                continue
            eta = np.linspace(lo, hi, n)
            phi = np.array([big_phi(xi, e, p) for e in eta])
            tot += simpson(kernel(phi, t) * va * vb, x=eta)
    phi1 = p.beta * xi**3 - p.gamma / xi
    return xi / (2 * math.pi) * np.exp(1j * phi1 * t) * tot


def test_profile_validation():
    with pytest.raises(ValueError):
        PiecewiseProfile(((1.0, 0.5, 1j),))
    with pytest.raises(ValueError):
        PiecewiseProfile(((0.0, 1.0, 1j),))
    with pytest.raises(ValueError):
        PiecewiseProfile(((0.5, 1.0, 1.0),))
    with pytest.raises(ValueError):
        PiecewiseProfile(((0.5, 1.0, 1j), (0.8, 2.0, 1j)))
    with pytest.raises(ValueError):
        PiecewiseProfile(((0.5, 1.0, 1j),), parity="even-real")


def test_profile_mirror_is_conjugate():
    prof = PiecewiseProfile(((0.5, 1.0, 2j),))
    assert prof(0.7) == 2j and prof(-0.7) == -2j and prof(3.0) == 0


def test_profile_norm_closed_form():
    prof = PiecewiseProfile(((0.5, 1.0, 2j), (3.0, 4.0, 1j)))
    assert prof.sobolev_norm(0) == pytest.approx(math.sqrt(2 * (4 * 0.5 + 1)), rel=1e-14)
    # int_3^4 (1 + x^2) dx = 1 + 37/3
    assert prof.sobolev_norm(1.0) ** 2 == pytest.approx(2 * (4 * (0.5 + (1 - 0.125) / 3) + 1 + 37 / 3), rel=1e-12)


def test_big_phi_matches_direct_difference():
    for p in (P0, PNEG, PPOS):
        for xi, eta in ((3.0, 1.0), (17.2, 0.03), (-5.0, 2.5)):
            assert big_phi(xi, eta, p) == pytest.approx(float(resonance(xi, eta, p)), rel=1e-12)


def test_kernel_continuity():
    t = 1.3
    # the first-order correction is t |Phi t| / 2, so the bare limit only holds for tiny Phi t
    for phi in (1e-11, -3e-12, 0.0):
        assert abs(kernel(phi, t) - (-1j * t)) <= 1e-10 * t
    for phi in (7e-7, -3e-7, 1e-9):
        h = phi * t
        series = -1j * t * (1 - 0.5j * h - h * h / 6)
        assert abs(kernel(phi, t) - series) <= 1e-10 * t
    phi = 0.83
    assert kernel(phi, t) == pytest.approx((np.exp(-1j * phi * t) - 1) / phi, rel=1e-14)


def test_zero_profile():
    assert picard_hat(PiecewiseProfile(()), 3.0, 1.0, PPOS) == 0


def test_picard_argument_checks():
    prof = PiecewiseProfile(((0.5, 1.0, 1j),))
    with pytest.raises(ValueError):
        picard_hat(prof, 0.0, 1.0, PPOS)
    with pytest.raises(ValueError):
        picard_hat(prof, 1.0, 0.0, PPOS)


@pytest.mark.parametrize("p", [P0, PNEG, PPOS])
def test_reality_symmetry(p):
    prof = PiecewiseProfile(((0.2, 0.7, 1.5j), (2.0, 3.0, -0.5j)))
    for xi in (0.9, 2.4, 3.3, 5.1):
        a = picard_hat(prof, xi, 0.8, p)
        b = picard_hat(prof, -xi, 0.8, p)
        assert b == pytest.approx(np.conj(a), rel=1e-9)


@pytest.mark.parametrize("case, p", [("gamma0", P0), ("gammaNeg1", PNEG), ("gammaPos1-control", PPOS)])
def test_simpson_oracle(case, p):
    fam = make_family(PicardFamilySpec(N=16, case=case))
    for xi in (16.3, 16.75):
        got = picard_hat(fam.profile, xi, 1.0, p)
        assert got == pytest.approx(simpson_oracle(fam.profile, xi, 1.0, p), rel=1e-8)


def test_simpson_oracle_single_pair():
    prof = PiecewiseProfile(((0.1, 0.3, 1j), (5.0, 6.0, 2j)))
    got = picard_hat(prof, 5.4, 0.7, PPOS)
    assert got == pytest.approx(simpson_oracle(prof, 5.4, 0.7, PPOS), rel=1e-8)


def test_gamma0_magnitude_flat_in_N():
    # |P(f_N)(xi)| on [N, N+1] is N^(-s) up to a constant; s = 0 here
    vals = []
    for n in (16, 64, 256):
        fam = make_family(PicardFamilySpec(N=n))
        vals += [abs(picard_hat(fam.profile, n + d, 1.0, P0)) for d in (0.2, 0.5, 0.8)]
    assert max(vals) / min(vals) < 1.2


def test_quadrature_error_reported():
    prof = PiecewiseProfile(((0.1, 0.3, 1j), (5.0, 6.0, 2j)))
    _, err = picard_hat_with_error(prof, 5.4, 0.7, PPOS)
    assert err >= 0
    with pytest.raises(QuadratureError):
        picard_hat(prof, 5.4, 0.7, PPOS, tol=0.0)


def test_gamma0_window_default():
    fam = make_family(PicardFamilySpec(N=32))
    assert math.pi - 0.1 <= 3 * fam.window_lo < 3 * fam.window_hi <= math.pi + 0.1
    assert fam.eta_window[0] == pytest.approx(fam.window_lo / 32**2)
    with pytest.raises(FamilyConstructionError):
        make_family(PicardFamilySpec(N=32, window_lo=0.5, window_hi=1.2))


def test_family_norms_bounded():
    for case in ("gamma0", "gammaNeg1"):
        norms = [make_family(PicardFamilySpec(N=n, case=case)).profile.sobolev_norm(0) for n in (16, 64, 256)]
        assert max(norms) / min(norms) < 2


def test_neg1_window_is_admissible():
    for n in (16, 64, 256):
        fam = make_family(PicardFamilySpec(N=n, case="gammaNeg1"))
        k = fam.k
        assert k % 2 == 1
        lo, hi = fam.eta_window
        assert lo < hi
        assert (hi - lo) * n**2 < 1.0
        for xi in np.linspace(n - 0.02, n + 0.02, 5):
            for eta in np.linspace(lo, hi, 7):
                assert k * math.pi - 0.1 <= abs(big_phi(xi, eta, PNEG)) <= k * math.pi + 0.1


def test_neg1_wide_band_has_no_window():
    with pytest.raises(FamilyConstructionError, match="no admissible window"):
        make_family(PicardFamilySpec(N=64, case="gammaNeg1", c=0.25))


def test_control_reuses_neg1_window():
    a = make_family(PicardFamilySpec(N=32, case="gammaNeg1"))
    b = make_family(PicardFamilySpec(N=32, case="gammaPos1-control"))
    assert a.eta_window == b.eta_window
    assert b.notes


def test_spec_validation():
    with pytest.raises(ValueError):
        PicardFamilySpec(N=32, case="gamma2")
    with pytest.raises(ValueError):
        PicardFamilySpec(N=32, window_lo=1.0)
    with pytest.raises(ValueError):
        PicardFamilySpec(N=0.5)


def test_band_norm_a0_flat_gamma0():
    vals = [band_norm(make_family(PicardFamilySpec(N=n)), 0.0, 0.0, 1.0, P0)[0] for n in (16, 32, 64)]
    assert max(vals) / min(vals) < 1.1


def test_growth_scan_small():
    g = growth_scan(0.0, 0.25, [16, 32, 64], case="gamma0")
    assert g.slope > 0.15
    assert g.max_rel_error <= 1e-8
    assert len(g.rows()) == 3
    assert "lower bound" in g.metadata[0]["norm_restriction"]
    with pytest.raises(ValueError):
        growth_scan(0.0, 0.0, [16])
