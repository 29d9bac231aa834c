import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ostrovsky.dispersion import DispersionParams, ResonantRegimeError, cutoff_m, resonance
from ostrovsky.evolve import EvolutionConfig, Trajectory, evolve, rhs_nonlinear
from ostrovsky.normal_form import (b_bound_scan, compute_B, compute_NR, compute_Ntilde, compute_R, compute_w,
                                   default_nf_datum, nf_identity_residual, normal_form_terms, sharpness_family,
                                   sharpness_grid)
from ostrovsky.spectral import SpectralField, make_grid, sobolev_norm

from conftest import random_field

# small cutoffs so that a 256-mode grid has plenty of gated pairs
P = DispersionParams(cutoff_Xi0=5.0, lowhigh_ratio=20.0)
G = make_grid(8 * math.pi, 256)


def oracle(u, num, divide=True, factor=1.0):
    """Term-by-term enumeration of the m-gated bilinear sum."""
    g = u.grid
    z, n = g.zero_index, g.modes_N
    keep = g.retained()
    xi = g.wavenumbers
    out = np.zeros(n, complex)
    for a in range(n):
        if not keep[a] or abs(xi[a]) <= P.cutoff_Xi0:
            continue
        acc = 0j
        for b in range(n):
            c = a - b + z
            if not (0 <= c < n) or not keep[b] or not keep[c] or b == z or c == z:
                continue
            if not cutoff_m(xi[a], xi[b], P):
                continue
            term = num(b, c)
            if divide:
                term /= resonance(xi[a], xi[b], P)
            acc += term
        out[a] = factor * xi[a] * g.dxi / (2 * math.pi) * acc
    return out


def sparse_field(pairs):
    c = np.zeros(G.modes_N, complex)
    for k, v in pairs:
        c[G.zero_index + k] = v
        c[G.zero_index - k] = np.conj(v)
    return SpectralField(G, c)


@pytest.fixture(scope="module")
def u():
    return random_field(G, 21, band=84)


def test_compute_w(u):
    np.testing.assert_array_equal(compute_w(u).coeffs, (-rhs_nonlinear(u)).coeffs)
    assert compute_w(G.zeros()).is_zero()
    g = make_grid(2 * math.pi, 16)
    w = compute_w(SpectralField.from_function(g, np.cos))
    np.testing.assert_allclose(w.to_physical(), np.sin(2 * g.x), atol=1e-13)


def test_B_matches_oracle(u):
    c = u.coeffs
    np.testing.assert_allclose(compute_B(u, P).coeffs, oracle(u, lambda b, d: c[b] * c[d]),
                               atol=1e-12 * np.abs(compute_B(u, P).coeffs).max())


def test_Ntilde_matches_oracle(u):
    c = u.coeffs
    got = compute_Ntilde(u, P).coeffs
    np.testing.assert_allclose(got, oracle(u, lambda b, d: c[b] * c[d], divide=False, factor=1j),
                               atol=1e-12 * np.abs(got).max())


def test_NR_matches_oracle(u):
    c, w = u.coeffs, compute_w(u).coeffs
    got = compute_NR(u, P).coeffs
    np.testing.assert_allclose(got, oracle(u, lambda b, d: c[b] * w[d] + w[b] * c[d]),
                               atol=1e-12 * np.abs(got).max())


@pytest.mark.parametrize("pairs", [
    [(2, 1.0), (60, 0.5j)],
    [(1, 0.3 + 0.2j), (3, -1.0), (50, 1.0), (70, 0.25)],
])
def test_sparse_fields_match_oracle(pairs):
    f = sparse_field(pairs)
    c = f.coeffs
    w = compute_w(f).coeffs
    b = compute_B(f, P).coeffs
    nr = compute_NR(f, P).coeffs
    np.testing.assert_allclose(b, oracle(f, lambda i, j: c[i] * c[j]), atol=1e-12 * max(np.abs(b).max(), 1e-300))
    np.testing.assert_allclose(nr, oracle(f, lambda i, j: c[i] * w[j] + w[i] * c[j]),
                               atol=1e-12 * max(np.abs(nr).max(), 1e-300))


def test_B_two_mode_hand_value():
    ka, kb = 2, 60
    ua, ub = 0.7, 0.4j
    f = sparse_field([(ka, ua), (kb, ub)])
    xa, xb = ka * G.dxi, kb * G.dxi
    xi = xa + xb
    # the pair (xi_a, xi_b) and its mirror (xi_b, xi_a) both fall under m
    hand = xi * G.dxi / (2 * math.pi) * 2 * ua * ub / resonance(xi, xa, P)
    assert compute_B(f, P).coeffs[G.zero_index + ka + kb] == pytest.approx(hand, rel=1e-13)


def test_B_low_support_is_zero():
    f = sparse_field([(3, 1.0), (10, 0.5)])  # |xi| <= 2.5, sums stay below Xi0
    assert compute_B(f, P).is_zero()
    np.testing.assert_array_equal(compute_R(f, P).coeffs, rhs_nonlinear(f).coeffs)


def test_partition_exact(u):
    lhs = compute_R(u, P) + compute_Ntilde(u, P)
    np.testing.assert_allclose(lhs.coeffs, rhs_nonlinear(u).coeffs, atol=1e-12 * np.abs(rhs_nonlinear(u).coeffs).max())


def test_zero_field():
    for fn in (compute_B, compute_R, compute_NR):
        assert fn(G.zeros(), P).is_zero()


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31), lam=st.floats(0.1, 5.0))
def test_scaling_and_reality(seed, lam):
    f = random_field(G, seed, band=84)
    t1 = normal_form_terms(f, P)
    t2 = normal_form_terms(f * lam, P)
    for a, b, deg in ((t1.B, t2.B, 2), (t1.R, t2.R, 2), (t1.NR, t2.NR, 3)):
        scale = np.abs(b.coeffs).max()
        np.testing.assert_allclose(b.coeffs, lam**deg * a.coeffs, atol=1e-12 * scale)
        # Hermitian symmetry of the output means a real field
        c = a.coeffs[1:]
        assert np.max(np.abs(c - np.conj(c[::-1]))) <= 1e-12 * max(np.abs(c).max(), 1e-300)


def test_resonant_regime_refused(u):
    bad = DispersionParams(gamma=-1.0)
    with pytest.raises(ResonantRegimeError, match="resonant regime"):
        compute_B(u, bad)
    with pytest.raises(ResonantRegimeError):
        compute_NR(u, bad)


def test_residual_zero_trajectory():
    g = make_grid(100 * math.pi, 256)
    tr = evolve(g.zeros(), EvolutionConfig(dt=1e-3, horizon_T=4e-3, record_every=1))
    r = nf_identity_residual(tr, DispersionParams())
    assert np.all(r.residual == 0)


def test_residual_rejects_short_or_uneven():
    g = make_grid(10.0, 16)
    z = g.zeros()
    with pytest.raises(ValueError):
        nf_identity_residual(Trajectory([0, 1], [z, z], [0, 0], [0, 0]), P)
    with pytest.raises(ValueError):
        nf_identity_residual(Trajectory([0, 1, 3], [z, z, z], [0] * 3, [0] * 3), P)


def test_residual_second_order_small_run():
    g = make_grid(100 * math.pi, 2048)
    p = DispersionParams()
    f = default_nf_datum(g)
    res = []
    for h in (2e-3, 1e-3):
        tr = evolve(f, EvolutionConfig(dt=1e-4, horizon_T=4 * h, record_every=round(h / 1e-4)),
                    check_resolution=False)
        res.append(nf_identity_residual(tr, p).residual.max())
    assert math.log2(res[0] / res[1]) == pytest.approx(2.0, abs=0.3)


def test_sharpness_family_norm_bounded():
    for n in (16, 64, 256):
        g = sharpness_grid(n, refine=4)
        f = sharpness_family(n, g)
        # inclusive endpoints: 4 + 1 low points, 4N + 1 high points, both signs
        discrete = 2 * (n * 5 + (4 * n + 1)) * g.dxi
        assert sobolev_norm(f, 0) ** 2 == pytest.approx(discrete, rel=1e-12)
        # continuum value is 2 (N * 1/N + 1) = 4
        assert 4.0 <= discrete <= 4.6


def test_sharpness_family_checks_grid():
    with pytest.raises(ValueError):
        sharpness_family(64, make_grid(100 * math.pi, 4096))
    with pytest.raises(ValueError):
        sharpness_family(16, sharpness_grid(16), parity="odd")


def test_sharpness_grid_shape():
    g = sharpness_grid(32, refine=4, span=2)
    assert g.dxi == pytest.approx(1 / 128)
    assert g.xi_max >= 64 and (g.modes_N // 4) * g.dxi < 64


def test_bscan_zero_and_range():
    assert b_bound_scan(0.0, 0.5, [G.zeros()], P).max_ratio == 0.0
    with pytest.raises(ValueError):
        b_bound_scan(-0.8, 0.5, [G.zeros()])


def test_default_nf_datum_mean_zero():
    f = default_nf_datum(make_grid(100 * math.pi, 512))
    assert f.mean_mode == 0
