import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wgoptomech.core import ModelParams, potential_hermitian
from wgoptomech.errors import BelowThreshold, NoClassicalRegion
from wgoptomech.quasiclassics import (bs_phase, count_minima_pairs, integer_crossings,
                                      localized_energy, minima_structure, phase_map,
                                      phase_values, potential_minimum, tan_roots, thresholds,
                                      turning_point)

REF = ModelParams()
BARE = ModelParams(gamma0=0.0)


def bisect(f, a, b, tol=1e-13):
    fa = f(a)
    while b - a > tol:
        m = 0.5 * (a + b)
        if (f(m) > 0) == (fa > 0):
            a, fa = m, f(m)
        else:
            b = m
    return 0.5 * (a + b)


def gauss_panels(f, a, b, panels=10_000, order=8):
    s, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
    x = (mid[:, None] + half[:, None] * s[None, :]).ravel()
    return float(np.sum(f(x).reshape(panels, order) * w[None, :] * half[:, None]))


def test_turning_point_parabola():
    for e in (0.5, 3.0, 17.0):
        assert turning_point(e, BARE) == pytest.approx(math.sqrt(2 * e), abs=1e-11)


def test_turning_point_shifted_parabola():
    p = ModelParams(eta=0.0)
    assert turning_point(9.0, p) == pytest.approx(math.sqrt(10.0), abs=1e-11)


def test_turning_point_at_central_value():
    p = ModelParams(eta=2.0)
    f = lambda x: x * x / 2 + 4 * np.cos(2 * x) - 4
    # first sign change of f on x > 0 found by a fine independent scan
    xs = np.arange(1e-6, 10, 1e-4)
    i = np.flatnonzero(np.sign(f(xs[:-1])) != np.sign(f(xs[1:])))[0]
    ref = bisect(f, xs[i], xs[i + 1])
    assert turning_point(4.0, p) == pytest.approx(ref, abs=1e-10)


def test_no_classical_region():
    with pytest.raises(NoClassicalRegion):
        turning_point(-5.0, REF.with_(eta=2.0))
    with pytest.raises(NoClassicalRegion):
        bs_phase(-5.0, REF.with_(eta=2.0))


def test_bare_phase_integers():
    for m in range(6):
        assert bs_phase(m + 0.5, BARE) == pytest.approx(m, abs=1e-5)


def test_shifted_phase_integers():
    p = ModelParams(eta=0.0)
    for m in range(6):
        assert bs_phase(m + 4.5, p) == pytest.approx(m, abs=1e-5)


def test_bare_phase_linear():
    es = np.linspace(1, 40, 40)
    assert max(abs(bs_phase(e, BARE) - (e - 0.5)) for e in es) < 1e-6


def test_phase_against_gauss_panels():
    p = ModelParams(eta=2.0)
    xt = turning_point(20.0, p)
    kin = lambda x: np.sqrt(np.maximum(0.0, 2 * (20.0 - potential_hermitian(x, p))))
    ref = gauss_panels(kin, -xt, xt) / math.pi - 0.5
    assert bs_phase(20.0, p) == pytest.approx(ref, abs=1e-6)


def test_vectorized_phase_agrees():
    for eta in (0.7, 2.0, 3.0):
        p = REF.with_(eta=eta)
        es = np.linspace(potential_minimum(p) + 0.05, 40, 23)
        fast = phase_values(es, p)
        slow = np.array([bs_phase(e, p) for e in es])
        np.testing.assert_allclose(fast, slow, atol=1e-4)


def test_forbidden_origin_gives_minus_half():
    p = REF.with_(eta=2.0)
    assert bs_phase(0.0, p) == -0.5


@settings(max_examples=25, deadline=None)
@given(eta=st.floats(0, 4), e=st.floats(-2, 40))
def test_turning_point_solves_equation(eta, e):
    p = REF.with_(eta=eta)
    if e < potential_minimum(p):
        return
    xt = turning_point(e, p)
    assert abs(potential_hermitian(xt, p) - e) < 1e-9
    xs = np.linspace(0, xt, 400)[:-1]
    if potential_hermitian(0.0, p) < e:
        assert np.all(potential_hermitian(xs, p) < e + 1e-9)


def test_phase_monotone_between_ridges():
    for eta in (1.0, 2.0, 3.0):
        p = REF.with_(eta=eta)
        es = np.linspace(potential_hermitian(0.0, p) + 0.01, 40, 800)
        n = phase_values(es, p)
        jumps = np.diff(n)
        assert np.all(jumps > -1e-9)


def test_tan_roots():
    assert tan_roots(1) == [0.0]
    a1 = tan_roots(2)[1]
    f = lambda a: math.tan(a) - a
    ref = bisect(f, 2 * math.pi + 1e-9, 2 * math.pi + math.pi / 2 - 1e-6)
    assert a1 == pytest.approx(ref, abs=1e-10)
    assert a1 == pytest.approx(7.72525, abs=1e-5)
    roots = tan_roots(6)
    assert all(b > a for a, b in zip(roots, roots[1:]))
    for n in range(1, 6):
        seed = 2 * math.pi * n + math.pi / 2
        assert abs(roots[n] - (seed - 1 / seed)) < 2e-3
        assert math.cos(roots[n]) > 0


def test_threshold_values():
    t = thresholds(REF, 4)
    assert t[0].eta == pytest.approx(0.5) and t[0].energy == pytest.approx(4.0)
    assert t[1].eta == pytest.approx(1.395, abs=0.005)
    assert t[1].energy == pytest.approx(15.8, abs=0.2)
    assert all(b.eta > a.eta for a, b in zip(t.rows, t.rows[1:]))
    for r in t.rows[1:]:
        assert abs(r.approx_eta / r.eta - 1) < 0.01
        assert abs(r.approx_energy / r.energy - 1) < 0.01
        assert abs(4 * r.eta**2 * math.cos(r.A) - 1) < 1e-12


def test_inflection_energy_identities():
    t = thresholds(REF, 5)
    for r in t:
        assert localized_energy(r.n, r.eta, REF) == pytest.approx(r.energy, rel=1e-9)
    direct = ((2 * math.pi + math.acos(1 / 16)) ** 2 + 2) / 8
    assert localized_energy(1, 2.0, REF) == pytest.approx(direct, rel=1e-14)
    assert localized_energy(1, 2.0, REF) == pytest.approx(7.9, abs=0.1)
    with pytest.raises(BelowThreshold):
        localized_energy(1, 1.3, REF)


def test_minima_below_first_threshold():
    pts = minima_structure(REF.with_(eta=0.3))
    assert [(s.x, s.kind) for s in pts] == [(0.0, "min")]


def test_origin_classification_flips_at_eta0():
    kinds = [minima_structure(REF.with_(eta=e))[0].kind for e in (0.5 - 1e-6, 0.5, 0.5 + 1e-6)]
    assert kinds == ["min", "inflection", "max"]


def test_minima_at_eta_two():
    # roots of x = 8 sin 2x; three side minima on x > 0 (eta_0, eta_1, eta_2 < 2)
    pts = minima_structure(REF.with_(eta=2.0))
    mins = [s.x for s in pts if s.kind == "min"]
    assert len(mins) == 3
    for x in mins:
        assert abs(x - 8 * math.sin(2 * x)) < 1e-10
    np.testing.assert_allclose(mins, [1.478, 4.42, 7.282], atol=5e-3)


def test_minima_count_follows_thresholds():
    t = thresholds(REF, 6)
    for r in t.rows[:5]:
        below = count_minima_pairs(REF.with_(eta=r.eta - 1e-3))
        above = count_minima_pairs(REF.with_(eta=r.eta + 1e-3))
        assert above == below + 1 == r.n + 1
    counts = [count_minima_pairs(REF.with_(eta=e)) for e in np.arange(0.0, 3.2, 0.01)]
    assert all(b >= a for a, b in zip(counts, counts[1:]))


def test_phase_map_bare_column():
    pm = phase_map(np.array([0.5, 1.0]), np.linspace(0.25, 6.25, 61), BARE)
    assert np.allclose(pm.values[0], pm.values[1])
    wraps = sorted(r.energy for r in pm.ridges if r.kind == "wrap" and r.eta == 0.5)
    np.testing.assert_allclose(wraps, np.arange(6) + 0.5, atol=1e-9)
    assert not pm.cut_endpoints


def test_phase_map_values_and_mask():
    pm = phase_map(np.linspace(0.1, 3, 15), np.linspace(-5, 20, 40), REF)
    v = pm.values[~pm.mask]
    assert np.all((v >= 0) & (v < 1))
    assert pm.mask.any()


def test_phase_map_cut_endpoints_match_thresholds():
    pm = phase_map(np.linspace(0, 6, 300), np.linspace(-5, 40, 300), REF)
    t = thresholds(REF, 3)
    for n in (1, 2):
        close = [(e, en) for e, en, _ in pm.cut_endpoints
                 if abs(e - t[n].eta) < 0.1 and abs(en - t[n].energy) < 0.5]
        assert close, pm.cut_endpoints


def test_integer_crossings_bare():
    cr = integer_crossings(BARE, 0.1, 8.0)
    np.testing.assert_allclose([e for e, _, _ in cr], np.arange(8) + 0.5, atol=1e-8)
