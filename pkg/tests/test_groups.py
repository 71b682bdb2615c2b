"""Group machinery: presets, balls, dedup soundness, stabilizers, exponents."""

import math

import numpy as np
import pytest

from orthocount import geom as G
from orthocount import groups as GR

I_PT = G.Point(0.0, 1.0)
S = G.Isometry(0, -1, 1, 0)
T = G.Isometry(1, 1, 0, 1)


def test_modular_word_balls_against_brute_force(modular):
    assert len(GR.word_ball(modular, 1)) == 4
    assert len(GR.word_ball(modular, 2)) == 10
    # oracle: brute-force products with sign-canonical tuple dedup
    gens = [S, T, T.inverse()]
    seen = {G.Isometry.identity().entries()}
    frontier = [G.Isometry.identity()]
    for _ in range(2):
        nxt = []
        for m in frontier:
            for g in gens:
                c = m @ g
                key = tuple(round(v, 9) for v in c.entries())
                if key not in seen:
                    seen.add(key)
                    nxt.append(c)
        frontier = nxt
    assert len(seen) == 10


def test_s_squared_identity():
    assert (S @ S).close_to(G.Isometry.identity())


def test_displacement_ball_zero_radius(modular):
    ball = GR.enumerate_displacement_ball(modular, I_PT, 0.0)
    mats = set(map(tuple, ball.matrix_array.tolist()))
    assert mats == {(1, 0, 0, 1), (0, -1, 1, 0)}  # identity and the rotation fixing i


def test_displacement_ball_completeness_vs_word_filter(modular):
    R = 2.0
    ball = GR.enumerate_displacement_ball(modular, I_PT, R)
    assert ball.complete
    count = 0
    for iso, _, _ in GR.word_ball(modular, 14).elements():
        if G.hyp_dist(I_PT, G.apply_isometry(iso, I_PT)) <= R + 1e-12:
            count += 1
    assert len(ball) == count


def test_displacement_ball_monotone(modular):
    b1 = GR.enumerate_displacement_ball(modular, I_PT, 3.0)
    b2 = GR.enumerate_displacement_ball(modular, I_PT, 4.5)
    s1 = set(map(tuple, b1.matrix_array.tolist()))
    s2 = set(map(tuple, b2.matrix_array.tolist()))
    assert s1 <= s2


def test_displacement_ball_off_center(modular):
    x0 = G.Point(0.3, 2.0)
    ball = GR.enumerate_displacement_ball(modular, x0, 2.5)
    for i in range(len(ball)):
        iso = ball.isometry(i)
        assert G.hyp_dist(x0, G.apply_isometry(iso, x0)) <= 2.5 + 1e-9


def test_modular_words_evaluate_back(modular):
    ball = GR.enumerate_displacement_ball(modular, I_PT, 7.0)
    rng = np.random.default_rng(1)
    for i in rng.choice(len(ball), 100, replace=False):
        w = ball.word(int(i))
        assert GR.evaluate_word(modular, w).close_to(ball.isometry(int(i)), 1e-9)


def test_schottky_construction_and_overlap():
    sc = GR.preset_schottky_symmetric()
    assert sc.kind == "schottky" and len(sc.generators) == 2
    assert 0 < sc.contraction < 1
    with pytest.raises(GR.CirclesOverlap):
        GR.schottky([((0.0, 1.0), (1.5, 1.0))])


def test_schottky_reduced_words_never_identity(schottky_sym):
    ball = GR.word_ball(schottky_sym, 8, element_cap=10**6)
    ident = np.array([1, 0, 0, 1], dtype=complex)
    for i in range(len(ball)):
        if ball.words[i]:
            assert np.abs(ball.matrix_array[i] - ident).max() > 1e-6


def test_schottky_ball_complete_and_monotone(schottky_sym):
    x0 = G.Point((0.0, 0.0), 1.0)
    b1 = GR.enumerate_displacement_ball(schottky_sym, x0, 6.0)
    b2 = GR.enumerate_displacement_ball(schottky_sym, x0, 9.0)
    assert b1.complete and b2.complete
    w1 = set(b1.words)
    w2 = set(b2.words)
    assert w1 <= w2
    # displacement condition verified post hoc
    for i in range(len(b2)):
        assert GR.displacements_from_rows(b2.matrix_array[i : i + 1], x0)[0] <= 9.0 + 1e-9


def _canon_key(row):
    iso = G.Isometry(complex(row[0]), complex(row[1]), complex(row[2]), complex(row[3]), n=3)
    return tuple(round(v, 8) for e in iso.entries() for v in (e.real, e.imag))


def test_schottky_ball_against_word_filter(schottky_sym):
    x0 = G.Point((0.0, 0.0), 1.0)
    R = 9.0
    ball = GR.enumerate_displacement_ball(schottky_sym, x0, R)
    got = {_canon_key(row) for row in ball.matrix_array}
    wb = GR.word_ball(schottky_sym, 4, element_cap=10**6)
    for i in range(len(wb)):
        if GR.displacements_from_rows(wb.matrix_array[i : i + 1], x0)[0] <= R - 1e-9:
            assert _canon_key(wb.matrix_array[i]) in got


def test_dedup_soundness_and_sentinel():
    idx = GR._DedupIndex()
    a = G.Isometry(1.0, 0.5, 0.0, 1.0)
    assert idx.add(a, None)
    assert not idx.add(G.Isometry(1.0, 0.5 + 1e-10, 0.0, 1.0), None)  # equal within confirm
    assert idx.add(G.Isometry(1.0, 0.5 + 5e-9, 0.0, 1.0), None)  # near-collision, kept
    assert idx.warnings, "near-collision must be recorded, never merged"


def test_budget_exceeded_carries_partial(modular):
    with pytest.raises(GR.BudgetExceeded) as exc:
        GR.word_ball(modular, 12, element_cap=20)
    assert exc.value.partial is not None and len(exc.value.partial) >= 20


def test_setwise_stabilizers(modular):
    stab = GR.detect_setwise_stabilizer(modular, G.Horoball(G.INF2, 1.0), 3)
    isos = [el.iso for el in stab]
    assert any(i.close_to(T) for i in isos)
    assert any(i.close_to(T.inverse()) for i in isos)
    assert any(i.close_to(G.Isometry.identity()) for i in isos)
    A = G.Isometry(2, 1, 1, 1)
    disc = math.sqrt(5.0)
    axis = G.Geodesic(G.bp((1 - disc) / 2), G.bp((1 + disc) / 2))
    stab2 = GR.detect_setwise_stabilizer(modular, axis, 6)
    assert any(el.iso.close_to(A) for el in stab2)


def test_reduce_to_fundamental_domain(modular):
    p, g = GR.reduce_to_fundamental_domain(modular, G.Point(0.6, 1.0))
    assert p.close_to(G.Point(-0.4, 1.0)) and g.close_to(G.Isometry(1, -1, 0, 1))
    p2, g2 = GR.reduce_to_fundamental_domain(modular, G.Point(0.0, 0.1))
    assert p2.close_to(G.Point(0.0, 10.0), 1e-9)
    p3, g3 = GR.reduce_to_fundamental_domain(modular, G.Point(0.25, 3.0))
    assert p3.close_to(G.Point(0.25, 3.0)) and g3.close_to(G.Isometry.identity())
    # returned isometry always maps input to output; result in the domain
    rng = np.random.default_rng(4)
    for _ in range(200):
        q = G.Point(float(rng.uniform(-4, 4)), float(math.exp(rng.uniform(-5, 1))))
        r, g = GR.reduce_to_fundamental_domain(modular, q)
        assert G.apply_isometry(g, q).close_to(r, 1e-7)
        assert abs(r.z) <= 0.5 + 1e-9 and r.z ** 2 + r.h ** 2 >= 1 - 1e-9


def test_reduce_batch_matches_scalar(modular):
    rng = np.random.default_rng(6)
    xs = rng.uniform(-3, 3, 100)
    ys = np.exp(rng.uniform(-6, 1, 100))
    bx, by = GR.reduce_batch(xs, ys)
    for i in range(100):
        r, _ = GR.reduce_to_fundamental_domain(modular, G.Point(xs[i], ys[i]))
        assert abs(bx[i] - r.z) <= 1e-9 and abs(by[i] - r.h) <= 1e-9


def test_non_modular_reduction_rejected(schottky_sym):
    with pytest.raises(GR.NonModularGroup):
        GR.reduce_to_fundamental_domain(schottky_sym, G.Point(0.0, 1.0))


def test_critical_exponent_modular(modular):
    est = GR.estimate_critical_exponent(modular, I_PT, None, 12.0)
    assert 0.9 <= est.delta_hat <= 1.1
    est_shift = GR.estimate_critical_exponent(modular, I_PT, -0.3, 12.0)
    hw = est.confidence_halfwidth + est_shift.confidence_halfwidth
    assert est_shift.delta_hat == pytest.approx(est.delta_hat - 0.3, abs=max(3 * hw, 0.02))


def test_critical_exponent_schottky_below_one(schottky_sym):
    est = GR.estimate_critical_exponent(schottky_sym, G.Point((0.0, 0.0), 1.0), None, 24.0)
    assert est.delta_hat < 1.0


def test_critical_exponent_insufficient_data(modular):
    with pytest.raises(GR.InsufficientData):
        GR.estimate_critical_exponent(modular, I_PT, None, 3.0)


def test_body_equal_types():
    assert GR.body_equal(G.Horoball(G.INF2, 1.0), G.Horoball(G.INF2, 1.0))
    assert not GR.body_equal(G.Horoball(G.INF2, 1.0), G.Horoball(G.INF2, 2.0))
    g1 = G.Geodesic(G.bp(0.0), G.bp(1.0))
    g2 = G.Geodesic(G.bp(1.0), G.bp(0.0))
    assert GR.body_equal(g1, g2)
