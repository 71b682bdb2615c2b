"""Closed-form constants and predictions."""

import math

import pytest

from orthocount import asym as A
from orthocount import perp as P

MOD = A.ManifoldData(2, math.pi / 3, "modular")


def test_sphere_volumes_exact():
    assert A.sphere_volume(0) == pytest.approx(2.0, abs=1e-15)
    assert A.sphere_volume(1) == pytest.approx(2 * math.pi, abs=1e-14)
    assert A.sphere_volume(2) == pytest.approx(4 * math.pi, abs=1e-14)


def test_bowen_margulis_masses():
    assert A.bowen_margulis_mass(MOD) == pytest.approx(4 * math.pi ** 2 / 3, abs=1e-12)
    assert A.bowen_margulis_mass(A.ManifoldData(2, 1.0)) == pytest.approx(4 * math.pi, abs=1e-12)
    assert A.bowen_margulis_mass(A.ManifoldData(3, 1.0)) == pytest.approx(16 * math.pi, abs=1e-12)


def test_skinning_masses():
    assert A.skinning_mass(A.ManifoldData(2, 1.0), A.FamilyData("cusp", 1.0)) == pytest.approx(2.0)
    L = 1.37
    assert A.skinning_mass(A.ManifoldData(2, 1.0), A.FamilyData("geodesic", L)) == pytest.approx(2 * L)
    assert A.skinning_mass(A.ManifoldData(3, 1.0), A.FamilyData("point")) == pytest.approx(4 * math.pi)


def test_cusp_volume_formula():
    assert A.cusp_volume(2, 1.0, 1.0) == pytest.approx(1.0)
    assert A.cusp_volume(3, 2.0, 3.0) == pytest.approx(3.0 / (2 * 4.0))


def test_pair_constant_modular_cusp_cusp():
    pred = A.pair_constant(MOD, A.FamilyData("cusp", 1.0), A.FamilyData("cusp", 1.0))
    assert pred.c == pytest.approx(3 / math.pi ** 2, abs=1e-12)
    assert pred.delta == 1.0 and pred.audit_passed


def test_pair_constant_point_cusp():
    pred = A.pair_constant(MOD, A.FamilyData("point"), A.FamilyData("cusp", 1.0))
    assert pred.c == pytest.approx(3 / math.pi, abs=1e-12)


def test_pair_constant_geodesic_geodesic_composition():
    lm, lp = 0.8, 1.9
    pred = A.pair_constant(MOD, A.FamilyData("geodesic", lm), A.FamilyData("geodesic", lp))
    assert pred.c == pytest.approx(3 * lm * lp / math.pi ** 2, rel=1e-12)
    # composition route, assembled by hand
    comp = (2 * lm) * (2 * lp) / (1.0 * A.bowen_margulis_mass(MOD))
    assert pred.c == pytest.approx(comp, rel=1e-14)


def test_all_supported_pairs_audit():
    kinds = [A.FamilyData("cusp", 0.7), A.FamilyData("point", m=2), A.FamilyData("geodesic", 1.1, m=1)]
    for Am in kinds:
        for Ap in kinds:
            assert A.pair_constant(MOD, Am, Ap).audit_passed


def test_predicted_count_zero_and_constant():
    pred = A.pair_constant(MOD, A.FamilyData("cusp", 1.0), A.FamilyData("cusp", 1.0))
    Q = 400
    t = 2 * math.log(Q)
    assert A.predicted_count(pred, t) == pytest.approx((3 / math.pi ** 2) * Q * Q, rel=1e-12)
    F = P.Potential.constant(-0.5)
    assert A.predicted_count(pred, t, F) == pytest.approx((3 / math.pi ** 2) * 2 * Q, rel=1e-12)
    assert A.predicted_count(pred, t, P.Potential.constant(0.0)) == A.predicted_count(pred, t)


def test_predicted_count_errors():
    pred = A.Prediction(1.0, 1.0, "x")
    with pytest.raises(A.ZeroExponent):
        A.predicted_count(pred, 1.0, P.Potential.constant(-1.0))
    with pytest.raises(A.UnsupportedPotential):
        A.predicted_count(pred, 1.0, P.Potential.custom(lambda v: 0.0))


def test_shell_factor():
    pred = A.pair_constant(MOD, A.FamilyData("cusp", 1.0), A.FamilyData("cusp", 1.0))
    t, c = 7.0, 1.3
    full = A.predicted_count(pred, t)
    assert A.shell_prediction(pred, t, c) == pytest.approx((1 - math.exp(-c)) * full, rel=1e-12)
    F = P.Potential.constant(-0.5)
    assert A.shell_prediction(pred, t, c, F) == pytest.approx(
        (1 - math.exp(-0.5 * c)) * A.predicted_count(pred, t, F), rel=1e-12
    )


def test_unsupported_pair():
    class Weird:
        kind = "banana"

    with pytest.raises(A.AsymError):
        A.FamilyData("banana")
