"""Acceptance gate: every criterion at its stated scale and tolerance.

Run with -s to see one PASS/FAIL line per criterion; the same checks back the
CLI `selftest` command.
"""

import pytest

from orthocount import accept


def _run(fn, *args, **kwargs):
    result = fn(*args, **kwargs)
    print()
    print(result.line())
    assert result.passed, result.details
    return result


def test_criterion_1_modular_cusp_count_law():
    r = _run(accept.criterion_1_cusp_count_law)
    assert abs(r.details["ratio_Q400"] - 1.0) <= 0.05
    assert r.details["exact_counts"] and r.details["multiset_Q150"]
    assert r.details["runtime_s"] <= 120.0


def test_criterion_2_weighted_counting():
    r = _run(accept.criterion_2_weighted_law)
    assert abs(r.details["ratio"] - 1.0) <= 0.08
    assert r.details["oracle_exact"]


def test_criterion_3_constants_audit():
    _run(accept.criterion_3_constants_audit)


def test_criterion_4_axis_constant_resolution():
    r = _run(accept.criterion_4_axis_pair_constant)
    assert abs(r.details["ratio"] - 1.0) <= 0.25
    assert abs(r.details["alternative_rejected_at"] - 1.0) > 0.5
    assert r.details["supports"].startswith("mass-composition")


def test_criterion_5_feet_equidistribution():
    r = _run(accept.criterion_5_feet_equidistribution)
    assert r.details["ks_Q500"] <= 0.01
    assert r.details["pair_tv_t14"] <= 0.05


def test_criterion_6_flow_pushforward():
    r = _run(accept.criterion_6_flow_pushforward)
    assert all(v <= 0.1 for v in r.details["tv_t8"])


def test_criterion_7_creation_bound():
    r = _run(accept.criterion_7_perp_creation_bound)
    assert r.details["fitted_c0"] <= 100.0
    assert r.details["members"] >= 100


def test_criterion_8_schottky_exponents():
    r = _run(accept.criterion_8_schottky_exponents)
    assert r.details["gap"] <= 0.05
    assert r.details["pruned_equals_oracle_T10"]


def test_criterion_9_kernel_identities():
    _run(accept.criterion_9_kernel_identities)
