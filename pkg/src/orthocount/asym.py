"""Closed-form asymptotic constants for finite-volume constant-curvature
quotients: total mass of the flow-invariant measure of maximal entropy,
boundary masses of the normal-bundle (skinning) measures for cusp
neighbourhoods, points, and totally geodesic bodies, the pairwise counting
constants, and predicted counts with constant potential shifts.

The pair constant is always computed two ways: from the general composition
S^- S^+ / (delta * M_total) and from the per-pair closed form; the two must
agree to 1e-12 (audit), which guards transcription of either route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional


class AsymError(Exception):
    pass


class UnsupportedPair(AsymError):
    pass


class UnsupportedPotential(AsymError):
    pass


class ZeroExponent(AsymError):
    pass


@dataclass(frozen=True)
class ManifoldData:
    n: int                 # 2 or 3
    vol_M: float
    label: str = ""

    def __post_init__(self):
        if self.n not in (2, 3):
            raise AsymError("dimension must be 2 or 3")
        if not self.vol_M > 0:
            raise AsymError("volume must be positive")


@dataclass(frozen=True)
class FamilyData:
    kind: str              # "point" | "cusp" | "geodesic"
    vol_A: float = 1.0     # cusp neighbourhood volume, or geodesic length
    m: int = 1             # pointwise-fixer order (geodesic), stabilizer order (point)

    def __post_init__(self):
        if self.kind not in ("point", "cusp", "geodesic"):
            raise AsymError(f"unsupported family kind {self.kind!r}")
        if self.kind != "point" and not self.vol_A > 0:
            raise AsymError("volume must be positive")
        if self.m < 1:
            raise AsymError("fixer order must be >= 1")


@dataclass(frozen=True)
class Prediction:
    c: float
    delta: float
    formula_id: str
    shell_factor: Optional[float] = None
    audit_passed: bool = True


MODULAR_VOLUME = math.pi / 3.0


def sphere_volume(m: int) -> float:
    """Volume of the round unit m-sphere: 2 pi^{(m+1)/2} / Gamma((m+1)/2)."""
    if m < 0:
        raise AsymError("sphere dimension must be nonnegative")
    return 2.0 * math.pi ** ((m + 1) / 2.0) / math.gamma((m + 1) / 2.0)


def bowen_margulis_mass(M: ManifoldData) -> float:
    """Total mass 2^{n-1} Vol(S^{n-1}) Vol(M) of the measure of maximal
    entropy, with the boundary density normalized to the round sphere."""
    return 2.0 ** (M.n - 1) * sphere_volume(M.n - 1) * M.vol_M


def skinning_mass(M: ManifoldData, A: FamilyData) -> float:
    """Normal-bundle boundary mass of one family:
    cusp 2^{n-1}(n-1) Vol(A); geodesic (1/m) Vol(S^{n-2}) Vol(A) for a
    1-dimensional body; point Vol(S^{n-1})/m."""
    n = M.n
    if A.kind == "cusp":
        return 2.0 ** (n - 1) * (n - 1) * A.vol_A
    if A.kind == "geodesic":
        k = 1
        return sphere_volume(n - k - 1) * A.vol_A / A.m
    return sphere_volume(n - 1) / A.m


def cusp_volume(n: int, height: float, coarea: float) -> float:
    """Volume of the cusp neighbourhood above height h over a boundary lattice
    of coarea a: a / ((n-1) h^{n-1})."""
    if height <= 0 or coarea <= 0:
        raise AsymError("height and coarea must be positive")
    return coarea / ((n - 1) * height ** (n - 1))


def _pair_closed_form(M: ManifoldData, Am: FamilyData, Ap: FamilyData):
    """Per-pair closed form c(A-, A+) (isotropy orders divided out)."""
    n = M.n
    kinds = (Am.kind, Ap.kind)
    if kinds == ("cusp", "cusp"):
        c = 2.0 ** (n - 1) * (n - 1) * Am.vol_A * Ap.vol_A / (sphere_volume(n - 1) * M.vol_M)
        fid = "cusp-cusp"
    elif kinds == ("geodesic", "geodesic"):
        k = 1
        c = (
            sphere_volume(n - k - 1) ** 2
            / (2.0 ** (n - 1) * (n - 1) * sphere_volume(n - 1))
            * Am.vol_A
            * Ap.vol_A
            / M.vol_M
        )
        fid = "geodesic-geodesic"
    elif "point" in kinds and "cusp" in kinds:
        other = Ap if Am.kind == "point" else Am
        c = other.vol_A / M.vol_M
        fid = "point-cusp"
    elif "cusp" in kinds and "geodesic" in kinds:
        k = 1
        c = sphere_volume(n - 1 - k) * Am.vol_A * Ap.vol_A / (sphere_volume(n - 1) * M.vol_M)
        fid = "cusp-geodesic"
    elif kinds == ("point", "point"):
        c = sphere_volume(n - 1) / (2.0 ** (n - 1) * (n - 1) * M.vol_M)
        fid = "point-point"
    elif "point" in kinds and "geodesic" in kinds:
        k = 1
        c = sphere_volume(n - k - 1) * (Am.vol_A if Am.kind == "geodesic" else Ap.vol_A) / (
            2.0 ** (n - 1) * (n - 1) * M.vol_M
        )
        fid = "point-geodesic"
    else:
        raise UnsupportedPair(f"{kinds}")
    # closed forms above exclude the isotropy orders; divide them out
    c /= Am.m * Ap.m
    return c, fid


def pair_constant(M: ManifoldData, Am: FamilyData, Ap: FamilyData) -> Prediction:
    """Counting constant for the ordered pair, with the composition audit."""
    delta = float(M.n - 1)
    composed = skinning_mass(M, Am) * skinning_mass(M, Ap) / (delta * bowen_margulis_mass(M))
    closed, fid = _pair_closed_form(M, Am, Ap)
    audit = abs(composed - closed) <= 1e-12 * max(1.0, abs(composed))
    if not audit:
        raise AsymError(
            f"constant audit failed for {fid}: composition {composed!r} vs closed form {closed!r}"
        )
    return Prediction(c=composed, delta=delta, formula_id=fid, audit_passed=audit)


def predicted_count(pred: Prediction, t: float, F=None) -> float:
    """Predicted N(t): c e^{delta t} for zero potential; for a constant shift
    sigma the boundary and flow-invariant masses are unchanged while the
    growth rate becomes delta + sigma, giving c * delta/(delta+sigma) *
    e^{(delta+sigma) t}."""
    sigma = _sigma_of(F)
    if sigma == 0.0:
        return pred.c * math.exp(pred.delta * t)
    d2 = pred.delta + sigma
    if abs(d2) < 1e-15:
        raise ZeroExponent("shifted growth rate vanishes")
    return pred.c * (pred.delta / d2) * math.exp(d2 * t)


def shell_prediction(pred: Prediction, t: float, c_shell: float, F=None) -> float:
    """Predicted N(t) - N(t - c): the plain prediction scaled by
    (1 - e^{-delta_F c})."""
    sigma = _sigma_of(F)
    d2 = pred.delta + sigma
    return (1.0 - math.exp(-d2 * c_shell)) * predicted_count(pred, t, F)


def _sigma_of(F) -> float:
    if F is None:
        return 0.0
    kind = getattr(F, "kind", None)
    if kind == "zero":
        return 0.0
    if kind == "constant":
        return float(F.sigma)
    if isinstance(F, (int, float)):
        return float(F)
    raise UnsupportedPotential("predictions support zero/constant potentials only")
