"""Common-perpendicular enumeration between equivariant families of convex
bodies, with double-coset deduplication, potential weights, and the counting
function N(t).

The engine normalizes every family into a standard frame (horoball at infinity
of level 1, geodesic (0, infinity) with marked point (0, 1), or the point
(0, 1)) via a fixed isometry N, and evaluates all perpendicular data from the
composed matrices  M' = N^- g (N^+)^{-1}  in closed form, vectorized over the
candidate group elements g. A record's dedup key is

    (length, canonical foot datum on D^-, canonical foot datum on D^+)

where each datum is reduced modulo its own stabilizer (translation period and
optional axis flip); the two reductions are independent, which is exactly
double-coset invariance. Quantized keys are merged by sorted scan and
re-verified at the fine tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import _backend
from .config import CAPS, ENUM_MARGIN, TOLERANCES
from .geom import (
    CommonPerp,
    ConvexBody,
    Geodesic,
    GeomError,
    Horoball,
    Isometry,
    Point,
    PointBody,
    UnitTangent,
    apply_isometry,
    bp,
    closest_point,
    common_perpendicular,
    geodesic_flow,
    hyp_dist,
    map_pair_to_zero_inf,
    normalize_horoball,
    outward_normal,
)
from .groups import (
    GroupSpec,
    body_equal,
    detect_setwise_stabilizer,
    enumerate_displacement_ball,
    modular_word,
)


class PerpError(Exception):
    pass


class GridBeyondSpectrum(PerpError):
    pass


class UnsupportedFamilyPair(PerpError):
    pass


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class Potential:
    kind: str                      # "zero" | "constant" | "custom"
    sigma: float = 0.0
    func: Optional[Callable] = None
    quadrature_step: float = 0.01
    sampled_bound: float = 0.0     # sup |F| over the construction-time samples

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def constant(cls, sigma: float):
        return cls("constant", sigma=float(sigma), sampled_bound=abs(float(sigma)))

    @classmethod
    def custom(cls, func, quadrature_step=0.01):
        # record a sampled bound; custom potentials must stay bounded
        samples = []
        for x in (-2.0, -0.5, 0.0, 0.7, 1.9):
            for h in (0.2, 1.0, 4.0):
                for d in ((0.0, 1.0), (0.0, -1.0), (h, 0.0)):
                    samples.append(abs(float(func(UnitTangent(Point(x, h), d)))))
        return cls("custom", func=func, quadrature_step=float(quadrature_step),
                   sampled_bound=max(samples))


ZERO_POTENTIAL = Potential.zero()


def potential_integral(F: Potential, v: UnitTangent, ell: float) -> float:
    """Integral of F along the orbit segment of length ell starting at v.

    Exact for zero/constant; composite midpoint quadrature with one
    step-halving Richardson improvement for custom potentials.
    """
    if ell <= 0:
        raise PerpError("integration length must be positive")
    if F.kind == "zero":
        return 0.0
    if F.kind == "constant":
        return F.sigma * ell

    def midpoint(step):
        k = max(1, int(math.ceil(ell / step)))
        h = ell / k
        return h * sum(F.func(geodesic_flow(v, (i + 0.5) * h)) for i in range(k))

    i1 = midpoint(F.quadrature_step)
    i2 = midpoint(F.quadrature_step / 2.0)
    return i2 + (i2 - i1) / 3.0


# ---------------------------------------------------------------------------
# equivariant families


@dataclass(frozen=True)
class EquivariantFamily:
    """Base convex body + stabilizer generators + canonicalization rule.

    frame maps the base body to its standard position; period is the in-frame
    stabilizer translation (boundary shift for cusps, axis translation length
    for geodesics); flip_s0 is set when the stabilizer reverses the axis
    (the in-frame flip acts on arclength by s -> flip_s0 - s).
    """

    base: ConvexBody
    stabilizer: tuple
    kind: str                   # "cusp" | "axis" | "point"
    label: str
    frame: Isometry
    period: float = 0.0
    flip_s0: Optional[float] = None
    range_radius: float = 0.0
    stabilizer_word_bound: int = 0

    def datum_width(self) -> int:
        return {"cusp": 1, "axis": 2, "point": 2}[self.kind]


def _frame_origin(n: int) -> Point:
    return Point(0.0 if n == 2 else (0.0, 0.0), 1.0)


def make_cusp_family(G: GroupSpec, base: Horoball, stabilizer=None, label="cusp") -> EquivariantFamily:
    """Horoball family; stabilizer defaults to the unit translation for the
    modular preset with center infinity."""
    if stabilizer is None:
        if G.kind == "modular" and not base.center.finite:
            stabilizer = (Isometry(1, 1, 0, 1),)
        else:
            stabilizer = tuple(
                el.iso for el in detect_setwise_stabilizer(G, base, 4) if not el.iso.close_to(Isometry.identity(G.n))
            )
    frame = normalize_horoball(base)
    periods = []
    for sgen in stabilizer:
        conj = frame @ sgen @ frame.inverse()
        a, b, c, d = conj.entries()
        if abs(c) > 1e-9 or abs(abs(a) - 1) > 1e-9:
            raise PerpError("cusp stabilizer generator is not an in-frame translation")
        periods.append(abs(b / a))
    period = min(p for p in periods if p > 1e-12) if periods else 0.0
    if period == 0.0:
        raise PerpError("cusp family needs a nontrivial translation stabilizer")
    x0 = _frame_origin(base.center.n)
    inv = frame.inverse()
    corners = [apply_isometry(inv, Point(0.0, 1.0)), apply_isometry(inv, Point(period, 1.0))]
    rr = max(hyp_dist(x0, c) for c in corners)
    return EquivariantFamily(base, tuple(stabilizer), "cusp", label, frame, period, None, rr)


def make_axis_family(G: GroupSpec, A: Isometry, word_bound: int = 6, label="axis") -> EquivariantFamily:
    """Geodesic family along the axis of a hyperbolic element A; the setwise
    stabilizer (translations and a possible flip) is detected by word search."""
    a, b, c, d = A.entries()
    tr = a + d
    if abs(tr) <= 2.0 + 1e-12 or abs(c) < 1e-14:
        raise PerpError("axis family needs a hyperbolic element with c != 0")
    disc = math.sqrt(tr * tr - 4.0)
    z1 = ((a - d) - disc) / (2 * c)
    z2 = ((a - d) + disc) / (2 * c)
    base = Geodesic(bp(min(z1, z2)), bp(max(z1, z2)))
    stab = detect_setwise_stabilizer(G, base, word_bound)
    x0 = _frame_origin(2)
    marked = closest_point(base, x0)
    n0 = map_pair_to_zero_inf(base.e1, base.e2)
    hstar = apply_isometry(n0, marked).h
    rt = math.sqrt(hstar)
    frame = Isometry(1.0 / rt, 0.0, 0.0, rt) @ n0
    period = None
    flip_s0 = None
    keep = []
    for el in stab:
        conj = frame @ el.iso @ frame.inverse()
        ca, cb, cc, cd = conj.entries()
        if abs(cb) < 1e-9 and abs(cc) < 1e-9:  # in-frame dilation z -> (a/d) z
            t = abs(2.0 * math.log(abs(ca)))
            if t > 1e-9:
                period = t if period is None else min(period, t)
                keep.append(el.iso)
        elif abs(ca) < 1e-9 and abs(cd) < 1e-9:  # in-frame flip z -> (b/c)/z
            mu = abs(cb / cc)
            flip_s0 = math.log(mu)
            keep.append(el.iso)
    if period is None:
        raise PerpError("axis stabilizer contains no translation up to the word bound")
    rr = hyp_dist(x0, marked) + period / 2.0 + 1e-9
    return EquivariantFamily(base, tuple(keep), "axis", label, frame, period, flip_s0, rr, word_bound)


def make_point_family(G: GroupSpec, p: Point, label="point") -> EquivariantFamily:
    if p.n == 2:
        frame = Isometry(1.0 / math.sqrt(p.h), -p.z / math.sqrt(p.h), 0.0, math.sqrt(p.h))
    else:
        rt = math.sqrt(p.h)
        frame = Isometry(complex(1.0 / rt), complex(-p.z / rt), 0j, complex(rt), n=3)
    stab = [
        el.iso
        for el in detect_setwise_stabilizer(G, PointBody(p), 4)
        if not el.iso.close_to(Isometry.identity(G.n))
    ]
    x0 = _frame_origin(p.n)
    return EquivariantFamily(PointBody(p), tuple(stab), "point", label, frame, 0.0, None, hyp_dist(x0, p))


def conjugate_family(fam: EquivariantFamily, g: Isometry, G: GroupSpec) -> EquivariantFamily:
    """The same equivariant family presented from the translate g(base): the
    frame, period, and flip transport exactly; only the range radius of the
    canonical piece is recomputed in the new chart."""
    base = apply_isometry(g, fam.base)
    stab = tuple(g @ s @ g.inverse() for s in fam.stabilizer)
    frame = fam.frame @ g.inverse()
    x0 = _frame_origin(G.n)
    inv = frame.inverse()
    if fam.kind == "cusp":
        corners = [apply_isometry(inv, Point(0.0, 1.0)), apply_isometry(inv, Point(fam.period, 1.0))]
        rr = max(hyp_dist(x0, c) for c in corners)
    elif fam.kind == "axis":
        rr = hyp_dist(x0, apply_isometry(inv, Point(0.0, 1.0))) + fam.period / 2.0 + 1e-9
    else:
        rr = hyp_dist(x0, base.point)
    return EquivariantFamily(
        base, stab, fam.kind, fam.label, frame, fam.period, fam.flip_s0, rr, fam.stabilizer_word_bound
    )


# ---------------------------------------------------------------------------
# records and spectra


@dataclass(frozen=True)
class PerpRecord:
    perp: CommonPerp
    witness: Isometry
    coset_key: tuple
    weight: float
    multiplicity: Fraction


class _RecordView:
    """Sorted list-like view materializing PerpRecord objects lazily."""

    def __init__(self, spectrum):
        self._s = spectrum

    def __len__(self):
        return len(self._s.lengths)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return self._s.record(i)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


class OrthoSpectrum:
    """Deduplicated multiset of common-perpendicular records sorted by length."""

    def __init__(self, lengths, feet, witnesses, keys, weights, mults, t_max, complete, group, diagnostics):
        self.lengths = lengths            # (m,) float64, nondecreasing
        self.feet = feet                  # (m, 4): foot-(z), foot-(h), foot+(z), foot+(h)
        self.witnesses = witnesses        # (m, 4) matrix rows
        self.keys = keys                  # list of tuples
        self.weights = weights            # (m,) float64
        self.mults = mults                # (m,) float64
        self.t_max = float(t_max)
        self.completeness_flag = bool(complete)
        self.group = group
        self.diagnostics = dict(diagnostics)
        if len(lengths):
            assert (lengths > 0).all() and (np.diff(lengths) >= -1e-12).all()

    def __len__(self):
        return len(self.lengths)

    @property
    def records(self):
        return _RecordView(self)

    def record(self, i: int) -> PerpRecord:
        fmz, fmh, fpz, fph = self.feet[i]
        n2 = abs(complex(fmz).imag) < 1e-300 and self.group.n == 2
        fm = Point(float(fmz.real) if n2 else complex(fmz), float(fmh.real))
        fp = Point(float(fpz.real) if n2 else complex(fpz), float(fph.real))
        from .geom import _perp_from_feet

        perp = _perp_from_feet(fm, fp)
        perp = CommonPerp(float(self.lengths[i]), perp.v_minus, perp.v_plus, fm, fp)
        w = self.witnesses[i]
        if np.iscomplexobj(self.witnesses):
            iso = Isometry(complex(w[0]), complex(w[1]), complex(w[2]), complex(w[3]), n=3)
        else:
            iso = Isometry(float(w[0]), float(w[1]), float(w[2]), float(w[3]))
        return PerpRecord(perp, iso, self.keys[i], float(self.weights[i]), Fraction(self.mults[i]).limit_denominator(10**6))

    def witness_word_str(self, i: int) -> str:
        if self.group.kind == "modular":
            a, b, c, d = (int(round(float(x))) for x in self.witnesses[i])
            return _compact_modular_word(a, b, c, d)
        return "?"

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("length,weight,multiplicity,coset_key,witness_word\n")
            for i in range(len(self)):
                key = "|".join(str(k) for k in self.keys[i])
                fh.write(
                    f"{self.lengths[i]:.17g},{self.weights[i]:.17g},{self.mults[i]:.17g},"
                    f"{key},{self.witness_word_str(i)}\n"
                )


def _compact_modular_word(a, b, c, d) -> str:
    """Run-length S/T word, e.g. 'T2.S.T-3' (continued-fraction decomposition)."""
    runs = []
    letters = modular_word(a, b, c, d)
    i = 0
    while i < len(letters):
        li = letters[i]
        if li == 0:
            runs.append("S")
            i += 1
        else:
            j = i
            while j < len(letters) and letters[j] == li:
                j += 1
            k = j - i
            runs.append(f"T{k}" if li == 1 else f"T-{k}")
            i = j
    return ".".join(runs) if runs else "e"


# ---------------------------------------------------------------------------
# the enumeration engine


def find_common_perpendiculars(
    Fm: EquivariantFamily,
    Fp: EquivariantFamily,
    G: GroupSpec,
    t_max: float,
    margin: float = ENUM_MARGIN,
    potential: Potential = ZERO_POTENTIAL,
    workers: int = 1,
    verify: str = "sample",
    force_generic: bool = False,
) -> OrthoSpectrum:
    """Enumerate all common perpendiculars of length in (0, t_max] between the
    two families modulo their stabilizers (double cosets), sorted by length.

    Tangencies (length 0) are skipped and counted in diagnostics. The modular
    cusp pair takes a canonical-witness fast path; everything else iterates a
    displacement ball of radius t_max + range(-) + range(+) + margin.
    """
    if t_max <= 0:
        raise PerpError("t_max must be positive")
    # fast path: boundary translation lattice of step 1 at infinity on both
    # sides (the in-frame period is translation/level)
    fast = (
        not force_generic
        and G.kind == "modular"
        and Fm.kind == "cusp"
        and Fp.kind == "cusp"
        and not Fm.base.center.finite
        and not Fp.base.center.finite
        and abs(Fm.period * Fm.base.level - 1.0) < 1e-12
        and abs(Fp.period * Fp.base.level - 1.0) < 1e-12
    )
    if fast:
        spec = _cusp_fast_path(Fm, Fp, G, t_max)
    else:
        spec = _generic_path(Fm, Fp, G, t_max, margin, workers)
    _fill_weights(spec, potential)
    if verify != "off":
        _verify_records(spec, Fm, Fp, verify)
    return spec


def _cusp_fast_path(Fm, Fp, G, t_max) -> OrthoSpectrum:
    sm, sp = Fm.base.level, Fp.base.level
    # length of the perpendicular from Horoball(inf, sm) to g Horoball(inf, sp),
    # g = [[a,b],[c,d]]: the image ball has diameter 1/(c^2 sp), so
    # ell = log(sm sp c^2); tangency at c^2 sm sp = 1
    c_max = math.floor(math.sqrt(math.exp(t_max) / (sm * sp) + 1e-9))
    rows = _backend.sl2z_cusp_cosets(c_max)
    a = rows[:, 0].astype(np.float64)
    c = rows[:, 2].astype(np.float64)
    ell = np.log(sm * sp) + 2.0 * np.log(c)
    tangent = np.abs(ell) <= TOLERANCES.geom
    keep = (ell > TOLERANCES.geom) & (ell <= t_max + 1e-12)
    n_tangent = int(tangent.sum())
    tangent_list = rows[tangent].tolist()
    rows, a, c, ell = rows[keep], a[keep], c[keep], ell[keep]
    d = rows[:, 3].astype(np.float64)
    x = a / c
    feet = np.stack(
        [x.astype(np.complex128), np.full_like(x, sm).astype(np.complex128),
         x.astype(np.complex128), (1.0 / (c * c * sp)).astype(np.complex128)],
        axis=1,
    )
    datp = np.mod(-d / c, 1.0)
    order = np.lexsort((datp, x, ell))
    rows, ell, feet, x, datp = rows[order], ell[order], feet[order], x[order], datp[order]
    keys = [
        (int(round(rows[i, 2])), int(round(rows[i, 0])))
        for i in range(len(rows))
    ]
    m = len(ell)
    diag = {
        "path": "cusp_fast",
        "tangencies": n_tangent,
        "tangency_witnesses": tangent_list,
        "c_max": c_max,
        "backend": _backend.backend_name(),
    }
    return OrthoSpectrum(
        ell, feet, rows, keys, np.ones(m), np.ones(m), t_max, True, G, diag
    )


@dataclass
class _PairTask:
    """Plain-data description of one family pair for chunk processing."""

    kind_m: str
    kind_p: str
    frame_m: tuple
    frame_p_inv: tuple
    period_m: float
    period_p: float
    flip_m: Optional[float]
    flip_p: Optional[float]
    t_max: float


def _compose_rows(L, rows, R):
    """(2x2 const) @ rows @ (2x2 const), vectorized over matrix rows."""
    la, lb, lc, ld = L
    ra_, rb_, rc_, rd_ = R
    a, b, c, d = (rows[:, k] for k in range(4))
    a1, b1, c1, d1 = la * a + lb * c, la * b + lb * d, lc * a + ld * c, lc * b + ld * d
    return (
        a1 * ra_ + b1 * rc_,
        a1 * rb_ + b1 * rd_,
        c1 * ra_ + d1 * rc_,
        c1 * rb_ + d1 * rd_,
    )


def _apply_rows_point(a, b, c, d, z, h):
    """Vectorized Poincare action of real matrix rows on the point (z, h)."""
    cz_d = c * z + d
    den = cz_d * cz_d + c * c * h * h
    z1 = ((a * z + b) * cz_d + a * c * h * h) / den
    return z1, h / den


def _wrap(vals, period):
    return np.mod(vals, period)


def _axis_datum(s, side, period, flip_s0):
    """Canonical (s, side) modulo axis translations and the optional flip.

    Near the flip's fixed points (where the two candidates coincide up to the
    merge tolerance, including across the period wrap) the side is forced to +1
    so that float noise cannot split one double coset into two records.
    """
    s1 = _wrap(s, period)
    if flip_s0 is None:
        return s1, side
    s2 = _wrap(flip_s0 - s, period)
    d = np.abs(s2 - s1)
    d = np.minimum(d, period - d)
    tie = d <= 1e-8
    take2 = (~tie) & (s2 < s1)
    s_out = np.where(take2, s2, s1)
    side_out = np.where(tie, 1.0, np.where(take2, -side, side))
    return s_out, side_out


def _process_chunk(rows, task: _PairTask):
    """Survivor extraction for one chunk of candidate matrices; returns
    (key float columns, feet in the D^- frame, witness rows, tangent count)."""
    t = task
    a, b, c, d = _compose_rows(t.frame_m, rows.astype(np.float64), t.frame_p_inv)
    tol = TOLERANCES.geom
    tangent = 0
    if t.kind_m == "cusp" and t.kind_p == "cusp":
        mask = np.abs(c) > 1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            ell = 2.0 * np.log(np.abs(c))
        tangent = int((mask & (np.abs(ell) <= tol)).sum())
        keep = mask & (ell > tol) & (ell <= t.t_max + 1e-12)
        a, b, c, d, ell = a[keep], b[keep], c[keep], d[keep], ell[keep]
        rows = rows[keep]
        x = a / c
        datm = _wrap(x, t.period_m)[:, None]
        datp = _wrap(-d / c, t.period_p)[:, None]
        fm = np.stack([x, np.ones_like(x)], axis=1)
        fp = np.stack([x, 1.0 / (c * c)], axis=1)
    elif t.kind_m == "cusp" and t.kind_p == "axis":
        with np.errstate(divide="ignore", invalid="ignore"):
            e1 = np.where(np.abs(d) > 1e-300, b / d, np.sign(b) * 1e300)
            e2 = np.where(np.abs(c) > 1e-300, a / c, np.sign(a) * 1e300)
        r = np.abs(e2 - e1) / 2.0
        finite = (np.abs(e1) < 1e200) & (np.abs(e2) < 1e200)
        with np.errstate(divide="ignore", invalid="ignore"):
            ell = -np.log(r)
        tangent = int((finite & (np.abs(ell) <= tol)).sum())
        keep = finite & (ell > tol) & (ell <= t.t_max + 1e-12)
        a, b, c, d, ell, e1, e2, r = (v[keep] for v in (a, b, c, d, ell, e1, e2, r))
        rows = rows[keep]
        x = (e1 + e2) / 2.0
        datm = _wrap(x, t.period_m)[:, None]
        # pull the arrival foot back to the D^+ frame: arc coordinate + side
        zp, hp = _apply_rows_point(d, -b, -c, a, x, r)
        sp = np.log(np.maximum(hp, 1e-300))
        sidep = np.sign(_apply_rows_point(d, -b, -c, a, x, np.ones_like(x))[0])
        sp, sidep = _axis_datum(sp, sidep, t.period_p, t.flip_p)
        datp = np.stack([sp, sidep], axis=1)
        fm = np.stack([x, np.ones_like(x)], axis=1)
        fp = np.stack([x, r], axis=1)
    elif t.kind_m == "axis" and t.kind_p == "cusp":
        mask = np.abs(c) > 1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = a / c
            delta = 1.0 / (c * c)
            ell = np.log(2.0 * np.abs(xc) / delta)
        finite = mask & (np.abs(xc) > 1e-300) & (np.abs(xc) < 1e200)
        tangent = int((finite & (np.abs(ell) <= tol)).sum())
        keep = finite & (ell > tol) & (ell <= t.t_max + 1e-12)
        a, b, c, d, ell, xc, delta = (v[keep] for v in (a, b, c, d, ell, xc, delta))
        rows = rows[keep]
        s = np.log(np.abs(xc))
        side = np.sign(xc)
        sm_, sidem = _axis_datum(s, side, t.period_m, t.flip_m)
        datm = np.stack([sm_, sidem], axis=1)
        rho = delta / 2.0
        fpx = xc * (xc * xc - rho * rho) / (xc * xc + rho * rho)
        fpy = 2.0 * rho * xc * xc / (xc * xc + rho * rho)
        zp, _hp = _apply_rows_point(d, -b, -c, a, fpx, np.maximum(fpy, 1e-300))
        datp = _wrap(zp, t.period_p)[:, None]
        fm = np.stack([np.zeros_like(xc), np.abs(xc)], axis=1)
        fp = np.stack([fpx, fpy], axis=1)
    elif t.kind_m == "axis" and t.kind_p == "axis":
        with np.errstate(divide="ignore", invalid="ignore"):
            e1 = np.where(np.abs(d) > 1e-300, b / d, np.sign(b) * 1e300)
            e2 = np.where(np.abs(c) > 1e-300, a / c, np.sign(a) * 1e300)
        finite = (np.abs(e1) < 1e200) & (np.abs(e2) < 1e200)
        lo = np.minimum(np.abs(e1), np.abs(e2))
        hi = np.maximum(np.abs(e1), np.abs(e2))
        disjoint = finite & (e1 * e2 > 0) & (lo > 1e-300)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            u = np.sqrt(hi / np.maximum(lo, 1e-300))
            ell = np.where(u > 1.0, np.log((u + 1.0) / np.maximum(u - 1.0, 1e-300)), 0.0)
        tangent = int((disjoint & (np.abs(ell) <= tol)).sum())
        keep = disjoint & (ell > tol) & (ell <= t.t_max + 1e-12)
        a, b, c, d, ell, e1, e2 = (v[keep] for v in (a, b, c, d, ell, e1, e2))
        rows = rows[keep]
        side = np.sign(e1)
        H = np.sqrt(e1 * e2)
        s = np.log(H)
        sm_, sidem = _axis_datum(s, side, t.period_m, t.flip_m)
        datm = np.stack([sm_, sidem], axis=1)
        c2 = (e1 + e2) / 2.0
        r2 = np.abs(e2 - e1) / 2.0
        fpx = (c2 * c2 - r2 * r2) / c2
        fpy = r2 * np.sqrt(np.maximum(c2 * c2 - r2 * r2, 0.0)) / np.abs(c2)
        zp, hp = _apply_rows_point(d, -b, -c, a, fpx, np.maximum(fpy, 1e-300))
        sp = np.log(np.maximum(np.sqrt(zp * zp + hp * hp), 1e-300))
        zb, _ = _apply_rows_point(d, -b, -c, a, np.zeros_like(H), H)
        sidep = np.sign(zb)
        sp, sidep = _axis_datum(sp, sidep, t.period_p, t.flip_p)
        datp = np.stack([sp, sidep], axis=1)
        fm = np.stack([np.zeros_like(H), H], axis=1)
        fp = np.stack([fpx, fpy], axis=1)
    elif t.kind_m == "point" and t.kind_p == "point":
        z, h = _apply_rows_point(a, b, c, d, np.zeros(len(a)), np.ones(len(a)))
        arg = 1.0 + (z * z + (h - 1.0) ** 2) / (2.0 * h)
        ell = np.arccosh(np.maximum(arg, 1.0))
        tangent = int((ell <= tol).sum())
        keep = (ell > tol) & (ell <= t.t_max + 1e-12)
        z, h, ell = z[keep], h[keep], ell[keep]
        rows = rows[keep]
        datm = np.zeros((len(z), 0))
        datp = np.stack([z, h], axis=1)
        fm = np.stack([np.zeros_like(z), np.ones_like(z)], axis=1)
        fp = np.stack([z, h], axis=1)
    else:
        raise UnsupportedFamilyPair(f"({t.kind_m}, {t.kind_p})")
    keyf = np.concatenate([ell[:, None], datm, datp], axis=1)
    return keyf, fm, fp, rows, tangent


def _worker_entry(args):
    return _process_chunk(*args)


def _generic_path(Fm, Fp, G, t_max, margin, workers) -> OrthoSpectrum:
    if G.n != 2:
        raise UnsupportedFamilyPair("generic engine supports the plane presets")
    from .groups import BudgetExceeded

    x0 = _frame_origin(2)
    R = t_max + Fm.range_radius + Fp.range_radius + margin
    truncated = None
    try:
        ball = enumerate_displacement_ball(G, x0, R)
    except BudgetExceeded as exc:
        if exc.partial is None:
            raise
        ball = exc.partial  # finish on the truncated ball, then re-raise with it
        truncated = exc
    rows = ball.matrix_array
    if np.iscomplexobj(rows):
        raise UnsupportedFamilyPair("generic engine supports the plane presets")
    task = _PairTask(
        Fm.kind,
        Fp.kind,
        Fm.frame.entries(),
        Fp.frame.inverse().entries(),
        Fm.period,
        Fp.period,
        Fm.flip_s0,
        Fp.flip_s0,
        t_max,
    )
    chunk = 1 << 20
    slices = [rows[i : i + chunk] for i in range(0, len(rows), chunk)] or [rows]
    if workers > 1 and len(slices) > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(workers) as pool:
            parts = pool.map(_worker_entry, [(s, task) for s in slices])
    else:
        parts = [_process_chunk(s, task) for s in slices]
    keyf = np.concatenate([p[0] for p in parts])
    fm = np.concatenate([p[1] for p in parts])
    fp = np.concatenate([p[2] for p in parts])
    wit = np.concatenate([p[3] for p in parts])
    tangent = sum(p[4] for p in parts)

    periods = [0.0]
    periods += {"cusp": [Fm.period], "axis": [Fm.period, 0.0], "point": []}[Fm.kind]
    periods += {"cusp": [Fp.period], "axis": [Fp.period, 0.0], "point": [0.0, 0.0]}[Fp.kind]
    keep = _dedup_rows(keyf, np.array(periods), wit)
    keyf, fm, fp, wit = keyf[keep], fm[keep], fp[keep], wit[keep]
    order = np.lexsort(tuple(keyf[:, k] for k in reversed(range(keyf.shape[1]))))
    keyf, fm, fp, wit = keyf[order], fm[order], fp[order], wit[order]
    ell = keyf[:, 0].copy()

    # feet back in the original chart
    inv = Fm.frame.inverse().entries()
    fmz, fmh = _apply_rows_point(*(np.full(len(fm), e) for e in inv), fm[:, 0], fm[:, 1])
    fpz, fph = _apply_rows_point(*(np.full(len(fp), e) for e in inv), fp[:, 0], fp[:, 1])
    feet = np.stack([fmz, fmh, fpz, fph], axis=1).astype(np.complex128)

    grid = TOLERANCES.quant_grid
    keys = [tuple(int(round(v / grid)) for v in keyf[i]) for i in range(len(keyf))]
    m = len(ell)
    diag = {
        "path": "generic",
        "tangencies": tangent,
        "ball_size": len(rows),
        "radius": R,
        "margin": margin,
        "backend": _backend.backend_name(),
        "ball_complete": ball.complete,
    }
    spec = OrthoSpectrum(
        ell, feet, wit, keys, np.ones(m), np.ones(m), t_max, ball.complete, G, diag
    )
    if truncated is not None:
        from .groups import BudgetExceeded as BE

        raise BE(str(truncated), partial=spec)
    return spec


def _dedup_rows(keyf: np.ndarray, periods: np.ndarray, wit: np.ndarray) -> np.ndarray:
    """Indices of double-coset representatives.

    Rows are clustered hierarchically column by column: within each current
    group, values are sorted and split where the gap exceeds the merge
    tolerance. This is immune to cross-column jitter (same-coset rows agree to
    ~1e-11 while distinct records are separated by >= 1e-6 in some column, so
    a single lexicographic float sort would interleave clusters through the
    noise of earlier columns). Periodic columns are pre-rotated so that values
    within the wrap window of the period compare next to 0. Each cluster
    collapses to its lexicographically smallest witness row.
    """
    n = len(keyf)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    tol = 10.0 * TOLERANCES.key_verify
    wraptol = 1e-7
    gid = np.zeros(n, dtype=np.int64)
    for k in range(keyf.shape[1]):
        v = keyf[:, k].copy()
        P = periods[k]
        if P > 0:
            v = np.mod(v, P)
            v[v > P - wraptol] -= P
        order = np.lexsort((v, gid))
        sv, sg = v[order], gid[order]
        new = np.ones(n, dtype=bool)
        if n > 1:
            new[1:] = (sg[1:] != sg[:-1]) | (sv[1:] - sv[:-1] > tol)
        g_sorted = np.cumsum(new) - 1
        gid = np.empty(n, dtype=np.int64)
        gid[order] = g_sorted
    # canonical representative: smallest witness row within each cluster
    rank = np.lexsort(tuple(wit[:, k] for k in reversed(range(wit.shape[1]))))
    best = {}
    for idx in rank:
        g = int(gid[idx])
        if g not in best:
            best[g] = int(idx)
    return np.array(sorted(best.values()), dtype=np.int64)


def _fill_weights(spec: OrthoSpectrum, F: Potential):
    if F.kind == "zero":
        spec.weights[:] = 1.0
    elif F.kind == "constant":
        spec.weights[:] = np.exp(F.sigma * spec.lengths)
    else:
        for i in range(len(spec)):
            rec = spec.record(i)
            spec.weights[i] = math.exp(potential_integral(F, rec.perp.v_minus, rec.perp.length))
    spec.diagnostics["potential"] = F.kind


def _verify_records(spec: OrthoSpectrum, Fm, Fp, mode: str):
    """Scalar closed-form re-verification of (sampled) records."""
    m = len(spec)
    if m == 0:
        return
    if mode == "all" or m <= 64:
        idx = range(m)
    else:
        rng = np.random.default_rng(20240201)
        idx = sorted(set(range(0, m, max(1, m // 48))) | set(rng.integers(0, m, 16).tolist()))
    for i in idx:
        rec = spec.record(i)
        body_p = apply_isometry(rec.witness, Fp.base)
        perp = common_perpendicular(Fm.base, body_p)
        if abs(perp.length - rec.perp.length) > 1e-7 * max(1.0, rec.perp.length):
            raise PerpError(
                f"record {i} failed closed-form verification: {perp.length} vs {rec.perp.length}"
            )
    spec.diagnostics["verified"] = len(list(idx))


# ---------------------------------------------------------------------------
# multiplicities


def is_outward_vector(D: ConvexBody, v: UnitTangent, tol=1e-7) -> bool:
    """Whether v lies in the outer unit normal bundle of D."""
    try:
        w = outward_normal(D, v.v_plus)
    except GeomError:
        return False
    return w.close_to(v, tol)


def multiplicity(vbar: UnitTangent, family: EquivariantFamily, G: GroupSpec) -> Fraction:
    """Paper multiplicity: the number of family members (modulo the setwise
    relation) whose outer normal bundle contains the vector, divided by the
    order of the vector's stabilizer in the group."""
    ball = _member_search_ball(G, vbar)
    members = []
    hits = 0
    for i in range(len(ball)):
        iso = ball.isometry(i)
        body = apply_isometry(iso, family.base)
        if any(body_equal(body, mb) for mb in members):
            continue
        members.append(body)
        if len(members) > CAPS.mult_members:
            break
        if is_outward_vector(body, vbar):
            hits += 1
    stab_order = vector_stabilizer_order(vbar, G)
    return Fraction(hits, stab_order)


def _member_search_ball(G: GroupSpec, v: UnitTangent):
    x0 = _frame_origin(G.n)
    R = 2.0 * hyp_dist(x0, v.base) + 6.0
    return enumerate_displacement_ball(G, x0, min(R, 10.0))


def vector_stabilizer_order(v: UnitTangent, G: GroupSpec) -> int:
    """Order of the stabilizer of the unit tangent vector in the group."""
    ball = enumerate_displacement_ball(G, v.base, 1e-6)
    count = 0
    for i in range(len(ball)):
        iso = ball.isometry(i)
        if apply_isometry(iso, v).close_to(v, 1e-7):
            count += 1
    return max(count, 1)


def arc_stabilizer_order(perp: CommonPerp, G: GroupSpec) -> int:
    """Order of the subgroup fixing the perpendicular arc pointwise-endwise
    (both feet fixed); reported alongside the vector stabilizer."""
    ball = enumerate_displacement_ball(G, perp.foot_minus, 1e-6)
    count = 0
    for i in range(len(ball)):
        iso = ball.isometry(i)
        if apply_isometry(iso, perp.foot_minus).close_to(perp.foot_minus, 1e-7) and apply_isometry(
            iso, perp.foot_plus
        ).close_to(perp.foot_plus, 1e-7):
            count += 1
    return max(count, 1)


# ---------------------------------------------------------------------------
# counting


def counting_function(spec: OrthoSpectrum, F: Potential, t_grid) -> list:
    """Weighted counts N(t) = sum over records of multiplicity * e^{int F}."""
    t_grid = [float(t) for t in t_grid]
    for t in t_grid:
        if t > spec.t_max + 1e-12:
            raise GridBeyondSpectrum(f"t={t} beyond spectrum t_max={spec.t_max}")
    if F.kind == "zero":
        w = np.ones(len(spec))
    elif F.kind == "constant":
        w = np.exp(F.sigma * spec.lengths)
    else:
        w = np.array(
            [
                math.exp(potential_integral(F, spec.record(i).perp.v_minus, float(spec.lengths[i])))
                for i in range(len(spec))
            ]
        )
    w = w * spec.mults
    csum = np.concatenate([[0.0], np.cumsum(w)])
    out = []
    for t in t_grid:
        k = int(np.searchsorted(spec.lengths, t + 1e-12, side="right"))
        out.append((t, float(csum[k])))
    return out
