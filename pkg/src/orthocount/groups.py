"""Discrete-group machinery: presets, word/displacement balls with matrix
deduplication, setwise stabilizers, modular reduction, critical exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _backend
from .config import CAPS, TOLERANCES
from .geom import (
    ConvexBody,
    Geodesic,
    Horoball,
    Isometry,
    Point,
    PointBody,
    apply_isometry,
    hyp_dist,
)


class GroupError(Exception):
    pass


class CirclesOverlap(GroupError):
    pass


class NonModularGroup(GroupError):
    pass


class InsufficientData(GroupError):
    pass


class BudgetExceeded(GroupError):
    """Enumeration cap hit; .partial carries the truncated result."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


# ---------------------------------------------------------------------------
# group specifications


@dataclass(frozen=True)
class SchottkyLetter:
    matrix: Isometry
    inverse_index: int
    disc_center: complex   # target disc: the letter maps everything outside its
    disc_radius: float     # source disc into this disc


@dataclass(frozen=True)
class GroupSpec:
    generators: tuple
    kind: str               # "modular" | "schottky" | "custom"
    label: str
    n: int                  # 2 or 3
    letters: tuple = ()     # schottky only
    contraction: float = 0.0    # schottky: max disc contraction per letter
    min_first_gap: float = 0.0  # schottky: min displacement bound of one letter


_S = Isometry(0, -1, 1, 0)
_T = Isometry(1, 1, 0, 1)


def preset_modular() -> GroupSpec:
    """PSL(2,Z), generated by the order-2 inversion and the unit translation."""
    return GroupSpec(
        generators=(_S, _T, _T.inverse()),
        kind="modular",
        label="modular",
        n=2,
    )


def _disc_image(g: Isometry, m, rho):
    """Image circle of |z - m| = rho under g (pole outside the closed disc)."""
    a, b, c, d = g.entries()
    cm_d = c * m + d
    den = abs(cm_d) ** 2 - abs(c) ** 2 * rho ** 2
    if den <= 0:
        raise GroupError("Moebius pole inside disc; cannot map")
    conj = (lambda x: x.conjugate()) if isinstance(cm_d, complex) else (lambda x: x)
    center = ((a * m + b) * conj(cm_d) - a * conj(c) * rho ** 2) / den
    radius = rho / abs(den)
    return center, radius


def schottky(pairings, label="schottky", n=3) -> GroupSpec:
    """Schottky group from circle pairings [((c1, r1), (c2, r2)), ...].

    Generator i is the standard inversive pairing z -> c2 - r1 r2/(z - c1),
    mapping the exterior of circle (c1, r1) onto the interior of (c2, r2).
    Free and discrete by ping-pong once the closed discs are pairwise disjoint.
    """
    discs = []
    for (c1, r1), (c2, r2) in pairings:
        discs.append((complex(c1), float(r1)))
        discs.append((complex(c2), float(r2)))
    for i in range(len(discs)):
        for j in range(i + 1, len(discs)):
            (ci, ri), (cj, rj) = discs[i], discs[j]
            if abs(ci - cj) <= ri + rj:
                raise CirclesOverlap(f"closed discs {i} and {j} are not disjoint")
    real = all(abs(c.imag) < 1e-14 for c, _ in discs) and n == 2
    gens = []
    letters = []
    for k, ((c1, r1), (c2, r2)) in enumerate(pairings):
        c1, c2, r1, r2 = complex(c1), complex(c2), float(r1), float(r2)
        if real:
            g = Isometry(c2.real, -(c1 * c2).real - r1 * r2, 1.0, -c1.real)
        else:
            g = Isometry(c2, -(c1 * c2) - r1 * r2, 1.0, -c1, n=3)
        gens.append(g)
        letters.append(SchottkyLetter(g, 2 * k + 1, c2, r2))
        letters.append(SchottkyLetter(g.inverse(), 2 * k, c1, r1))
    # contraction factor: worst disc-image shrink over admissible letter pairs
    lam = 0.0
    for i, li in enumerate(letters):
        for j, lj in enumerate(letters):
            if li.inverse_index == j:
                continue
            _, r_img = _disc_image(li.matrix, lj.disc_center, lj.disc_radius)
            lam = max(lam, r_img / lj.disc_radius)
    x0 = Point(0.0, 1.0) if real else Point((0.0, 0.0), 1.0)
    gap = min(_hull_distance_lower_bound(x0, c, r) for c, r in discs)
    return GroupSpec(
        generators=tuple(gens),
        kind="schottky",
        label=label,
        n=2 if real else 3,
        letters=tuple(letters),
        contraction=lam,
        min_first_gap=gap,
    )


def preset_schottky_symmetric(distance=3.0, radius=1.0) -> GroupSpec:
    """Rank-2 Schottky group paired across the origin: radius-`radius` circles
    centered at +-distance and +-distance*i."""
    d, r = float(distance), float(radius)
    return schottky(
        [((d, r), (-d, r)), ((d * 1j, r), (-d * 1j, r))],
        label=f"schottky_sym(d={d},r={r})",
    )


def _hull_distance_lower_bound(x0: Point, center, radius) -> float:
    """Distance from x0 to the convex hull of the disc (center, radius) on the
    boundary: sinh d = (|z0 - m|^2 + h0^2 - rho^2) / (2 rho h0), clipped at 0."""
    z0 = complex(x0.z) if x0.n == 2 else x0.z
    num = abs(z0 - center) ** 2 + x0.h ** 2 - radius ** 2
    if num <= 0:
        return 0.0
    return math.asinh(num / (2.0 * radius * x0.h))


# ---------------------------------------------------------------------------
# word balls with matrix deduplication


@dataclass
class WordBall:
    matrix_array: np.ndarray            # (m, 4) int64 / float64 / complex128
    words: Optional[list]               # generator-index tuples, or None (lazy)
    group: GroupSpec
    complete: bool = True
    warnings: list = field(default_factory=list)

    def __len__(self):
        return len(self.matrix_array)

    def isometry(self, i: int) -> Isometry:
        a, b, c, d = self.matrix_array[i]
        if np.iscomplexobj(self.matrix_array):
            return Isometry(complex(a), complex(b), complex(c), complex(d), n=3)
        return Isometry(float(a), float(b), float(c), float(d))

    def word(self, i: int):
        if self.words is not None:
            return self.words[i]
        if self.group.kind != "modular":
            return None
        a, b, c, d = (int(v) for v in self.matrix_array[i])
        return modular_word(a, b, c, d)

    def elements(self):
        """Iterate (Isometry, word, word_length) per the ball contract."""
        for i in range(len(self)):
            w = self.word(i)
            yield self.isometry(i), w, (len(w) if w is not None else -1)


class _DedupIndex:
    """Sign-canonical quantized matrix index.

    Two staggered grids at the quantization step plus a fine confirmation pass;
    near-collisions (within 10x the confirm tolerance but not within it) are
    recorded, never merged.
    """

    def __init__(self, grid=TOLERANCES.quant_grid, confirm=TOLERANCES.key_verify):
        self.grid = grid
        self.confirm = confirm
        self._cells = {}
        self.entries = []
        self.warnings = []

    def _keys(self, ent):
        flat = []
        for e in ent:
            if isinstance(e, complex):
                flat.extend((e.real, e.imag))
            else:
                flat.append(e)
        k1 = tuple(int(round(x / self.grid)) for x in flat)
        k2 = tuple(int(round(x / self.grid + 0.5)) for x in flat)
        return k1, k2

    def add(self, iso: Isometry, payload) -> bool:
        """Insert; returns False when an equal element was already present."""
        ent = iso.entries()
        k1, k2 = self._keys(ent)
        for key in (k1, k2):
            for idx in self._cells.get(key, ()):
                other = self.entries[idx][0]
                diff = max(abs(x - y) for x, y in zip(ent, other.entries()))
                if diff <= self.confirm:
                    return False
                if diff <= 10.0 * self.confirm:
                    self.warnings.append(
                        f"near-collision (diff {diff:.3e}) between stored element {idx} and candidate"
                    )
        idx = len(self.entries)
        self.entries.append((iso, payload))
        self._cells.setdefault(k1, []).append(idx)
        if k2 != k1:
            self._cells.setdefault(k2, []).append(idx)
        return True


def word_ball(G: GroupSpec, max_len: int, element_cap: int = CAPS.elements) -> WordBall:
    """All distinct group elements expressible by words of length <= max_len,
    BFS with matrix deduplication; identity carries the empty word."""
    if max_len > CAPS.word_length:
        raise BudgetExceeded(f"word length {max_len} exceeds cap {CAPS.word_length}")
    gens = list(G.generators)
    for g in G.generators:
        inv = g.inverse()
        if not any(inv.close_to(h) for h in gens):
            gens.append(inv)
    idx = _DedupIndex()
    ident = Isometry.identity(G.n)
    idx.add(ident, ())
    frontier = [(ident, ())]
    for _ in range(max_len):
        nxt = []
        for iso, word in frontier:
            for gi, g in enumerate(gens):
                cand = iso @ g
                w = word + (gi,)
                if idx.add(cand, w):
                    nxt.append((cand, w))
                    if len(idx.entries) > element_cap:
                        raise BudgetExceeded(
                            "element cap hit in word ball",
                            partial=_ball_from_entries(idx, G, complete=False),
                        )
        if not nxt:
            break
        frontier = nxt
    return _ball_from_entries(idx, G, complete=True)


def _ball_from_entries(idx: _DedupIndex, G: GroupSpec, complete: bool) -> WordBall:
    dtype = np.complex128 if G.n == 3 else np.float64
    arr = np.array([e[0].entries() for e in idx.entries], dtype=dtype)
    words = [e[1] for e in idx.entries]
    return WordBall(arr, words, G, complete=complete, warnings=list(idx.warnings))


def modular_word(a: int, b: int, c: int, d: int):
    """Word in (S=0, T=1, T^-1=2) for a PSL(2,Z) matrix, by continued fractions.

    Strips prefixes M = T^n S M' with |c| halving each step, so the word reads
    T^{n1} S T^{n2} S ... T^{n_k} S T^{b} left to right.
    """
    prefixes = []
    while c != 0:
        n = int(round(a / c))
        a1, b1 = a - n * c, b - n * d
        a, b, c, d = c, d, -a1, -b1  # S^{-1} T^{-n} M, up to sign
        prefixes.append(n)
    if a < 0:  # remaining is +-T^b
        b = -b
    letters = []
    for n in prefixes:
        letters.extend(([1] * n if n >= 0 else [2] * (-n)) + [0])
    letters.extend([1] * b if b >= 0 else [2] * (-b))
    return tuple(letters)


def evaluate_word(G: GroupSpec, word) -> Isometry:
    """Product of modular generators (S=0, T=1, T^-1=2) or G.generators indices."""
    if G.kind == "modular":
        table = {0: _S, 1: _T, 2: _T.inverse()}
    else:
        table = dict(enumerate(G.generators))
        for i, g in enumerate(G.generators):
            table.setdefault(len(G.generators) + i, g.inverse())
    out = Isometry.identity(G.n)
    for li in word:
        out = out @ table[li]
    return out


# ---------------------------------------------------------------------------
# displacement balls


def displacements_from_rows(rows: np.ndarray, x0: Point) -> np.ndarray:
    """d(x0, g x0) for an array of matrix rows (vectorized Poincare action)."""
    a, b, c, d = (rows[:, k] for k in range(4))
    z0, h0 = x0.z, x0.h
    if np.iscomplexobj(rows) or isinstance(z0, complex):
        a, b, c, d = (np.asarray(v, dtype=np.complex128) for v in (a, b, c, d))
        cz_d = c * z0 + d
        den = np.abs(cz_d) ** 2 + np.abs(c) ** 2 * h0 ** 2
        z1 = ((a * z0 + b) * np.conj(cz_d) + a * np.conj(c) * h0 ** 2) / den
    else:
        a, b, c, d = (v.astype(np.float64) for v in (a, b, c, d))
        cz_d = c * z0 + d
        den = cz_d ** 2 + c ** 2 * h0 ** 2
        z1 = ((a * z0 + b) * cz_d + a * c * h0 ** 2) / den
    h1 = h0 / den
    arg = 1.0 + (np.abs(z1 - z0) ** 2 + (h1 - h0) ** 2) / (2.0 * h1 * h0)
    return np.arccosh(np.maximum(arg, 1.0))


def enumerate_displacement_ball(
    G: GroupSpec,
    x0: Point,
    R: float,
    element_cap: int = CAPS.elements,
    word_cap: int = CAPS.word_length,
) -> WordBall:
    """Every group element g with d(x0, g x0) <= R.

    Exact for the modular preset (integer Frobenius criterion) and for Schottky
    groups (convex-hull distance pruning); heuristic two-empty-shells rule with
    a safety shell for custom groups (completeness flag cleared).
    """
    if R < 0:
        raise GroupError("radius must be nonnegative")
    if G.kind == "modular":
        return _modular_displacement_ball(G, x0, R, element_cap)
    if G.kind == "schottky":
        return _schottky_displacement_ball(G, x0, R, element_cap, word_cap)
    return _custom_displacement_ball(G, x0, R, element_cap, word_cap)


def _modular_displacement_ball(G, x0, R, element_cap) -> WordBall:
    origin = Point(0.0, 1.0)
    pad = 2.0 * hyp_dist(x0, origin)
    eff = R + pad
    truncated = False
    if 3.2 * math.exp(eff) > element_cap:
        # cap would be hit; fall back to the largest complete sub-ball
        eff = math.log(element_cap / 3.2)
        truncated = True
    norm2 = 2.0 * math.cosh(eff) + 1e-9
    try:
        rows = _backend.sl2z_ball(norm2, element_cap)
    except MemoryError as exc:
        raise BudgetExceeded(str(exc)) from exc
    if pad > 0 or truncated:
        disp = displacements_from_rows(rows, x0)
        rows = rows[disp <= R + 1e-12]
    if truncated:
        raise BudgetExceeded(
            f"element cap {element_cap} reached at radius {eff - pad:.3f} of {R:.3f}",
            partial=WordBall(rows, None, G, complete=False),
        )
    return WordBall(rows, None, G, complete=True)


def _schottky_displacement_ball(G, x0, R, element_cap, word_cap) -> WordBall:
    letters = G.letters
    dtype = np.complex128 if G.n == 3 else np.float64
    mats = [np.array(l.matrix.entries(), dtype=dtype) for l in letters]

    def compose(m1, m2):
        return np.array(
            [
                m1[0] * m2[0] + m1[1] * m2[2],
                m1[0] * m2[1] + m1[1] * m2[3],
                m1[2] * m2[0] + m1[3] * m2[2],
                m1[2] * m2[1] + m1[3] * m2[3],
            ],
            dtype=dtype,
        )

    def disp(m):
        rows = m.reshape(1, 4)
        return float(displacements_from_rows(rows, x0)[0])

    ident = np.array([1, 0, 0, 1], dtype=dtype)
    out_mats = [ident]
    out_words = [()]
    # explicit DFS stack, canonical letter order for determinism
    stack = [(ident, -1, (), 0)]
    while stack:
        m, last, word, depth = stack.pop()
        if depth >= word_cap:
            raise BudgetExceeded(
                "word cap hit in schottky ball",
                partial=WordBall(np.array(out_mats), out_words, G, complete=False),
            )
        for li in reversed(range(len(letters))):
            if last >= 0 and letters[last].inverse_index == li:
                continue
            let = letters[li]
            child = compose(m, mats[li])
            # subtree bound: orbit points of all extensions lie in the image
            # of the letter's target disc
            a, b, c, d = (complex(v) for v in m)
            giso = Isometry(a, b, c, d, n=3) if G.n == 3 else Isometry(a.real, b.real, c.real, d.real)
            center, radius = _disc_image(giso, let.disc_center, let.disc_radius)
            if _hull_distance_lower_bound(x0, center, radius) > R:
                continue
            w = word + (li,)
            if disp(child) <= R + 1e-12:
                out_mats.append(child)
                out_words.append(w)
                if len(out_mats) > element_cap:
                    raise BudgetExceeded(
                        "element cap hit in schottky ball",
                        partial=WordBall(np.array(out_mats), out_words, G, complete=False),
                    )
            stack.append((child, li, w, depth + 1))
    order = sorted(range(len(out_words)), key=lambda i: (len(out_words[i]), out_words[i]))
    arr = np.array([out_mats[i] for i in order], dtype=dtype)
    return WordBall(arr, [out_words[i] for i in order], G, complete=True)


def _custom_displacement_ball(G, x0, R, element_cap, word_cap) -> WordBall:
    gens = list(G.generators)
    for g in G.generators:
        inv = g.inverse()
        if not any(inv.close_to(h) for h in gens):
            gens.append(inv)
    idx = _DedupIndex()
    ident = Isometry.identity(G.n)
    idx.add(ident, ())
    kept = {0} if hyp_dist(x0, apply_isometry(ident, x0)) <= R else set()
    frontier = [(ident, ())]
    empty_shells = 0
    shells_done = 0
    exhausted = False
    while shells_done < word_cap:
        nxt = []
        added_in_R = 0
        for iso, word in frontier:
            for gi, g in enumerate(gens):
                cand = iso @ g
                w = word + (gi,)
                if idx.add(cand, w):
                    nxt.append((cand, w))
                    if hyp_dist(x0, apply_isometry(cand, x0)) <= R + 1e-12:
                        kept.add(len(idx.entries) - 1)
                        added_in_R += 1
                    if len(idx.entries) > element_cap:
                        raise BudgetExceeded(
                            "element cap hit in custom ball",
                            partial=_filtered_ball(idx, kept, G, complete=False),
                        )
        shells_done += 1
        if not nxt:
            exhausted = True  # finite group fully enumerated
            break
        empty_shells = empty_shells + 1 if added_in_R == 0 else 0
        if empty_shells >= 3:  # two empty shells plus one safety shell
            break
        frontier = nxt
    return _filtered_ball(idx, kept, G, complete=exhausted)


def _filtered_ball(idx, kept, G, complete) -> WordBall:
    dtype = np.complex128 if G.n == 3 else np.float64
    kept = sorted(kept)
    arr = np.array([idx.entries[i][0].entries() for i in kept], dtype=dtype).reshape(-1, 4)
    words = [idx.entries[i][1] for i in kept]
    return WordBall(arr, words, G, complete=complete, warnings=list(idx.warnings))


# ---------------------------------------------------------------------------
# setwise stabilizers and body equality


def body_equal(D1: ConvexBody, D2: ConvexBody, tol=TOLERANCES.geom) -> bool:
    if isinstance(D1, PointBody) and isinstance(D2, PointBody):
        return D1.point.close_to(D2.point, tol)
    if isinstance(D1, Horoball) and isinstance(D2, Horoball):
        if not D1.center.close_to(D2.center, tol):
            return False
        return abs(math.log(D1.level / D2.level)) <= tol
    if isinstance(D1, Geodesic) and isinstance(D2, Geodesic):
        return (D1.e1.close_to(D2.e1, tol) and D1.e2.close_to(D2.e2, tol)) or (
            D1.e1.close_to(D2.e2, tol) and D1.e2.close_to(D2.e1, tol)
        )
    return False


@dataclass(frozen=True)
class WordElement:
    iso: Isometry
    word: tuple


def detect_setwise_stabilizer(G: GroupSpec, D: ConvexBody, word_bound: int) -> list:
    """Elements of the word ball fixing D setwise, as (isometry, word) records.
    May under-report beyond word_bound; always contains the identity."""
    ball = word_ball(G, word_bound)
    out = []
    for iso, word, _ in ball.elements():
        if body_equal(apply_isometry(iso, D), D):
            out.append(WordElement(iso, word))
    for el in out:
        assert body_equal(apply_isometry(el.iso, D), D)  # re-verify post hoc
    return out


# ---------------------------------------------------------------------------
# modular fundamental-domain reduction


def reduce_to_fundamental_domain(G: GroupSpec, p: Point):
    """Standard modular reduction: returns (reduced point, isometry) with the
    reduced point satisfying |Re| <= 1/2 and |z| >= 1, isometry mapping input
    to output. Matches the batch kernel's tie-handling."""
    if G.kind != "modular":
        raise NonModularGroup("fundamental-domain reduction needs the modular preset")
    x, y = float(p.z), float(p.h)
    g = Isometry.identity(2)
    for _ in range(256):
        n = math.floor(x + 0.5)
        x -= n
        g = Isometry(1, -n, 0, 1) @ g
        r2 = x * x + y * y
        if r2 >= 1.0:
            break
        x, y = -x / r2, y / r2
        g = _S @ g
    return Point(x, y), g


def reduce_batch(x: np.ndarray, y: np.ndarray):
    """Batch modular reduction via the selected kernel backend."""
    return _backend.modular_reduce(x, y)


# ---------------------------------------------------------------------------
# critical exponent


@dataclass(frozen=True)
class ExponentEstimate:
    delta_hat: float
    confidence_halfwidth: float
    radii_used: tuple


def _weight_sigma(weight) -> float:
    """Constant-potential exponent shift encoded by `weight` (None, a float, or
    a perp.Potential with kind zero/constant)."""
    if weight is None:
        return 0.0
    if isinstance(weight, (int, float)):
        return float(weight)
    kind = getattr(weight, "kind", None)
    if kind == "zero":
        return 0.0
    if kind == "constant":
        return float(weight.sigma)
    raise GroupError("critical-exponent weighting supports zero/constant potentials")


def estimate_critical_exponent(G: GroupSpec, x0: Point, weight, R_max: float) -> ExponentEstimate:
    """Least-squares slope of log(annulus-weighted count) against the radius,
    over the last half of the unit annuli (n-1, n], n <= R_max."""
    sigma = _weight_sigma(weight)
    ball = enumerate_displacement_ball(G, x0, R_max)
    disp = displacements_from_rows(ball.matrix_array, x0)
    nmax = int(math.floor(R_max))
    radii, logs = [], []
    for k in range(1, nmax + 1):
        mask = (disp > k - 1) & (disp <= k)
        if not mask.any():
            continue
        wsum = float(np.exp(sigma * disp[mask]).sum())
        radii.append(float(k))
        logs.append(math.log(wsum))
    if len(radii) < 5:
        raise InsufficientData(f"only {len(radii)} nonzero annuli up to R={R_max}")
    half = len(radii) // 2
    xs = np.array(radii[half:])
    ys = np.array(logs[half:])
    A = np.stack([xs, np.ones_like(xs)], axis=1)
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    slope = float(coef[0])
    resid = ys - A @ coef
    k = len(xs)
    if k > 2:
        se = math.sqrt(float(resid @ resid) / (k - 2)) / math.sqrt(float(((xs - xs.mean()) ** 2).sum()))
    else:
        se = float("inf")
    return ExponentEstimate(slope, 2.0 * se, tuple(xs.tolist()))
