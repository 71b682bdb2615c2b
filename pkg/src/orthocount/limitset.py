"""Schottky limit-set machinery: orbit pieces with nested-disc pruning,
diameter-threshold counting with a power-law fit, and PPM rendering.

A piece is one coset g <generator> of the cyclic subgroup fixing a two-point
limit set (the generator's fixed pair), represented by the reduced word not
ending in that generator or its inverse. Piece diameters of the two-point
case are exact; the sub-Schottky disc-hull variant brackets diameters between
an inner two-point distance and an outer bounding-disc diameter.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .config import CAPS
from .geom import Isometry
from .groups import GroupSpec, _disc_image


class LimitSetError(Exception):
    pass


class DepthCap(LimitSetError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class InsufficientRange(LimitSetError):
    pass


@dataclass(frozen=True)
class LimitPiece:
    word: tuple                 # letter indices (empty = the subgroup itself)
    disc_center: complex        # bounding disc of the piece
    disc_radius: float
    diameter: float             # exact for two-point pieces
    diameter_lower: float = 0.0  # sub-Schottky bracket (equals diameter when exact)


@dataclass
class DiameterReport:
    T_grid: list
    counts: list
    fitted_log_c: float
    delta_hat: float
    exact: bool = True

    def to_dict(self):
        return {
            "T_grid": list(self.T_grid),
            "counts": [int(c) for c in self.counts],
            "fitted": {"log_c": self.fitted_log_c, "delta_hat": self.delta_hat,
                       "constant_is_fitted_only": True},
            "exact_diameters": self.exact,
        }


def fixed_pair(g: Isometry):
    """The two boundary fixed points of a loxodromic/hyperbolic matrix."""
    a, b, c, d = (complex(v) for v in g.entries())
    if abs(c) < 1e-14:
        raise LimitSetError("generator fixes infinity; pick a conjugate")
    disc = cmath.sqrt((a - d) ** 2 + 4 * b * c)
    z1 = ((a - d) - disc) / (2 * c)
    z2 = ((a - d) + disc) / (2 * c)
    return z1, z2


def _letters(G: GroupSpec):
    if G.kind != "schottky":
        raise LimitSetError("limit-set enumeration needs a Schottky group")
    dtype = np.complex128
    mats = [np.array(l.matrix.entries(), dtype=dtype) for l in G.letters]
    return G.letters, mats


def _mobius_c(m, z):
    return (m[0] * z + m[1]) / (m[2] * z + m[3])


def _image_disc(m, center, radius):
    iso = Isometry(complex(m[0]), complex(m[1]), complex(m[2]), complex(m[3]), n=3)
    return _disc_image(iso, center, radius)


def _compose(m1, m2):
    return np.array(
        [
            m1[0] * m2[0] + m1[1] * m2[2],
            m1[0] * m2[1] + m1[1] * m2[3],
            m1[2] * m2[0] + m1[3] * m2[2],
            m1[2] * m2[1] + m1[3] * m2[3],
        ],
        dtype=np.complex128,
    )


def _base_data(G: GroupSpec, base):
    """Fixed pair, stabilizer letter indices, and the covering discs of the
    base limit set. base is ("generator", i) or ("subgroup", (i, j, ...)).
    The generator case is exact (two-point limit set); the subgroup case is
    bracketed between the two extreme fixed points (lower) and the union of
    the subgroup's pairing discs (upper)."""
    kind, which = base
    if kind == "generator":
        i = int(which)
        g = G.generators[i]
        p1, p2 = fixed_pair(g)
        stab_letters = {2 * i, 2 * i + 1}
        discs = [((p1 + p2) / 2.0, abs(p2 - p1) / 2.0)]
        return (p1, p2), stab_letters, discs, True
    idxs = tuple(int(i) for i in which)
    stab_letters = set()
    discs = []
    pts = []
    for i in idxs:
        stab_letters |= {2 * i, 2 * i + 1}
        for li in (2 * i, 2 * i + 1):
            discs.append((G.letters[li].disc_center, G.letters[li].disc_radius))
        pts.extend(fixed_pair(G.generators[i]))
    far = max(((abs(p - q), p, q) for p in pts for q in pts), key=lambda v: v[0])
    return (far[1], far[2]), stab_letters, discs, False


def orbit_pieces(G: GroupSpec, base, threshold: float, depth_cap: int = CAPS.depth):
    """All pieces g(base limit set), one per coset of the base stabilizer,
    with diameter >= threshold, by depth-first search over reduced words with
    nested-disc pruning (children's discs are strictly smaller)."""
    if threshold <= 0:
        raise LimitSetError("threshold must be positive")
    (p1, p2), stab_letters, base_discs, exact = _base_data(G, base)
    letters, mats = _letters(G)
    out = []

    def emit(word, matrix):
        if word and word[-1] in stab_letters:
            return
        if word:
            q1, q2 = _mobius_c(matrix, p1), _mobius_c(matrix, p2)
            imgs = [_image_disc(matrix, c, r) for c, r in base_discs]
        else:
            q1, q2 = p1, p2
            imgs = list(base_discs)
        dc, dr = _enclosing_disc(imgs)
        lower = abs(q2 - q1)
        diam = lower if exact else 2.0 * dr
        if diam >= threshold:
            out.append(LimitPiece(tuple(word), dc, dr, diam, lower))

    ident = np.array([1, 0, 0, 1], dtype=np.complex128)
    emit((), ident)
    stack = [(ident, -1, (), 0)]
    while stack:
        m, last, word, depth = stack.pop()
        if depth >= depth_cap:
            raise DepthCap(f"depth cap {depth_cap} hit", partial=sorted_pieces(out))
        for li in reversed(range(len(letters))):
            if last >= 0 and letters[last].inverse_index == li:
                continue
            center, radius = _image_disc(m, letters[li].disc_center, letters[li].disc_radius)
            if 2.0 * radius < threshold:
                continue  # every piece in this subtree is smaller
            child = _compose(m, mats[li])
            w = word + (li,)
            emit(w, child)
            stack.append((child, li, w, depth + 1))
    return sorted_pieces(out)


def sorted_pieces(pieces):
    return sorted(pieces, key=lambda p: (len(p.word), p.word))


def _enclosing_disc(discs):
    """A disc containing the given discs (exact for one, conservative else)."""
    if len(discs) == 1:
        return discs[0]
    lo_re = min(c.real - r for c, r in discs)
    hi_re = max(c.real + r for c, r in discs)
    lo_im = min(c.imag - r for c, r in discs)
    hi_im = max(c.imag + r for c, r in discs)
    center = complex((lo_re + hi_re) / 2.0, (lo_im + hi_im) / 2.0)
    radius = max(abs(complex(c) - center) + r for c, r in discs)
    return center, radius


def orbit_pieces_exhaustive(G: GroupSpec, base, threshold: float, depth: int = 20):
    """Breadth-first oracle without disc pruning: expands whole levels until a
    level's discs are all below threshold (no deeper piece can then reach it)
    or the given depth is exhausted."""
    (p1, p2), stab_letters, base_discs, exact = _base_data(G, base)
    letters, mats = _letters(G)
    out = []

    def emit(word, matrix):
        if word and word[-1] in stab_letters:
            return
        q1, q2 = (_mobius_c(matrix, p1), _mobius_c(matrix, p2)) if word else (p1, p2)
        lower = abs(q2 - q1)
        if word:
            imgs = [_image_disc(matrix, c, r) for c, r in base_discs]
        else:
            imgs = list(base_discs)
        _, dr = _enclosing_disc(imgs)
        diam = lower if exact else 2.0 * dr
        if diam >= threshold:
            out.append(LimitPiece(tuple(word), 0j, 0.0, diam, lower))

    ident = np.array([1, 0, 0, 1], dtype=np.complex128)
    emit((), ident)
    level = [(ident, -1, ())]
    for _ in range(depth):
        nxt = []
        any_big = False
        for m, last, word in level:
            for li in range(len(letters)):
                if last >= 0 and letters[last].inverse_index == li:
                    continue
                center, radius = _image_disc(m, letters[li].disc_center, letters[li].disc_radius)
                child = _compose(m, mats[li])
                w = word + (li,)
                emit(w, child)
                if 2.0 * radius >= threshold:
                    any_big = True
                nxt.append((child, li, w))
        if not any_big:
            break
        level = nxt
    return sorted_pieces(out)


def diameter_counts(pieces, T_grid) -> DiameterReport:
    """Counts of pieces with diameter >= 1/T over the grid, with a power-law
    fit of log(count) against log(T); the constant is fitted only."""
    T_grid = sorted(float(T) for T in T_grid)
    if not pieces:
        raise InsufficientRange("no pieces")
    diams = np.array([p.diameter for p in pieces])
    counts = [(diams >= 1.0 / T - 1e-15).sum() for T in T_grid]
    usable = [(math.log(T), math.log(c)) for T, c in zip(T_grid, counts) if c > 0]
    if len(usable) < 3 or usable[0][1] == usable[-1][1]:
        raise InsufficientRange("count range too small for a fit")
    xs = np.array([u[0] for u in usable])
    ys = np.array([u[1] for u in usable])
    A = np.stack([xs, np.ones_like(xs)], axis=1)
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    exact = all(abs(p.diameter - p.diameter_lower) < 1e-15 for p in pieces)
    return DiameterReport([float(T) for T in T_grid], [int(c) for c in counts], float(coef[1]), float(coef[0]), exact)


# ---------------------------------------------------------------------------
# rendering


def render_ppm(pieces, resolution: int, path, bbox=None):
    """Binary P6 pixmap with each piece's bounding disc filled; deterministic
    for fixed input. bbox = (xmin, xmax, ymin, ymax) or auto from the pieces."""
    if resolution > 4096:
        raise LimitSetError("resolution capped at 4096")
    w = h = int(resolution)
    img = np.full((h, w), 255, dtype=np.uint8)
    if pieces:
        if bbox is None:
            xs = [p.disc_center.real for p in pieces]
            ys = [p.disc_center.imag for p in pieces]
            rs = [p.disc_radius for p in pieces]
            pad = max(rs) if rs else 1.0
            bbox = (min(xs) - pad, max(xs) + pad, min(ys) - pad, max(ys) + pad)
        xmin, xmax, ymin, ymax = bbox
        span = max(xmax - xmin, ymax - ymin)
        cx, cy = (xmin + xmax) / 2.0, (ymin + ymax) / 2.0
        xmin, xmax = cx - span / 2.0, cx + span / 2.0
        ymin, ymax = cy - span / 2.0, cy + span / 2.0
        px = (np.arange(w) + 0.5) / w * (xmax - xmin) + xmin
        py = (np.arange(h) + 0.5) / h * (ymax - ymin) + ymin
        X, Y = np.meshgrid(px, py)
        for p in sorted_pieces(pieces):
            mask = (X - p.disc_center.real) ** 2 + (Y - p.disc_center.imag) ** 2 <= p.disc_radius ** 2
            img[mask] = 0
    data = np.repeat(img[::-1, :, None], 3, axis=2)  # y upward
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(data.tobytes())
    return path
