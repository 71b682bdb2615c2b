"""Shared numeric tolerances, extrapolation schedule, and enumeration caps.

All tolerances used for geometric decisions live in one record so that reports
can embed the exact constants a run was produced with.
"""

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class Tolerances:
    geom: float = 1e-9          # geometric equality / invariant checks
    det: float = 1e-12          # unit-determinant validation
    unit: float = 1e-12         # unit tangent norm validation
    quant_grid: float = 1e-6    # dedup key quantization grid
    key_verify: float = 1e-9    # collision re-verification
    step_floor: float = 1e-12   # golden-section step floor (numeric oracles)
    limit_t1: float = 20.0      # Hamenstadt limit evaluation time
    limit_t2: float = 40.0      # second evaluation time (Richardson step)


@dataclass(frozen=True)
class Caps:
    elements: int = 10**7       # displacement-ball element cap
    word_length: int = 64       # word-length cap
    depth: int = 64             # limit-set recursion depth cap
    stab_words: int = 8         # witness canonicalization word bound
    mult_members: int = 10**4   # multiplicity member-search cap
    mult_stab_words: int = 12   # multiplicity stabilizer word bound


TOLERANCES = Tolerances()
CAPS = Caps()

ENUM_MARGIN = 4.0               # displacement-ball radius margin for perp search


def as_dict() -> dict:
    """Config snapshot for report provenance."""
    d = {"tolerances": asdict(TOLERANCES), "caps": asdict(CAPS)}
    d["enum_margin"] = ENUM_MARGIN
    return d
