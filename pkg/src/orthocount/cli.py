"""Batch front-end: parse an experiment config, run one pipeline, and write
CSV/JSON/PPM artifacts with full provenance.

Usage:  orthocount <command> --config <path> [--out <dir>] [--workers N]
Commands: constants | spectrum | count | equidist | limitset | selftest.
Exit codes: 0 success, 1 computational error, 2 config error.

Config format: '#' comments, [section] headers, key = value lines. Lists are
comma-separated. Unknown sections or keys are rejected with their line number.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import _backend, accept, asym, config as cfgmod, geom, groups, limitset, perp, stats


class ConfigError(Exception):
    def __init__(self, message, line=None, col=None):
        where = f" (line {line}" + (f", col {col}" if col is not None else "") + ")" if line else ""
        super().__init__(message + where)
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# schema: section -> key -> (type tag, validator description)

_SCHEMA = {
    "group": {"preset": "str", "kind": "str", "circles": "floats", "matrices": "floats"},
    "family_minus": {"kind": "str", "level": "float", "matrix": "floats", "word_bound": "int", "point": "floats"},
    "family_plus": {"kind": "str", "level": "float", "matrix": "floats", "word_bound": "int", "point": "floats"},
    "potential": {"kind": "str", "sigma": "float"},
    "run": {
        "t_max": "float",
        "t_grid": "floats",
        "margin": "float",
        "workers": "int",
        "seeds": "ints",
        "verify": "str",
    },
    "equidist": {"samples": "int", "flow_time": "float", "flow_time_low": "float", "bins": "int"},
    "limitset": {"generator": "int", "T_grid": "floats", "threshold": "float", "resolution": "int"},
    "selftest": {"profile": "str"},
    "output": {"dir": "str"},
}

_RANGES = {
    ("run", "t_max"): lambda v: v > 0,
    ("run", "margin"): lambda v: v >= 0,
    ("run", "workers"): lambda v: v >= 1,
    ("family_minus", "level"): lambda v: v > 0,
    ("family_plus", "level"): lambda v: v > 0,
    ("limitset", "threshold"): lambda v: v > 0,
    ("limitset", "resolution"): lambda v: 1 <= v <= 4096,
    ("equidist", "samples"): lambda v: v >= 1,
}


@dataclass
class ExperimentConfig:
    sections: dict = field(default_factory=dict)
    text: str = ""

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def digest(self) -> str:
        return hashlib.sha256(canonical_text(self).encode()).hexdigest()[:16]


def _parse_value(kind, raw, line):
    raw = raw.strip()
    try:
        if kind == "str":
            return raw
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "floats":
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if kind == "ints":
            return tuple(int(x) for x in raw.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value {raw!r}: {exc}", line=line)
    raise ConfigError(f"unknown schema kind {kind}", line=line)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; raises ConfigError with line/column on violations."""
    sections = {}
    current = None
    for ln, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError("unterminated section header", line=ln)
            name = stripped[1:-1].strip()
            if name not in _SCHEMA:
                raise ConfigError(f"unknown section {name!r}", line=ln)
            current = name
            sections.setdefault(name, {})
            continue
        if "=" not in stripped:
            raise ConfigError("expected 'key = value'", line=ln, col=len(line) - len(line.lstrip()) + 1)
        if current is None:
            raise ConfigError("key outside any section", line=ln)
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _SCHEMA[current]:
            raise ConfigError(f"unknown key {key!r} in section [{current}]", line=ln)
        val = _parse_value(_SCHEMA[current][key], raw, ln)
        check = _RANGES.get((current, key))
        if check and not check(val):
            raise ConfigError(f"value out of range for {key!r}: {val}", line=ln)
        sections[current][key] = val
    return ExperimentConfig(sections, text)


def canonical_text(cfg: ExperimentConfig) -> str:
    """Stable re-serialization (round-trips through parse_config)."""
    out = []
    for section in _SCHEMA:
        if section not in cfg.sections:
            continue
        out.append(f"[{section}]")
        for key in _SCHEMA[section]:
            if key not in cfg.sections[section]:
                continue
            val = cfg.sections[section][key]
            if isinstance(val, tuple):
                rendered = ", ".join(_num(v) for v in val)
            elif isinstance(val, float):
                rendered = _num(val)
            else:
                rendered = str(val)
            out.append(f"{key} = {rendered}")
        out.append("")
    return "\n".join(out)


def _num(v):
    return f"{v:.17g}" if isinstance(v, float) else str(v)


# ---------------------------------------------------------------------------
# building model objects from a config


def build_group(cfg: ExperimentConfig) -> groups.GroupSpec:
    preset = cfg.get("group", "preset")
    if preset == "modular":
        return groups.preset_modular()
    if preset == "schottky_symmetric":
        return groups.preset_schottky_symmetric()
    kind = cfg.get("group", "kind")
    if kind == "schottky":
        vals = cfg.get("group", "circles")
        if not vals or len(vals) % 6 != 0:
            raise ConfigError("schottky circles need 6 numbers per pairing: cx,cy,r,cx,cy,r")
        pairs = []
        for i in range(0, len(vals), 6):
            pairs.append(((complex(vals[i], vals[i + 1]), vals[i + 2]), (complex(vals[i + 3], vals[i + 4]), vals[i + 5])))
        return groups.schottky(pairs)
    if kind == "custom":
        vals = cfg.get("group", "matrices")
        if not vals or len(vals) % 4 != 0:
            raise ConfigError("custom matrices need 4 numbers each")
        gens = tuple(geom.Isometry(*vals[i : i + 4]) for i in range(0, len(vals), 4))
        return groups.GroupSpec(generators=gens, kind="custom", label="custom", n=2)
    raise ConfigError("[group] needs preset=modular|schottky_symmetric or kind=schottky|custom")


def build_family(cfg: ExperimentConfig, section: str, G: groups.GroupSpec) -> perp.EquivariantFamily:
    kind = cfg.get(section, "kind")
    if kind == "cusp":
        level = cfg.get(section, "level", 1.0)
        return perp.make_cusp_family(G, geom.Horoball(geom.INF2, level), label=section)
    if kind == "axis":
        vals = cfg.get(section, "matrix")
        if not vals or len(vals) != 4:
            raise ConfigError(f"[{section}] axis family needs matrix = a,b,c,d")
        bound = cfg.get(section, "word_bound", 6)
        return perp.make_axis_family(G, geom.Isometry(*vals), bound, label=section)
    if kind == "point":
        vals = cfg.get(section, "point", (0.0, 1.0))
        return perp.make_point_family(G, geom.Point(vals[0], vals[1]), label=section)
    raise ConfigError(f"[{section}] needs kind = cusp|axis|point")


def build_potential(cfg: ExperimentConfig) -> perp.Potential:
    kind = cfg.get("potential", "kind", "zero")
    if kind == "zero":
        return perp.Potential.zero()
    if kind == "constant":
        return perp.Potential.constant(cfg.get("potential", "sigma", 0.0))
    raise ConfigError("[potential] supports kind = zero|constant in configs")


def family_data(fam: perp.EquivariantFamily, G: groups.GroupSpec) -> asym.FamilyData:
    """Volume data of the quotient piece for the closed-form constants."""
    if fam.kind == "cusp":
        vol = asym.cusp_volume(2, fam.base.level, fam.period * fam.base.level)
        return asym.FamilyData("cusp", vol)
    if fam.kind == "axis":
        length = fam.period / 2.0 if fam.flip_s0 is not None else fam.period
        return asym.FamilyData("geodesic", length)
    order = len(groups.enumerate_displacement_ball(G, fam.base.point, 1e-6))
    return asym.FamilyData("point", m=max(order, 1))


def _provenance(cfg: ExperimentConfig) -> dict:
    return {
        "config_digest": cfg.digest(),
        "backend": _backend.backend_name(),
        "tolerances": cfgmod.as_dict(),
        "seeds": list(cfg.get("run", "seeds", (0,))),
    }


# ---------------------------------------------------------------------------
# commands


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_constants(cfg, out_dir, workers):
    G = build_group(cfg)
    fm = build_family(cfg, "family_minus", G)
    fp = build_family(cfg, "family_plus", G)
    M = asym.ManifoldData(2, asym.MODULAR_VOLUME, "modular") if G.kind == "modular" else None
    if M is None:
        raise ConfigError("constants command supports the modular preset")
    pred = asym.pair_constant(M, family_data(fm, G), family_data(fp, G))
    payload = {
        "c": pred.c,
        "delta": pred.delta,
        "formula_id": pred.formula_id,
        "audit_passed": pred.audit_passed,
        "bowen_margulis_mass": asym.bowen_margulis_mass(M),
        "provenance": _provenance(cfg),
    }
    _write_json(os.path.join(out_dir, "constants.json"), payload)
    print(f"c = {pred.c:.12g} (delta = {pred.delta:g}, audit_passed={pred.audit_passed})")
    return 0


def _run_spectrum(cfg, workers):
    G = build_group(cfg)
    fm = build_family(cfg, "family_minus", G)
    fp = build_family(cfg, "family_plus", G)
    F = build_potential(cfg)
    t_max = cfg.get("run", "t_max")
    if t_max is None:
        raise ConfigError("[run] t_max is required")
    spec = perp.find_common_perpendiculars(
        fm,
        fp,
        G,
        t_max,
        margin=cfg.get("run", "margin", 4.0),
        potential=F,
        workers=workers,
        verify=cfg.get("run", "verify", "sample"),
    )
    return G, fm, fp, F, spec


def cmd_spectrum(cfg, out_dir, workers):
    G, fm, fp, F, spec = _run_spectrum(cfg, workers)
    path = os.path.join(out_dir, "spectrum.csv")
    spec.to_csv(path)
    meta = {
        "records": len(spec),
        "t_max": spec.t_max,
        "completeness": spec.completeness_flag,
        "diagnostics": {k: v for k, v in spec.diagnostics.items()},
        "provenance": _provenance(cfg),
    }
    _write_json(os.path.join(out_dir, "spectrum_meta.json"), meta)
    print(f"{len(spec)} records -> {path}")
    return 0


def cmd_count(cfg, out_dir, workers):
    G, fm, fp, F, spec = _run_spectrum(cfg, workers)
    if G.kind != "modular":
        raise ConfigError("count predictions support the modular preset; use spectrum otherwise")
    t_grid = cfg.get("run", "t_grid")
    if not t_grid:
        t_max = spec.t_max
        t_grid = tuple(t_max * k / 6.0 for k in range(2, 7))
    M = asym.ManifoldData(2, asym.MODULAR_VOLUME, "modular")
    pred = asym.pair_constant(M, family_data(fm, G), family_data(fp, G))
    counts = perp.counting_function(spec, F, t_grid)
    Ns = [n for _, n in counts]
    preds = [asym.predicted_count(pred, t, F) for t in t_grid]
    report = stats.make_count_report(t_grid, Ns, preds, _provenance(cfg))
    try:
        report.fitted_kappa = stats.convergence_rate(report)
    except stats.RatiosAlreadyConverged:
        report.fitted_kappa = None
    payload = report.to_dict()
    payload["prediction"] = {"c": pred.c, "delta": pred.delta, "formula_id": pred.formula_id,
                             "audit_passed": pred.audit_passed}
    payload["completeness"] = spec.completeness_flag
    _write_json(os.path.join(out_dir, "count_report.json"), payload)
    spec.to_csv(os.path.join(out_dir, "spectrum.csv"))
    print(f"N({t_grid[-1]:.6g}) = {Ns[-1]:.6g}, ratio = {report.ratios[-1]:.6g}")
    return 0


def cmd_equidist(cfg, out_dir, workers):
    G, fm, fp, F, spec = _run_spectrum(cfg, workers)
    feet = np.mod(spec.feet[:, 0].real, fm.period if fm.kind == "cusp" else 1.0)
    ks = stats.ks_uniform(feet / (fm.period if fm.kind == "cusp" else 1.0))
    rows = spec.witnesses
    payload = {"ks_feet": ks, "n_records": len(spec), "provenance": _provenance(cfg)}
    if fm.kind == "cusp" and fp.kind == "cusp" and not np.iscomplexobj(rows):
        xp = np.mod(-rows[:, 3].astype(np.float64) / rows[:, 2].astype(np.float64), 1.0)
        payload["pair_product_tv"] = stats.pair_product_check(
            feet, xp, bins_minus=cfg.get("equidist", "bins", 8), bins_plus=cfg.get("equidist", "bins", 8)
        )
    if fm.kind == "cusp" and G.kind == "modular":
        seeds = cfg.get("run", "seeds", (1,))
        n_samples = cfg.get("equidist", "samples", 100000)
        t_hi = cfg.get("equidist", "flow_time", 8.0)
        t_lo = cfg.get("equidist", "flow_time_low", 2.0)
        payload["pushforward_tv"] = {
            str(s): {
                "high": stats.flow_pushforward_check(fm, G, t_hi, n_samples, seed=s),
                "low": stats.flow_pushforward_check(fm, G, t_lo, n_samples, seed=s),
            }
            for s in seeds
        }
    with open(os.path.join(out_dir, "feet.csv"), "w") as fh:
        fh.write("foot_coordinate\n")
        for v in feet:
            fh.write(f"{v:.17g}\n")
    _write_json(os.path.join(out_dir, "equidist.json"), payload)
    print(f"ks = {ks:.6g} over {len(spec)} feet")
    return 0


def cmd_limitset(cfg, out_dir, workers):
    G = build_group(cfg)
    if G.kind != "schottky":
        raise ConfigError("limitset command needs a schottky group")
    gen = cfg.get("limitset", "generator", 0)
    threshold = cfg.get("limitset", "threshold", 1e-5)
    T_grid = cfg.get("limitset", "T_grid", tuple(float(x) for x in np.geomspace(10, 1 / threshold, 10)))
    pieces = limitset.orbit_pieces(G, ("generator", gen), threshold)
    rep = limitset.diameter_counts(pieces, T_grid)
    with open(os.path.join(out_dir, "limitset_counts.csv"), "w") as fh:
        fh.write("T,count\n")
        for T, c in zip(rep.T_grid, rep.counts):
            fh.write(f"{T:.17g},{c}\n")
    payload = rep.to_dict()
    payload["pieces"] = len(pieces)
    payload["provenance"] = _provenance(cfg)
    _write_json(os.path.join(out_dir, "limitset_report.json"), payload)
    res = cfg.get("limitset", "resolution", 512)
    limitset.render_ppm(pieces, res, os.path.join(out_dir, "limitset.ppm"))
    print(f"{len(pieces)} pieces, delta_hat = {rep.delta_hat:.4f}")
    return 0


def cmd_selftest(cfg, out_dir, workers):
    profile = cfg.get("selftest", "profile", "full") if cfg else "full"
    results = accept.run_all(quick=(profile == "quick"))
    all_pass = True
    for r in results:
        print(r.line())
        all_pass = all_pass and r.passed
    _write_json(
        os.path.join(out_dir, "selftest.json"),
        {"results": [{"name": r.name, "passed": r.passed, "details": _jsonable(r.details)} for r in results],
         "provenance": _provenance(cfg) if cfg else {"backend": _backend.backend_name()}},
    )
    return 0 if all_pass else 1


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


_COMMANDS = {
    "constants": cmd_constants,
    "spectrum": cmd_spectrum,
    "count": cmd_count,
    "equidist": cmd_equidist,
    "limitset": cmd_limitset,
    "selftest": cmd_selftest,
}


def run(command: str, cfg: ExperimentConfig, out_dir: str = ".", workers: int = 1) -> int:
    os.makedirs(out_dir, exist_ok=True)
    return _COMMANDS[command](cfg, out_dir, workers)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="orthocount", description="ortholength spectrum experiments")
    ap.add_argument("command", choices=sorted(_COMMANDS))
    ap.add_argument("--config", required=False, help="experiment config path")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args(argv)
    workers = args.workers
    if workers is None:
        workers = int(os.environ.get("ORTHOCOUNT_WORKERS", "1"))
    cfg = None
    try:
        if args.config is not None:
            with open(args.config) as fh:
                cfg = parse_config(fh.read())
            workers = cfg.get("run", "workers", workers)
        elif args.command != "selftest":
            raise ConfigError("--config is required")
        return run(args.command, cfg, args.out, workers)
    except (ConfigError, FileNotFoundError) as exc:
        json.dump({"error": "config", "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except Exception as exc:  # computational failure
        json.dump({"error": "computation", "type": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
