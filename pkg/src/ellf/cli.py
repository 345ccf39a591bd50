"""Command-line interface: ``ellf params | verify | sample | limit | render``.

Exit codes: 0 success, 1 a verification failed, 2 usage error.
Options come from flags, then a ``key=value`` config file, then the
ELLF_SEED environment variable (seed only), then defaults.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .gasket_geometry import F, cell_corners, cells_at, region_vertices, to_cartesian
from .path_space import load_jsonl
from .renormalization import parse_u, spectral, step_weights
from .series_oracle import VERIFY_TARGETS, verify_target

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
MAX_LEVEL = 24
SEED_ENV = "ELLF_SEED"
DEFAULTS = {"u": "1", "level": 4, "reps": 1, "seed": 0, "out": None, "format": None,
            "threads": 1, "kind": "hat", "max_len": 12, "targets": "phi,xi,p,q",
            "p_moment": 1.0, "tmin": 1e-6, "tmax": 1e6, "points": 121, "input": None}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    u: Fraction
    level: int
    reps: int
    seed: int
    out: str | None
    format: str | None
    threads: int
    extra: dict


def read_config_file(path: str) -> dict:
    out = {}
    try:
        with open(path) as fh:
            for n, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{n}: expected key=value")
                k, v = (s.strip() for s in line.split("=", 1))
                out[k.replace("-", "_")] = v
    except OSError as e:
        raise UsageError(f"cannot read config file: {e}") from e
    return out


def _typed(key: str, value):
    if value is None:
        return None
    conv = type(DEFAULTS[key]) if DEFAULTS.get(key) is not None else str
    try:
        return conv(value)
    except (TypeError, ValueError) as e:
        raise UsageError(f"bad value for {key}: {value!r}") from e


def resolve(args: argparse.Namespace) -> RunConfig:
    file_opts = read_config_file(args.config) if getattr(args, "config", None) else {}
    unknown = set(file_opts) - set(DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    merged = {}
    for key, default in DEFAULTS.items():
        v = getattr(args, key, None)
        if v is None and key in file_opts:
            v = _typed(key, file_opts[key])
        if v is None and key == "seed" and os.environ.get(SEED_ENV):
            v = _typed(key, os.environ[SEED_ENV])
        merged[key] = default if v is None else v
    try:
        u = parse_u(merged["u"])
    except (ValueError, ZeroDivisionError, TypeError) as e:
        raise UsageError(f"cannot parse u: {merged['u']!r}") from e
    if u < 0:
        raise UsageError("u must be nonnegative")
    if not 1 <= merged["level"] <= MAX_LEVEL:
        raise UsageError(f"level must lie in 1..{MAX_LEVEL}")
    if merged["reps"] < 1:
        raise UsageError("reps must be at least 1")
    if not 0 <= merged["seed"] < 2 ** 64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    if merged["threads"] < 1:
        raise UsageError("threads must be at least 1")
    extra = {k: v for k, v in merged.items()
             if k not in ("u", "level", "reps", "seed", "out", "format", "threads")}
    return RunConfig(u, merged["level"], merged["reps"], merged["seed"], merged["out"],
                     merged["format"], merged["threads"], extra)


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.out:
        with open(cfg.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# params, verify

def run_params(cfg: RunConfig) -> int:
    sw = step_weights(cfg.u)
    sp = spectral(sw)
    doc = sw.to_dict()
    doc.update(sp.to_dict())
    doc["phi_hat"] = {f"{i},{j}": c for (i, j), c in sorted(sw.phi_hat.items())}
    doc["theta_hat"] = {f"{i},{j}": c for (i, j), c in sorted(sw.theta_hat.items())}
    _emit(_json(doc), cfg)
    return EXIT_OK


def run_verify(cfg: RunConfig) -> int:
    targets = [t.strip().lower() for t in str(cfg.extra["targets"]).split(",") if t.strip()]
    bad = [t for t in targets if t not in VERIFY_TARGETS]
    if bad or not targets:
        raise UsageError(f"unknown targets: {', '.join(bad) or '(none)'}; "
                         f"choose from {', '.join(VERIFY_TARGETS)}")
    L = cfg.extra["max_len"]
    rows = []
    try:
        for t in targets:
            rows.extend(verify_target(t, cfg.u, L))
    except (MemoryError, ValueError) as e:
        raise UsageError(str(e)) from e
    ok = all(r["status"] == "equal" for r in rows)
    _emit(_json({"all_equal": ok, "results": rows}), cfg)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# sampling

def _sample_lines(kind: str, cfg: RunConfig) -> list[str]:
    from .stochastics.automaton import sample_srw_batch
    from .stochastics.lerw import coupled_levels, lerw_chain, _processes
    from .stochastics.parallel import run_chunked

    u, N = cfg.u, cfg.level
    lam = spectral(u).lam

    def task(m, rng):
        # one list of records per replicate
        if kind == "srw":
            fam = "V" if cfg.extra["kind"] == "hat-prime" else "W"
            return [[p.to_dict()] for p in sample_srw_batch(u, N, m, rng, fam)]
        if kind == "lerw":
            return [[sp.to_dict()] for sp in _processes(lerw_chain(u, N, m, rng, cfg.extra["kind"]), lam)]
        snaps = coupled_levels(u, range(1, N + 1), m, rng)
        return [[snaps[n][i].to_dict() for n in range(1, N + 1)] for i in range(m)]

    lines = []
    rep = 0
    for chunk in run_chunked(task, cfg.reps, cfg.seed, cfg.threads):
        for records in chunk:
            for d in records:
                lines.append(json.dumps({"rep": rep, **d}, separators=(",", ":")))
            rep += 1
    return lines


def run_sample(kind: str, cfg: RunConfig) -> int:
    if cfg.extra["kind"] not in ("hat", "hat-prime"):
        raise UsageError("--kind must be hat or hat-prime")
    if kind != "srw" and cfg.level > 16 and cfg.reps > 1:
        raise UsageError("level above 16 supported for single replicates only")
    lines = _sample_lines(kind, cfg)
    _emit("".join(line + "\n" for line in lines), cfg)
    return EXIT_OK


# ---------------------------------------------------------------------------
# limit diagnostics

def run_limit(what: str, cfg: RunConfig) -> int:
    from .stochastics import branching, limits
    from .stochastics.parallel import run_chunked

    u = cfg.u
    fmt = cfg.format or ("csv" if what in ("laplace", "exponent") else "json")
    if fmt not in ("json", "csv"):
        raise UsageError("format must be json or csv")
    if what == "bprocess":
        sp = spectral(u)
        norm = sp.lam ** (-cfg.level) / float(sp.left_vec @ branching.WEIGHT)
        doc = {"u": str(u), "N": cfg.level, "reps": cfg.reps, "lambda": sp.lam,
               "predicted_tail_slope": branching.predicted_tail_slope(u)}
        for i in (1, 2):
            parts = run_chunked(lambda m, g: branching.final_populations(u, i, cfg.level, m, g),
                                cfg.reps, cfg.seed + i - 1, cfg.threads)
            S = np.concatenate(parts)
            est = branching.BEstimate(i, cfg.level, norm * (S @ branching.WEIGHT),
                                      float(sp.right_vec[i - 1]))
            d = est.to_dict()
            try:
                d["tail_slope"] = branching.tail_slope(est.samples * float(sp.left_vec @ branching.WEIGHT))
            except ValueError:
                d["tail_slope"] = None
            doc[f"B{i}"] = d
        if fmt != "json":
            raise UsageError("bprocess writes json only")
        _emit(_json(doc), cfg)
        return EXIT_OK
    if what == "laplace":
        tmin, tmax, n = float(cfg.extra["tmin"]), float(cfg.extra["tmax"]), int(cfg.extra["points"])
        if not 0 < tmin < tmax or n < 2:
            raise UsageError("need 0 < tmin < tmax and points >= 2")
        t = np.logspace(math.log10(tmin), math.log10(tmax), n)
        tab = limits.laplace_g(u, t)
        if fmt == "csv":
            _emit(tab.to_csv(), cfg)
        else:
            res = limits.laplace_residuals(u, t)
            _emit(_json({"u": str(u), "t": t.tolist(), "g1": tab.g1.tolist(), "g2": tab.g2.tolist(),
                         "h1": tab.h1.tolist(), "h2": tab.h2.tolist(),
                         "max_residual": float(res.max())}), cfg)
        return EXIT_OK
    if what == "exponent":
        if cfg.level < 6:
            raise UsageError("exponent fit needs level >= 6")
        times = limits.default_times(u, cfg.level)
        lam = spectral(u).lam
        pm = float(cfg.extra["p_moment"])

        def task(m, g):
            from .stochastics.lerw import lerw_chain
            d = limits.positions_at(lerw_chain(u, cfg.level, m, g), times, lam) ** pm
            return d.sum(axis=0), (d * d).sum(axis=0)

        parts = run_chunked(task, cfg.reps, cfg.seed, cfg.threads)
        s1 = sum(p[0] for p in parts)
        s2 = sum(p[1] for p in parts)
        mean = s1 / cfg.reps
        se = np.sqrt(np.maximum(s2 / cfg.reps - mean ** 2, 0) / cfg.reps)
        slope, icpt = np.polyfit(np.log(times), np.log(mean), 1)
        fit = limits.DisplacementFit(float(u), cfg.level, cfg.reps, pm, times, mean, se,
                                     float(slope), float(icpt), spectral(u).nu)
        _emit(fit.to_csv() if fmt == "csv" else _json(fit.to_dict()), cfg)
        return EXIT_OK
    if what == "lil":
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
        rep = limits.lil_diagnostic(u, cfg.level, cfg.reps, rng)
        if fmt == "csv":
            rows = ["t,psi,mean_ratio,q99_ratio,max_ratio"]
            rows += [",".join(repr(float(v)) for v in r)
                     for r in zip(rep["t"], rep["psi"], rep["mean_ratio"], rep["q99_ratio"], rep["max_ratio"])]
            _emit("\n".join(rows) + "\n", cfg)
        else:
            _emit(_json(rep), cfg)
        return EXIT_OK
    raise UsageError(f"unknown limit diagnostic {what!r}")


# ---------------------------------------------------------------------------
# SVG

SVG_SCALE = 400.0
SVG_MARGIN = 20.0
PALETTE = ("#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#16a085", "#2c3e50", "#b7950b")


def svg_point(x: float, y: float) -> tuple[float, float]:
    """Cartesian point to SVG pixels; the drawing spans x in [-1, 1]."""
    return (SVG_MARGIN + (x + 1.0) * SVG_SCALE,
            SVG_MARGIN + (math.sqrt(3) / 2 - y) * SVG_SCALE)


def _fmt_pts(pts) -> str:
    return " ".join(f"{px:.3f},{py:.3f}" for px, py in (svg_point(x, y) for x, y in pts))


def render_svg(paths, wire_level: int = 3) -> str:
    w = 2 * SVG_SCALE + 2 * SVG_MARGIN
    h = math.sqrt(3) / 2 * SVG_SCALE + 2 * SVG_MARGIN
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" '
           f'viewBox="0 0 {w:.0f} {h:.0f}">',
           '<g id="gasket" fill="none" stroke="#bbbbbb" stroke-width="0.5">']
    cells = sorted({c for v in region_vertices(wire_level, F) for c in cells_at(v, wire_level, F)})
    for c in cells:
        pts = [to_cartesian(v, wire_level) for v in cell_corners(c)]
        out.append(f'<polygon points="{_fmt_pts(pts)}"/>')
    out.append("</g>")
    out.append('<g id="paths" fill="none" stroke-width="1.2">')
    for i, p in enumerate(paths):
        pts = [to_cartesian(v, p.level) for v in p.vertices]
        out.append(f'<polyline stroke="{PALETTE[i % len(PALETTE)]}" points="{_fmt_pts(pts)}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def run_render(cfg: RunConfig) -> int:
    src = cfg.extra["input"]
    if not src:
        raise UsageError("render needs --input")
    try:
        with open(src) as fh:
            paths = load_jsonl(fh)
    except OSError as e:
        raise UsageError(f"cannot read {src}: {e}") from e
    except (ValueError, KeyError) as e:
        raise UsageError(f"malformed dump {src}: {e}") from e
    wire = min(cfg.level, 5)
    _emit(render_svg(paths, wire), cfg)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def _common(p: argparse.ArgumentParser, level: bool = True, reps: bool = True, seed: bool = True):
    p.add_argument("--u", default=None, help="parameter u as p/q or decimal (default 1)")
    if level:
        p.add_argument("--level", type=int, default=None)
    if reps:
        p.add_argument("--reps", type=int, default=None)
    if seed:
        p.add_argument("--seed", type=int, default=None, help=f"default from ${SEED_ENV}, else 0")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", default=None)
    p.add_argument("--config", default=None, help="file of key=value defaults")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ellf", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("params", help="fixed point, step weights, spectral data"),
            level=False, reps=False, seed=False)
    v = sub.add_parser("verify", help="exact series checks of the closed forms")
    _common(v, level=False, reps=False, seed=False)
    v.add_argument("--max-len", dest="max_len", type=int, default=None)
    v.add_argument("--targets", default=None, help="comma list of " + ",".join(VERIFY_TARGETS[:4]) + ",p1..q10")
    s = sub.add_parser("sample", help="JSON-lines path samples")
    s.add_argument("what", choices=("srw", "lerw", "coupled"))
    _common(s)
    s.add_argument("--kind", default=None, help="hat (W / type 1) or hat-prime (V / type 2)")
    lim = sub.add_parser("limit", help="limit-process diagnostics")
    lim.add_argument("what", choices=("bprocess", "laplace", "exponent", "lil"))
    _common(lim)
    lim.add_argument("--p", dest="p_moment", type=float, default=None)
    lim.add_argument("--tmin", type=float, default=None)
    lim.add_argument("--tmax", type=float, default=None)
    lim.add_argument("--points", type=int, default=None)
    r = sub.add_parser("render", help="SVG of a JSON-lines dump")
    _common(r, reps=False, seed=False)
    r.add_argument("--input", default=None)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        cfg = resolve(args)
        if args.command == "params":
            return run_params(cfg)
        if args.command == "verify":
            return run_verify(cfg)
        if args.command == "sample":
            return run_sample(args.what, cfg)
        if args.command == "limit":
            return run_limit(args.what, cfg)
        return run_render(cfg)
    except UsageError as e:
        print(f"ellf: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
