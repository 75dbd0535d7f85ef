"""Command line entry point ``cuspwave``.

Exit codes: 0 success, 2 domain or validation error, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import region as bl
from . import spectral, streams, waves
from .config import parse_config
from .errors import DomainError, NumericalError, ValidationError
from .vorticity import make_vorticity

EXIT_OK, EXIT_DOMAIN, EXIT_CONVERGENCE = 0, 2, 3

log = logging.getLogger("cuspwave")


# -- deterministic output ---------------------------------------------------------


def fmt(x):
    """Float with 17 significant digits; infinities and NaN as strings."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def to_json(obj, indent=0):
    """JSON text with 17-digit floats and non-finite values as strings."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        s = fmt(obj)
        return s if math.isfinite(obj) else f'"{s}"'
    if isinstance(obj, str):
        return _json_str(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_str(str(k))}: {to_json(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad}{to_json(x, indent + 1)}" for x in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _json_str(s):
    return json.dumps(s)


def atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(x) for x in row])
    return buf.getvalue()


def write_csv(path, header, rows):
    atomic_write(path, csv_text(header, rows))


def write_json(path, obj):
    atomic_write(path, to_json(obj) + "\n")


def read_wave_csv(path, r, kind="stokes"):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["q", "p", "h"]:
            raise ValidationError(f"expected header q,p,h, got {header}", "")
        rows = [[float(x) for x in row] for row in reader if row]
    return waves.wave_from_rows(rows, r, kind)


# -- argument parsing ---------------------------------------------------------------


def _lambda_grid(text):
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected a:b:n") from exc
    if n < 1:
        raise argparse.ArgumentTypeError("n must be positive")
    return a, b, n


def _t_list(text):
    """Comma separated crest heights; a leading '+' marks an offset above d_+."""
    items = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            items.append((part.startswith("+"), float(part)))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"bad crest height {part!r}") from exc
    if not items:
        raise argparse.ArgumentTypeError("empty t-list")
    return items


def build_parser():
    parser = argparse.ArgumentParser(prog="cuspwave", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=".", help="output directory (default: cwd)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        return p

    p = add("stream", "depth and Bernoulli constant of streams")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--lambda-grid", type=_lambda_grid)
    add("critical", "lambda0, lambda_c, r_c and the limits d0, r0")
    p = add("spectrum", "Sturm-Liouville eigen-data at lambda or at lambda_+(r)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--r", type=float)
    p = add("stokes", "Stokes-wave branch at fixed r")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--t-list", type=_t_list, required=True)
    p.add_argument("--restart", help="wave CSV used as the first warm start")
    p = add("solitary", "long-wave approximation of the solitary wave")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--tail-tol", type=float, default=1e-3)
    p = add("region", "boundary curves s_-(r), s_+(r) of the cuspidal region")
    p.add_argument("--r-max", type=float, required=True)
    p.add_argument("--n", type=int, default=64)
    p = add("verify-bl", "flow-force verification on a computed branch")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--t-list", type=_t_list, required=True)
    p.add_argument("--tail-tol", type=float, default=1e-3)
    return parser


# -- subcommands ------------------------------------------------------------------


def _crest_heights(v, r, items):
    dplus = streams.conjugate_streams(v, r).dPlus
    return [dplus + x if rel else x for rel, x in items]


def cmd_stream(cfg, v, args):
    if args.lam is not None:
        lams = [args.lam]
    else:
        a, b, n = args.lambda_grid
        lams = np.linspace(a, b, n).tolist()
    rows = [(lam, streams.depth(v, lam), streams.bernoulli_of_lambda(v, lam)) for lam in lams]
    write_csv(os.path.join(args.out, "stream.csv"), ["lambda", "depth", "bernoulli"], rows)


def cmd_critical(cfg, v, args):
    if v.tie:
        print("cuspwave: warning: max of Omega attained at an endpoint and interiorly; "
              "classified as class I", file=sys.stderr)
    write_json(os.path.join(args.out, "critical.json"), streams.critical_data(v).to_dict())


def cmd_spectrum(cfg, v, args):
    out = {}
    if args.r is not None:
        pair = streams.conjugate_streams(v, args.r)
        lam = pair.lambdaPlus
        out["r"] = args.r
    else:
        lam = args.lam
    sp_ = spectral.spectral_point(v, lam, cfg.Np)
    out.update(sp_.to_dict())
    out["Lambda"] = math.pi / sp_.kStar if sp_.kStar else math.inf
    write_json(os.path.join(args.out, "spectrum.json"), out)
    write_csv(os.path.join(args.out, "phi0.csv"), ["p", "phi0"], zip(sp_.p, sp_.phi0))


SUMMARY_HEADER = ["t", "Lambda", "minEta", "maxEta", "flowForce", "maxSlope", "minPsiY"]


def _summary_row(v, wave):
    phys = waves.reconstruct_physical(v, wave)
    return (wave.crest_height, wave.Lambda, float(wave.eta.min()), float(wave.eta.max()),
            bl.flow_force_wave(wave, v, 0), phys.maxSlope, phys.minPsiY)


def _write_branch(v, branch, out, prefix="wave"):
    rows = []
    for k, wave in enumerate(branch):
        write_csv(os.path.join(out, f"{prefix}_{k:03d}.csv"), ["q", "p", "h"], waves.wave_rows(wave))
        rows.append(_summary_row(v, wave))
    write_csv(os.path.join(out, f"{prefix}_summary.csv"), SUMMARY_HEADER, rows)


def _branch(cfg, v, r, ts, start=None):
    return waves.continue_branch(v, r, ts, Np=cfg.Np, Nq=cfg.Nq, tol=cfg.newton_tol,
                                 max_iter=cfg.max_newton_iters,
                                 max_steps=cfg.max_continuation_steps,
                                 slope_bound=cfg.slope_bound, start=start)


def _solitary(cfg, v, r, tail_tol):
    return waves.solitary_approx(v, r, tail_tol, Np=cfg.Np, Nq=cfg.Nq, tol=cfg.newton_tol,
                                 max_iter=cfg.max_newton_iters,
                                 max_steps=cfg.max_continuation_steps,
                                 lambda_cap=cfg.lambda_cap)


def cmd_stokes(cfg, v, args):
    ts = _crest_heights(v, args.r, args.t_list)
    start = read_wave_csv(args.restart, args.r) if args.restart else None
    try:
        branch = _branch(cfg, v, args.r, ts, start)
    except NumericalError as exc:
        partial = getattr(exc, "partial", [])
        if partial:
            _write_branch(v, partial, args.out)
        raise
    _write_branch(v, branch, args.out)


def cmd_solitary(cfg, v, args):
    wave = _solitary(cfg, v, args.r, args.tail_tol)
    _write_branch(v, [wave], args.out, prefix="solitary")
    write_json(os.path.join(args.out, "solitary.json"), {
        "r": args.r,
        "tailTol": args.tail_tol,
        "tailError": wave.meta.get("tailError"),
        "tailSlope": wave.meta.get("tailSlope"),
        "converged": bool(wave.meta.get("tailConverged")),
        "Lambda": wave.Lambda,
        "Nq": wave.Nq,
        "flowForce": bl.flow_force_wave(wave, v, 0),
        "sMinus": bl.flow_force_stream(v, args.r, "minus"),
    })


def _region_chunk(spec, rs):
    v = make_vorticity(spec)
    return [(r, *bl.boundary_values(v, r)) for r in rs]


def cmd_region(cfg, v, args):
    rg = bl.region_grid(v, args.r_max, args.n)
    if args.jobs > 1:
        chunks = [c.tolist() for c in np.array_split(rg, args.jobs) if c.size]
        with ProcessPoolExecutor(args.jobs) as pool:
            parts = pool.map(_region_chunk, [cfg.vorticity] * len(chunks), chunks)
            rows = [row for part in parts for row in part]
    else:
        rows = _region_chunk(cfg.vorticity, rg.tolist())
    write_csv(os.path.join(args.out, "region.csv"), ["r", "sMinus", "sPlus"], rows)


def verify_bl(cfg, v, r, ts, tail_tol, jobs=1):
    """Branch, solitary approximation, membership and monotonicity verdict."""
    if jobs > 1:
        with ProcessPoolExecutor(2) as pool:
            fb = pool.submit(_branch, cfg, v, r, ts)
            fs = pool.submit(_solitary, cfg, v, r, tail_tol)
            branch, sol = fb.result(), fs.result()
    else:
        branch = _branch(cfg, v, r, ts)
        sol = _solitary(cfg, v, r, tail_tol)
    region = bl.build_region(v, r, 2)
    members = []
    for wave in branch + [sol]:
        s = bl.flow_force_wave(wave, v, 0)
        pt = bl.contains(region, r, s)
        members.append({"t": wave.crest_height, "kind": wave.kind, "s": s,
                        "position": pt.position, "pass": pt.member})
    verdict = bl.branch_flow_force(branch, v, sol)
    return {
        "r": r,
        "membership": members,
        "allMembers": all(m["pass"] for m in members),
        "monotonic": verdict.monotonic,
        "endpoints": {"sPlusGap": verdict.sPlusGap, "sMinusGap": verdict.sMinusGap},
        "solitary": {"tailError": sol.meta.get("tailError"), "tailSlope": sol.meta.get("tailSlope"),
                     "converged": bool(sol.meta.get("tailConverged")), "Lambda": sol.Lambda},
    }, branch, sol


def cmd_verify_bl(cfg, v, args):
    ts = _crest_heights(v, args.r, args.t_list)
    report, _, _ = verify_bl(cfg, v, args.r, ts, args.tail_tol, args.jobs)
    write_json(os.path.join(args.out, "verify-bl.json"), report)


COMMANDS = {
    "stream": cmd_stream,
    "critical": cmd_critical,
    "spectrum": cmd_spectrum,
    "stokes": cmd_stokes,
    "solitary": cmd_solitary,
    "region": cmd_region,
    "verify-bl": cmd_verify_bl,
}


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.jobs < 1:
            raise ValidationError("must be at least 1", "--jobs")
        cfg = parse_config(args.config)
        v = make_vorticity(cfg.vorticity)
        COMMANDS[args.command](cfg, v, args)
    except DomainError as exc:
        print(f"cuspwave: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericalError as exc:
        print(f"cuspwave: solver failed: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def main():
    sys.exit(run())
