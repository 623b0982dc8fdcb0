"""Command-line front end.

Exit codes: 0 success, 2 partial atlas (some codes missed), 1 error.
Reports go to ``--out``, else ``$HUMPS_OUT``, else ``./humps_out``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from .errors import HumpsError, IoError

DEFAULT_OUT = "humps_out"


# ----------------------------------------------------------------------------
# emission
# ----------------------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if hasattr(x, "item"):
        return x.item()
    return x


def write_json(path, data) -> None:
    path = Path(path)
    if not path.parent.is_dir():
        raise IoError(f"output directory does not exist: {path.parent}")
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def emit_plot_data(entry, path, params=None) -> None:
    """``t,u,y`` CSV plus a ``.json`` sidecar with code, maxima and parameters."""
    path = Path(path)
    if not path.parent.is_dir():
        raise IoError(f"output directory does not exist: {path.parent}")
    entry.trajectory.to_csv(path)
    p = params if params is not None else entry.trajectory.params
    write_json(
        path.with_suffix(".json"),
        {
            "code": str(entry.code) if entry.code is not None else None,
            "hump_maxima": list(entry.hump_maxima),
            "params": {"lambda": p.lam, "mu": p.mu, "c": p.c},
            "bc": entry.bc,
            "bc_residual": entry.bc_residual,
            "residual": entry.trajectory.residual,
        },
    )


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get("HUMPS_OUT") or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _windows(cfg, auto=None):
    from .bvp import Windows

    if cfg.r is not None and cfg.R is not None:
        return Windows(cfg.r, cfg.rho if cfg.rho is not None else math.sqrt(cfg.r * cfg.R), cfg.R)
    return auto


def _windows_dict(win):
    return None if win is None else {"r": win.r, "rho": win.rho, "R": win.R}


# ----------------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------------


def cmd_constants(args) -> int:
    from .config import load_config
    from .thresholds import certify, mu_thresholds

    cfg = load_config(args.config)
    w, g = cfg.weight(), cfg.g()
    rho = cfg.rho if cfg.rho is not None else 1.0
    if cfg.r is not None and cfg.R is not None:
        ps = mu_thresholds(w, g, cfg.lam, rho, cfg.r, cfg.R)
    else:
        ps = certify(w, g, cfg.lam, rho)
    rows = ps.table()
    out = _out_dir(args)
    with open(out / "constants.csv", "w", newline="") as fh:
        fh.write("name,value\n")
        for name, value, _ in rows:
            fh.write(f"{name},{value!r}\n")
    write_json(out / "constants.json", {name: {"value": v, "formula": f} for name, v, f in rows})
    for name, value, _ in rows:
        print(f"{name:>20s}  {value:.12g}")
    return 0


def cmd_solve(args) -> int:
    from .bvp import SymbolCode, solve_code
    from .config import load_config

    cfg = load_config(args.config)
    code = SymbolCode.parse(args.code)
    entry = solve_code(
        cfg.weight(), cfg.g(), cfg.params(), cfg.bc, code,
        k=cfg.k, windows=_windows(cfg), seed=cfg.seed, max_seg=cfg.max_seg, attempts=cfg.attempts,
    )
    out = _out_dir(args)
    emit_plot_data(entry, out / f"solution_{code}.csv", cfg.params())
    print(f"code {entry.code}: maxima {', '.join(f'{m:.6g}' for m in entry.hump_maxima)}")
    return 0


def cmd_atlas(args) -> int:
    from .bvp import build_atlas
    from .config import load_config

    cfg = load_config(args.config)
    p = cfg.params()
    at = build_atlas(
        cfg.weight(), cfg.g(), p, cfg.bc,
        windows=_windows(cfg), k=cfg.k, seed=cfg.seed, max_seg=cfg.max_seg,
        attempts=cfg.attempts, codes=cfg.code_list(),
    )
    out = _out_dir(args)
    for e in at.entries:
        emit_plot_data(e, out / f"solution_{e.code}.csv", p)
    write_json(
        out / "atlas.json",
        {
            "windows": _windows_dict(at.windows),
            "entries": [{"code": str(e.code), "hump_maxima": list(e.hump_maxima)} for e in at.entries],
            "misses": [{"code": str(m.code), "reason": m.reason, "attempts": m.attempts} for m in at.misses],
        },
    )
    print(at.summary())
    for e in at.entries:
        print(f"  {e.code}  " + "  ".join(f"{m:.6g}" for m in e.hump_maxima))
    for m in at.misses:
        print(f"  missed {m.code}: {m.reason}")
    return 2 if at.misses else 0


def cmd_subharmonics(args) -> int:
    from .bvp import SymbolCode, subharmonic_solve
    from .config import load_config
    from .symbolic import lyndon_enumerate, semiconjugation_check

    cfg = load_config(args.config)
    w, g, p = cfg.weight(), cfg.g(), cfg.params()
    k = args.k
    windows = _windows(cfg)
    if windows is None:
        raise HumpsError("subharmonics need r and R in [parameters] for classification")
    if args.codes:
        codes = [SymbolCode.parse(c) for c in args.codes]
    else:
        n = 3**w.m
        from .symbolic import decode_block

        codes = [
            SymbolCode(sum((decode_block(b, w.m) for b in lw.digits), ()))
            for lw in lyndon_enumerate(n, k)
            if any(lw.digits)
        ]
    out = _out_dir(args)
    entries, missed = [], []
    for code in codes:
        try:
            e = subharmonic_solve(
                w, g, p, code, k, windows=windows, seed=cfg.seed, max_seg=cfg.max_seg,
                attempts=cfg.attempts, continue_from=args.continue_from,
            )
        except HumpsError as exc:
            missed.append((code, str(exc)))
            print(f"  missed {code}: {exc}")
            continue
        entries.append(e)
        emit_plot_data(e, out / f"subharmonic_{code}.csv", p)
        print(f"  {code}  " + "  ".join(f"{m:.6g}" for m in e.hump_maxima))
    report = semiconjugation_check(entries, k, windows, p)
    write_json(
        out / "subharmonics.json",
        {
            "k": k,
            "rows": [
                {
                    "code": r.code,
                    "commutes": r.commutes,
                    "fixed_point_residual": r.fixed_point_residual,
                    "periodic_point": r.periodic_point,
                }
                for r in report.rows
            ],
            "misses": [{"code": str(c), "reason": why} for c, why in missed],
        },
    )
    commutes = all(r.commutes for r in report.rows)
    periodic = all(r.periodic_point for r in report.rows)
    print(
        f"found {len(entries)}, missed {len(missed)}, commutation {'ok' if commutes else 'FAILED'}, "
        f"fixed points {'ok' if periodic else 'FAILED'} (max residual "
        f"{max((r.fixed_point_residual for r in report.rows), default=0.0):.2g})"
    )
    return 2 if missed else 0


def cmd_lyndon(args) -> int:
    from .symbolic import lyndon_count, lyndon_enumerate

    if args.list:
        for wd in lyndon_enumerate(args.n, args.k):
            print(wd)
    else:
        print(lyndon_count(args.n, args.k))
    return 0


def _index_set(text: str) -> frozenset:
    text = text.strip()
    return frozenset(int(x) for x in text.replace(",", " ").split()) if text else frozenset()


def cmd_degree(args) -> int:
    from .degcomb import lambda_degree, lambda_degree_induction, lambda_box, valuation_product

    I, J = _index_set(args.I), _index_set(args.J)
    if args.method == "induction":
        d = lambda_degree_induction(I, J, args.m)
    elif args.method == "product":
        d = valuation_product(lambda_box(I, J, args.m))
    else:
        d = lambda_degree(I, J, args.m)
    print(d)
    return 0


def cmd_radial(args) -> int:
    from .bvp import build_atlas
    from .config import load_config
    from .radial import lift_solution, radial_residual, reduce

    cfg = load_config(args.config)
    ap = cfg.annulus_problem()
    w, T = reduce(ap)
    p = cfg.params()
    at = build_atlas(w, ap.g, p, ap.bc, windows=_windows(cfg), seed=cfg.seed, attempts=cfg.attempts)
    out = _out_dir(args)
    write_json(
        out / "reduced_weight.json",
        {
            "T": T,
            "N": ap.N,
            "pieces": [{"t0": t0, "t1": t1, "kind": pc.kind, "params": pc.params()} for t0, t1, pc in w.pieces],
            "breakpoints": w.breakpoints(),
        },
    )
    rows = []
    for e in at.entries:
        prof = lift_solution(e.trajectory, ap)
        res = radial_residual(prof, ap, p)
        prof.to_csv(out / f"radial_{e.code}.csv")
        rows.append({"code": str(e.code), "radial_residual": res, "hump_maxima": list(e.hump_maxima)})
        print(f"  {e.code}  radial residual {res:.3g}")
    write_json(out / "radial.json", {"entries": rows, "misses": [str(m.code) for m in at.misses]})
    print(at.summary())
    return 2 if at.misses else 0


def cmd_validate(args) -> int:
    from .bvp import build_atlas, reintegrate, validate_solution
    from .config import load_config

    cfg = load_config(args.config)
    p = cfg.params()
    at = build_atlas(
        cfg.weight(), cfg.g(), p, cfg.bc,
        windows=_windows(cfg), k=cfg.k, seed=cfg.seed, max_seg=cfg.max_seg,
        attempts=cfg.attempts, codes=cfg.code_list(),
    )
    rows, ok = [], True
    for e in at.entries:
        rep = validate_solution(e, p, at.windows)
        _, res = reintegrate(e, p)
        ok &= rep.ok
        rows.append({"code": str(e.code), "flags": rep.flags, "reintegration_residual": res})
        print(f"  {e.code}  {'ok' if rep.ok else ' '.join(rep.flags)}  reintegration {res:.3g}")
    write_json(_out_dir(args) / "validation.json", {"entries": rows, "windows": _windows_dict(at.windows)})
    if not ok:
        return 1
    return 2 if at.misses else 0


# ----------------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="humps", description="Positive solutions of indefinite-weight oscillators.")
    ap.add_argument("--out", default=None, help="output directory (default $HUMPS_OUT or ./humps_out)")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("constants", help="lambda*, (r, R) and the mu thresholds")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_constants)

    s = sub.add_parser("solve", help="one solution for a given code")
    s.add_argument("--config", required=True)
    s.add_argument("--code", required=True)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("atlas", help="one solution per nonzero code")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_atlas)

    s = sub.add_parser("subharmonics", help="kT-periodic solutions and the coding check")
    s.add_argument("--config", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--codes", nargs="*", default=None)
    s.add_argument("--continue-from", type=float, default=None, help="mu to start continuation from")
    s.set_defaults(func=cmd_subharmonics)

    s = sub.add_parser("lyndon", help="count or list Lyndon words")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--count", action="store_true")
    g.add_argument("--list", action="store_true")
    s.set_defaults(func=cmd_lyndon)

    s = sub.add_parser("degree", help="degree of the atomic box for (I, J)")
    s.add_argument("--I", default="", help="comma-separated 1-based indices")
    s.add_argument("--J", default="")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--method", choices=("recursive", "induction", "product"), default="recursive")
    s.set_defaults(func=cmd_degree)

    s = sub.add_parser("radial", help="annulus problem: reduce, solve, lift")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_radial)

    s = sub.add_parser("validate", help="atlas plus a posteriori checks")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_validate)
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HumpsError, ValueError, OSError) as exc:
        where = getattr(args, "config", None)
        prefix = f"{where}: " if where and where not in str(exc) else ""
        print(f"error: {prefix}{exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
