"""Command-line front end.

Exit codes: 0 success, 2 a criterion came back negative or inconclusive
(NotCertified, Unknown, Undetermined, failed check), 1 errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

from .arith import format_rational
from .errors import ConfigError, RilError
from .logexpr import LogExpr, parse_log_value
from .maps import ProjPoint, map_from_json, map_to_json

FAMILY_VERSION = 1
EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2

# keys holding natural-log quantities; rescaled by --log-base for display
LOG_KEYS = {"B_S", "C_S", "B1", "B2", "h_P", "height", "log_delta", "threshold_lower", "threshold_upper"}


# config parsing


def read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise ConfigError(f"{path}.{extra[0]}: unknown field")


def _check_version(obj, path):
    if obj.get("version") != FAMILY_VERSION:
        raise ConfigError(f"{path}.version: expected {FAMILY_VERSION}, got {obj.get('version')!r}")


def family_from_json(obj, path: str = "family"):
    """A MeasuredFamily, or a QuadFamily when ``base`` is ``"Q(t)"``."""
    from .galois import QuadFamily
    from .random_model import MeasuredFamily

    if isinstance(obj, dict) and obj.get("base") == "Q(t)":
        _check_keys(obj, {"version", "base", "c"}, path)
        _check_version(obj, path)
        cs = obj.get("c")
        if not isinstance(cs, list) or not cs:
            raise ConfigError(f"{path}.c: expected a non-empty list of coefficient lists")
        for i, c in enumerate(cs):
            if not isinstance(c, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in c):
                raise ConfigError(f"{path}.c[{i}]: expected a list of integers (lowest degree first)")
        return QuadFamily.over_qt(cs)
    _check_keys(obj, {"version", "base", "maps", "weights", "height_constants"}, path)
    _check_version(obj, path)
    if obj.get("base", "Q") != "Q":
        raise ConfigError(f"{path}.base: expected 'Q' or 'Q(t)'")
    maps_obj = obj.get("maps")
    if not isinstance(maps_obj, list) or not maps_obj:
        raise ConfigError(f"{path}.maps: expected a non-empty list")
    maps = [map_from_json(m, f"{path}.maps[{i}]") for i, m in enumerate(maps_obj)]
    weights = None
    if obj.get("weights") is not None:
        w = obj["weights"]
        if not isinstance(w, list) or len(w) != len(maps):
            raise ConfigError(f"{path}.weights: expected {len(maps)} entries")
        weights = []
        for i, v in enumerate(w):
            try:
                weights.append(Fraction(v) if isinstance(v, str) else Fraction(int(v)))
            except (TypeError, ValueError):
                raise ConfigError(f"{path}.weights[{i}]: expected a rational like \"1/2\"") from None
    consts = None
    if obj.get("height_constants") is not None:
        hc = obj["height_constants"]
        if not isinstance(hc, list) or len(hc) != len(maps):
            raise ConfigError(f"{path}.height_constants: expected {len(maps)} entries")
        consts = []
        for i, v in enumerate(hc):
            if v is None:
                consts.append(None)
                continue
            try:
                consts.append(parse_log_value(v) if isinstance(v, str) else LogExpr.coerce(v))
            except (TypeError, ValueError):
                raise ConfigError(f"{path}.height_constants[{i}]: expected \"ln:q\" or a number") from None
    try:
        return MeasuredFamily(maps, weights, consts)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def family_to_json(family) -> dict:
    from .logexpr import format_log_value

    out = {
        "version": FAMILY_VERSION,
        "maps": [map_to_json(m) for m in family.maps],
        "weights": [format_rational(w) for w in family.weights],
    }
    if family.height_constants is not None:
        out["height_constants"] = [
            None if c is None else format_log_value(LogExpr.coerce(c)) for c in family.height_constants
        ]
    return out


def load_family(path: str):
    return family_from_json(read_json(path), path)


def parse_point(s: str, family=None) -> ProjPoint:
    try:
        P = ProjPoint.parse(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"--point: cannot read {s!r}: {exc}") from None
    if family is not None and P.dim != family.dim:
        raise ConfigError(f"--point: point lives in P^{P.dim}, family acts on P^{family.dim}")
    return P


def parse_prefix(s: str) -> list:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--prefix: expected comma-separated map indices, got {s!r}") from None


def _bound(args):
    if (args.bound is None) == (args.log_bound is None):
        raise ConfigError("give exactly one of --bound and --log-bound")
    if args.bound is not None:
        try:
            return parse_log_value(args.bound), None
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"--bound: cannot read {args.bound!r}") from None
    return None, float(args.log_bound)


# output


def _rescale(obj, factor):
    if isinstance(obj, dict):
        return {
            k: (v / factor if k in LOG_KEYS and isinstance(v, float) else _rescale(v, factor))
            for k, v in obj.items()
        }
    if isinstance(obj, list):
        return [_rescale(v, factor) for v in obj]
    return obj


def emit(obj, args):
    if args.log_base != "e":
        base = float(args.log_base)
        obj = dict(_rescale(obj, math.log(base)), log_base=base)
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(v):
    if isinstance(v, Fraction):
        return format_rational(v)
    if isinstance(v, LogExpr):
        return float(v)
    if hasattr(v, "item"):
        return v.item()
    if isinstance(v, (set, frozenset, tuple)):
        return sorted(v) if isinstance(v, (set, frozenset)) else list(v)
    return int(v)


# subcommands


def cmd_simulate(args):
    from .random_model import SequenceSample, left_orbit, monte_carlo_report, right_orbit, trial_seed

    family = load_family(args.family)
    P = parse_point(args.point, family) if args.direction != "none" else None
    report = monte_carlo_report(
        family, P, args.trials, args.depth, engine=args.engine, seed=args.seed,
        direction=args.direction, exact_cap=args.exact_cap,
    )
    report["family"] = family_to_json(family)
    report["point"] = args.point
    if args.trace_csv:
        if P is None:
            raise ConfigError("--trace-csv needs a direction other than none")
        sample = SequenceSample(family, trial_seed(args.seed, 0))
        orbit = left_orbit if args.direction == "left" else right_orbit
        trace = orbit(family, sample, P, args.depth, args.engine, args.exact_cap)
        with open(args.trace_csv, "w") as fh:
            fh.write(trace.to_csv())
    emit(report, args)
    return EXIT_OK


def cmd_constants(args):
    from .heights import family_constants

    family = load_family(args.family)
    out = family_constants(family).to_json()
    out["family"] = family_to_json(family)
    emit(out, args)
    return EXIT_OK


def cmd_escape_cert(args):
    from .heights import NotCertified, escape_certificate

    family = load_family(args.family)
    P = parse_point(args.point, family)
    cert = escape_certificate(family, P, args.r_max, budget=args.budget)
    if isinstance(cert, NotCertified):
        emit({"kind": "escape-certificate", "status": "NotCertified", "r_max": cert.r_max,
              "reason": cert.reason}, args)
        return EXIT_NEGATIVE
    out = cert.to_json()
    out["status"] = "Certified"
    out["family"] = family_to_json(family)
    out["point"] = args.point
    emit(out, args)
    return EXIT_OK


def cmd_orbit_closure(args):
    from .heights import total_orbit_closure

    family = load_family(args.family)
    P = parse_point(args.point, family)
    res = total_orbit_closure(family, P, max_points=args.max_points, max_depth=args.max_depth)
    out = res.to_json()
    out["family"] = family_to_json(family)
    out["point"] = args.point
    emit(out, args)
    return EXIT_NEGATIVE if res.verdict == "Unknown" else EXIT_OK


def cmd_orbit_count(args):
    from .heights import orbit_height_count
    from .random_model import SequenceSample, left_orbit, right_orbit, trial_seed

    family = load_family(args.family)
    P = parse_point(args.point, family)
    B, log_bound = _bound(args)
    orbit = left_orbit if args.direction == "left" else right_orbit
    counts = []
    for k in range(args.trials):
        sample = SequenceSample(family, trial_seed(args.seed, k))
        trace = orbit(family, sample, P, args.depth, args.engine, args.exact_cap)
        counts.append(orbit_height_count(trace, B=B, log_bound=log_bound))
    ln_B = log_bound if log_bound is not None else math.log(float(B))
    out = {
        "counts": counts,
        "mean": sum(counts) / len(counts),
        "ln_B": ln_B,
        "predicted": ln_B / family.log_delta,
        "log_delta": family.log_delta,
        "seed": args.seed,
        "direction": args.direction,
        "engine": args.engine,
        "depth": args.depth,
    }
    emit(out, args)
    return EXIT_OK


def cmd_monoid_count(args):
    from .monoid import function_count_sandwich, lattice_count_simplex, simplex_asymptotic

    if args.family:
        family = load_family(args.family)
        if args.point is None:
            raise ConfigError("--family needs --point")
        P = parse_point(args.point, family)
        B, log_bound = _bound(args)
        res = function_count_sandwich(family, P, B=B, log_bound=log_bound,
                                      length_cap=args.length_cap, mode=args.mode)
        emit(res.to_json(), args)
        return EXIT_NEGATIVE if res.middle is None else EXIT_OK
    if not args.weights or args.bound is None:
        raise ConfigError("give --weights and --bound, or --family and --point")
    try:
        weights = [parse_log_value(w) for w in args.weights.split(",")]
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"--weights: cannot read {args.weights!r}") from None
    B = parse_log_value(args.bound)
    count = lattice_count_simplex(weights, B)
    asym = simplex_asymptotic(weights, B) if float(B) > 0 else 0.0
    emit({"count": count, "asymptotic": asym, "ratio": count / asym if asym else None,
          "bound": float(B)}, args)
    return EXIT_OK


def _tower_family(args):
    from .galois import QuadFamily

    fam = load_family(args.family)
    if isinstance(fam, QuadFamily):
        return fam
    try:
        return QuadFamily.from_measured(fam)
    except ValueError as exc:
        raise ConfigError(f"{args.family}: {exc}") from None


def _sequences(args, s: int, depth: int):
    from .random_model import SequenceSample, trial_seed

    if args.prefix:
        seq = parse_prefix(args.prefix)
        if any(not 0 <= j < s for j in seq):
            raise ConfigError(f"--prefix: indices must lie in 0..{s - 1}")
        if len(seq) < depth:
            if args.seed is None:
                raise ConfigError("--prefix shorter than --depth; pass --seed to extend it randomly")
            tail = SequenceSample([Fraction(1, s)] * s, trial_seed(args.seed, 0)).prefix(depth)
            seq = seq + [int(j) for j in tail[len(seq):depth]]
        return [seq[:depth]]
    if args.seed is None:
        raise ConfigError("random sequences need --seed (or give --prefix)")
    return [
        [int(j) for j in SequenceSample([Fraction(1, s)] * s, trial_seed(args.seed, k)).prefix(depth)]
        for k in range(args.sequences)
    ]


def cmd_galois_tower(args):
    from .galois import tower_report

    fam = _tower_family(args)
    (seq,) = _sequences(args, len(fam.maps), args.depth)[:1]
    report = tower_report(fam, seq, args.depth)
    report["kind"] = "galois-tower"
    report["family"] = read_json(args.family)
    emit(report, args)
    last = report["levels"][-1]["maximality"]["status"]
    return EXIT_OK if last == "CertifiedMaximal" else EXIT_NEGATIVE


def cmd_galois_ff(args):
    from .galois import BASE_QT, ff_tower_verify, function_field_check

    fam = _tower_family(args)
    if fam.base != BASE_QT:
        raise ConfigError(f"{args.family}: ff-check needs a family over Q(t)")
    cs = [m.b for m in fam.maps]
    check = function_field_check(cs)
    runs = []
    ok = check["passed"]
    for seq in _sequences(args, len(cs), args.depth):
        levels = ff_tower_verify(cs, seq, args.depth)
        passed = all(r["degree_ok"] and r["squarefree"] and r["unit_lead"] and r["new_factor"] for r in levels)
        ok = ok and passed
        runs.append({"sequence": seq, "passed": passed, "levels": levels})
    emit({"kind": "ff-check", "conditions": check, "towers": runs, "passed": ok}, args)
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_verify(args):
    from .galois import tower_report
    from .heights import (
        EscapeCertificate,
        family_constants,
        total_orbit_closure,
        verify_escape_certificate,
    )
    from .logexpr import log_of_int

    cert = read_json(args.cert)
    kind = cert.get("kind") if isinstance(cert, dict) else None
    if kind == "escape-certificate":
        family = family_from_json(cert["family"], f"{args.cert}.family")
        P = parse_point(cert["point"], family)
        witnesses = tuple(
            (tuple(w["string"]), ProjPoint.parse(w["value"]).coords, w["height"]) for w in cert["witnesses"]
        )
        constants = family_constants(family)
        ec = EscapeCertificate(cert["level"], constants.B_S, witnesses, cert["B1"], cert["B2"], 0.0)
        ok = cert.get("B_S_exact") is None or parse_log_value(cert["B_S_exact"]) == constants.B_S
        ok = ok and verify_escape_certificate(family, P, ec, constants)
    elif kind == "orbit-closure":
        family = family_from_json(cert["family"], f"{args.cert}.family")
        P = parse_point(cert["point"], family)
        fresh = total_orbit_closure(family, P).to_json()
        ok = fresh["verdict"] == cert["verdict"]
        if ok and cert["verdict"] == "Finite":
            ok = fresh["set"] == cert["set"]
        elif ok and cert["verdict"] == "InfiniteCertified":
            from .heights import apply_string

            w = cert["witness"]
            value = apply_string(family, tuple(w["string"]), tuple(P.coords))
            ok = (ProjPoint(value) == ProjPoint.parse(w["value"])
                  and log_of_int(max(abs(c) for c in value)) > family_constants(family).B_S)
    elif kind == "galois-tower":
        fam_obj = cert["family"]
        fam = family_from_json(fam_obj, f"{args.cert}.family")
        if not hasattr(fam, "apply"):
            from .galois import QuadFamily

            fam = QuadFamily.from_measured(fam)
        fresh = tower_report(fam, cert["sequence"], len(cert["levels"]))
        ok = fresh["levels"] == cert["levels"]
    else:
        raise ConfigError(f"{args.cert}.kind: cannot verify {kind!r}")
    emit({"kind": kind, "valid": bool(ok)}, args)
    return EXIT_OK if ok else EXIT_NEGATIVE


# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ril", description="Heights and Galois towers of random polynomial dynamics.")
    p.add_argument("--log-base", default="e", help="display base for logarithmic outputs (internal math is natural log)")
    # also accepted after the subcommand
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--log-base", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **kw: _add(*a, parents=[shared], **kw)

    def common(sp, family=True, point=False, out=True):
        if family:
            sp.add_argument("--family", required=True, help="family JSON file")
        if point:
            sp.add_argument("--point", required=True, help='point: "3", "3/2" or "[x:y:...]"')
        if out:
            sp.add_argument("--out", help="write JSON here instead of stdout")

    sp = sub.add_parser("simulate", help="Monte Carlo report over random sequences")
    common(sp, point=True)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--depth", type=int, default=100)
    sp.add_argument("--engine", choices=["exact", "log-approx"], default="log-approx")
    sp.add_argument("--direction", choices=["left", "right", "both", "none"], default="right")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--exact-cap", type=int, default=20)
    sp.add_argument("--trace-csv", help="write the first trial's height trace as CSV")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("constants", help="height-control constants of a family")
    common(sp)
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("escape-cert", help="escape-level certificate for a point")
    common(sp, point=True)
    sp.add_argument("--r-max", type=int, default=8)
    sp.add_argument("--budget", type=int, default=10**6)
    sp.set_defaults(func=cmd_escape_cert)

    sp = sub.add_parser("orbit-closure", help="total orbit: finite set or certified infinite")
    common(sp, point=True)
    sp.add_argument("--max-points", type=int, default=10**5)
    sp.add_argument("--max-depth", type=int, default=64)
    sp.set_defaults(func=cmd_orbit_closure)

    sp = sub.add_parser("orbit-count", help="#{n : h(gamma_n(P)) <= B} along random sequences")
    common(sp, point=True)
    sp.add_argument("--bound", help='height bound B, e.g. "ln:10" or "12.5"')
    sp.add_argument("--log-bound", type=float, help="ln B, for bounds beyond float range")
    sp.add_argument("--depth", type=int, default=400)
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--engine", choices=["exact", "log-approx"], default="log-approx")
    sp.add_argument("--direction", choices=["left", "right"], default="right")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--exact-cap", type=int, default=20)
    sp.set_defaults(func=cmd_orbit_count)

    sp = sub.add_parser("monoid-count", help="weighted simplex counts or the function-count sandwich")
    sp.add_argument("--weights", help='comma-separated weights, e.g. "ln:2,ln:3"')
    sp.add_argument("--bound", help='bound, e.g. "ln:100" (lattice) or height bound (sandwich)')
    sp.add_argument("--log-bound", type=float, help="ln of the height bound (sandwich)")
    sp.add_argument("--family", help="family JSON for the sandwich count")
    sp.add_argument("--point", help="base point for the sandwich count")
    sp.add_argument("--length-cap", type=int, default=12)
    sp.add_argument("--mode", choices=["auto", "free-commutative", "explicit-bfs"], default="auto")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_monoid_count)

    gp = sub.add_parser("galois", help="arithmetic of iterated quadratic towers")
    gsub = gp.add_subparsers(dest="galois_command", required=True)
    _gadd = gsub.add_parser
    gsub.add_parser = lambda *a, **kw: _gadd(*a, parents=[shared], **kw)
    sp = gsub.add_parser("tower", help="discriminants, ramification and certificates per level")
    common(sp)
    sp.add_argument("--prefix", help="comma-separated map indices theta_1, theta_2, ...")
    sp.add_argument("--depth", type=int, default=6)
    sp.add_argument("--seed", type=int, help="extends a short prefix with random indices")
    sp.set_defaults(func=cmd_galois_tower, sequences=1)
    sp = gsub.add_parser("ff-check", help="function-field conditions and per-level tower checks")
    common(sp)
    sp.add_argument("--prefix")
    sp.add_argument("--depth", type=int, default=5)
    sp.add_argument("--sequences", type=int, default=10)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_galois_ff)

    sp = sub.add_parser("verify", help="recompute a certificate's claims from its witnesses")
    sp.add_argument("--cert", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.log_base != "e" and not float(args.log_base) > 1:
            raise ConfigError("--log-base must be 'e' or a number > 1")
        return args.func(args)
    except (RilError, ValueError, KeyError, TypeError) as exc:
        if isinstance(exc, KeyError):
            exc = f"missing field {exc}"
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
