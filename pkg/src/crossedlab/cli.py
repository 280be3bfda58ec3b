"""Command-line experiment runner.

Configs are INI files: an [experiment] section (name, seed), [group],
[algebra], [action] and [params]. Element literals are JSON lists of
[group element, coefficient] pairs, e.g. ``element = [[1, 1], [-1, 1]]``.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import datetime as _dt
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .coeff import (ScalarAlgebra, make_action, matrix_lift, scale_schwartz, schwartz_Z)
from .crossed import CrossedContext, kernel_derivation_bound
from .groups import ball_sizes, gauge_dominates, gauge_for, make_group
from .smoothk import (crossed_to_smooth_compact, matrix_unit, sk_ideal_bound, sk_seminorm)
from . import spectra, verify

SCHEMA = 1
SUBCOMMANDS = ("growth", "gauge", "specrad", "cstar", "wiener", "smoothk", "verify", "katznelson",
               "pytlik", "derivation", "all")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config


def load_config(path: str | None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        cp.read(path)
    for sec in ("experiment", "group", "algebra", "action", "params"):
        if not cp.has_section(sec):
            cp.add_section(sec)
    return cp


def _get(cp, sec, key, default=None, kind=str):
    if not cp.has_option(sec, key):
        return default
    raw = cp.get(sec, key)
    try:
        if kind is bool:
            return cp.getboolean(sec, key)
        if kind == "json":
            return json.loads(raw)
        return kind(raw)
    except (ValueError, json.JSONDecodeError) as e:
        raise ConfigError(f"[{sec}] {key} = {raw!r}: {e}") from None


def build_group(cp, default="Z"):
    return make_group(_get(cp, "group", "kind", default))


def build_algebra(cp, default="scalar"):
    kind = _get(cp, "algebra", "kind", default)
    if kind == "scalar":
        return ScalarAlgebra(exact=_get(cp, "algebra", "exact", False, bool))
    if kind == "schwartz_Z":
        return schwartz_Z(_get(cp, "algebra", "N", 16, int))
    if kind == "scale_schwartz":
        M = _get(cp, "algebra", "points", [0, 1, 2], "json")
        sigma = _get(cp, "algebra", "sigma", list(range(len(M))), "json")
        return scale_schwartz(M, sigma)
    if kind == "matrix":
        base = _get(cp, "algebra", "base", "scalar")
        l = _get(cp, "algebra", "l", 2, int)
        b = ScalarAlgebra() if base == "scalar" else schwartz_Z(_get(cp, "algebra", "N", 16, int))
        return matrix_lift(b, l)
    raise ConfigError(f"unknown algebra kind {kind!r}")


def build_context(cp, group_default="Z", algebra_default="scalar", exact_default=False):
    G = build_group(cp, group_default)
    if not cp.has_option("algebra", "kind"):
        alg = ScalarAlgebra(exact=_get(cp, "algebra", "exact", exact_default, bool)) \
            if algebra_default == "scalar" else build_algebra(cp, algebra_default)
    else:
        alg = build_algebra(cp)
    rule = _get(cp, "action", "rule", "trivial")
    act = make_action(G, alg, rule, fit=False)
    return CrossedContext(G, alg, act)


def parse_element(ctx: CrossedContext, literal, exact: bool = False):
    if isinstance(literal, str):
        literal = json.loads(literal)
    pairs = []
    for g, a in literal:
        g = ctx.key(g) if not isinstance(g, list) else ctx.group.from_json(g)
        if isinstance(a, list) and len(a) == 2 and isinstance(ctx.algebra, ScalarAlgebra):
            a = complex(a[0], a[1])
        elif isinstance(a, str):
            a = Fraction(a) if exact else complex(a)
        elif isinstance(a, float) and exact:
            a = Fraction(a)
        pairs.append((g, a))
    return ctx.element(pairs)


def _generators_element(ctx, weight):
    return ctx.element([(u, weight) for u in ctx.group.generators])


# ---------------------------------------------------------------- JSON helpers


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        x = float(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# ---------------------------------------------------------------- experiments
# each returns (report dict, verdict bool, csv tables {name: (header, rows)})


def exp_growth(cp, seed):
    G = build_group(cp, "heisenberg")
    n_max = _get(cp, "params", "n_max", 14, int)
    rep = ball_sizes(G, n_max)
    out = {"group": G.descriptor(), "growth": rep.to_dict()}
    ok = rep.classification != "inconclusive"
    lo = _get(cp, "params", "expect_degree_min", None, float)
    hi = _get(cp, "params", "expect_degree_max", None, float)
    if lo is not None or hi is not None:
        ok = ok and (lo is None or rep.degree >= lo) and (hi is None or rep.degree <= hi)
        out["expect"] = [lo, hi]
    rows = [[n, s] for n, s in enumerate(rep.sizes)]
    return out, ok, {"growth": (["n", "ball_size"], rows)}


def exp_gauge(cp, seed):
    G = build_group(cp, "heisenberg")
    R = _get(cp, "params", "R", 8, int)
    pairs = _get(cp, "params", "pairs", 100_000, int)
    ga = gauge_for(G)
    ball = ga.ball(R)
    rng = verify.rng_stream(seed, "gauge")
    ia = rng.integers(len(ball), size=pairs)
    ib = rng.integers(len(ball), size=pairs)
    fails = []
    tau = ga.word_length
    if tau(G.identity) != 0:
        fails.append(["identity", G.to_json(G.identity)])
    for i, j in zip(ia, ib):
        g, h = ball[i], ball[j]
        if tau(G.mul(g, h)) > tau(g) + tau(h):
            fails.append(["subadditive", G.to_json(g), G.to_json(h)])
        if tau(G.inv(g)) != tau(g):
            fails.append(["symmetric", G.to_json(g)])
        if len(fails) > 10:
            break
    out = {"group": G.descriptor(), "radius": R, "pairs": pairs, "failures": fails}
    alt = _get(cp, "params", "alt_generators", None, "json")
    ok = not fails
    if alt is not None:
        from .groups import Gauge
        other = Gauge(G, tuple(G.from_json(u) for u in alt))
        sample = ga.ball(_get(cp, "params", "dom_radius", 20, int))
        d1 = gauge_dominates(ga, other, sample)
        d2 = gauge_dominates(other, ga, sample)
        out["domination"] = {"forward": [d1.C, d1.d, d1.ok], "backward": [d2.C, d2.d, d2.ok]}
        ok = ok and d1.ok and d2.ok
    return out, ok, {}


def exp_specrad(cp, seed):
    exact = _get(cp, "algebra", "exact", True, bool)
    ctx = build_context(cp, "Z", exact_default=exact)
    lit = _get(cp, "params", "element", [[1, 1], [-1, 1]], "json")
    phi = parse_element(ctx, lit, exact=getattr(ctx.algebra, "exact", False))
    d = _get(cp, "params", "d", 0, int)
    m = _get(cp, "params", "m", 0, int)
    n_max = _get(cp, "params", "n_max", 64, int)
    rep = spectra.spectral_radius(phi, d, m, n_max)
    out = {"element": phi.to_json(), "report": rep.to_dict()}
    ok = not rep.partial
    exp = _get(cp, "params", "expect", None, float)
    if exp is not None:
        tol = _get(cp, "params", "expect_tol", 1e-12, float)
        ok = ok and abs(float(rep.estimate) - exp) <= tol * max(1.0, exp)
    rows = [[n, float(v)] for n, v in rep.sequence]
    return out, ok, {"specrad": (["n", "value"], rows)}


def exp_cstar(cp, seed):
    ctx = build_context(cp, "Z")
    lit = _get(cp, "params", "element", None, "json")
    phi = parse_element(ctx, lit) if lit is not None else _generators_element(ctx, 1.0)
    R = _get(cp, "params", "R", 16, int)
    out = {"element": phi.to_json()}
    comp = spectra.cstar_compression(phi, R, seed=seed)
    out["compression"] = comp.to_dict()
    ok = comp.converged
    try:
        four = spectra.cstar_fourier(phi, _get(cp, "params", "grid", None, int))
        out["fourier"] = four.to_dict()
        ok = ok and comp.value <= four.value + four.error + comp.error
    except spectra.UnsupportedMethod as e:
        out["fourier"] = {"unsupported": str(e)}
    lo = _get(cp, "params", "expect_min", None, float)
    hi = _get(cp, "params", "expect_max", None, float)
    if lo is not None:
        ok = ok and comp.value >= lo
    if hi is not None:
        ok = ok and comp.value <= hi
    return out, ok, {}


def exp_wiener(cp, seed):
    ctx = build_context(cp, "Z")
    lit = _get(cp, "params", "element", [[0, 1], [1, -0.3], [-1, -0.3]], "json")
    x = parse_element(ctx, lit)
    tol = _get(cp, "params", "tol", 1e-10, float)
    d_max = _get(cp, "params", "d_max", 6, int)
    inv, cert = spectra.neumann_inverse(x, tol=tol, d_max=d_max)
    out = {"element": x.to_json(), "certificate": cert.to_dict(), "inverse_support": len(inv)}
    rows = [[ctx.group.to_json(g), abs(complex(a))] for g, a in inv.items()]
    return out, cert.ok, {"inverse": (["g", "abs_coefficient"], rows)}


def exp_smoothk(cp, seed):
    q_max = _get(cp, "params", "q_max", 4, int)
    n_max = _get(cp, "params", "n_max", 5, int)
    chains = _get(cp, "params", "chains", 100, int)
    demo = matrix_unit(0, 0) + matrix_unit(1, 2) * 0.5 + matrix_unit(-2, 1) * 0.25
    table = [[q, float(sk_seminorm(demo, q))] for q in range(q_max + 1)]
    chain = verify.check_sk_chain(verify.smooth_compact_sampler(), n_max, q_max, chains, seed)
    ideal = sk_ideal_bound(matrix_unit(0, 1), demo, matrix_unit(2, 0) + matrix_unit(1, 1))
    Z = make_group("Z")
    A = schwartz_Z(_get(cp, "params", "N", 12, int))
    ctx = CrossedContext(Z, A, make_action(Z, A, "translation", fit=False))
    rng = verify.rng_stream(seed, "smoothk")
    samp = verify.crossed_sampler(ctx, verify.function_sampler(A, radii=(2, 3)), radii=(1, 2))
    err = 0.0
    for _ in range(_get(cp, "params", "intertwine_samples", 20, int)):
        f, g = samp(rng), samp(rng)
        lhs = crossed_to_smooth_compact(ctx.mul(f, g))
        rhs = crossed_to_smooth_compact(f) * crossed_to_smooth_compact(g)
        diff = lhs - rhs
        err = max(err, float(sk_seminorm(diff, 0)) / max(1.0, float(sk_seminorm(lhs, 0))))
    out = {"seminorms": table, "chain": chain.to_dict(), "ideal": ideal.to_dict(), "intertwining_error": err}
    ok = chain.verdict and ideal.ok and err <= 1e-12
    return out, ok, {"smoothk_seminorms": (["q", "seminorm"], table)}


def exp_verify(cp, seed):
    kind = _get(cp, "algebra", "kind", "schwartz_Z")
    if not cp.has_option("algebra", "kind"):
        cp.set("algebra", "kind", kind)
    alg = build_algebra(cp)
    n_max = _get(cp, "params", "n_max", 6, int)
    m_max = _get(cp, "params", "m_max", 4, int)
    chains = _get(cp, "params", "chains", 200, int)
    if kind == "scalar":
        sampler = verify.scalar_sampler()
    elif kind == "matrix":
        base = alg.base
        bs = verify.scalar_sampler() if isinstance(base, ScalarAlgebra) else verify.function_sampler(base)
        sampler = verify.matrix_sampler(alg, bs)
    else:
        sampler = verify.function_sampler(alg)
    rep = verify.check_strong_spec_inv(alg, sampler, n_max, m_max, chains, seed)
    bc = verify.check_bc_condition(alg, sampler, m_max, seed=seed)
    out = {"algebra": alg.name, "strong_spectral_invariance": rep.to_dict(), "blackadar_cuntz": bc.to_dict()}
    return out, rep.verdict and bc.verdict, {}


def exp_katznelson(cp, seed):
    r_values = _get(cp, "params", "r_values", list(range(11)), "json")
    rows = verify.katznelson_demo(r_values)
    ref = verify.katznelson_refutation()
    table = [[x.r, x.l1, x.oracle, x.cstar, x.bound] for x in rows]
    ok = all(abs(x.cstar - 1) <= 1e-8 and abs(x.l1 - x.oracle) <= 1e-8 and x.l1 <= x.bound * (1 + 1e-12)
             for x in rows) and ref.all_violated
    out = {"table": [x.to_dict() for x in rows], "refutation": ref.to_dict()}
    return out, ok, {"katznelson": (["r", "l1", "bessel_oracle", "cstar", "exp_r"], table)}


def exp_pytlik(cp, seed):
    exact = _get(cp, "algebra", "exact", True, bool)
    ctx = build_context(cp, "Z", exact_default=exact)
    lit = _get(cp, "params", "element", [[1, 1], [-1, 1]], "json")
    phi = parse_element(ctx, lit, exact=getattr(ctx.algebra, "exact", False))
    n_max = _get(cp, "params", "n_max", 32, int)
    rep = spectra.pytlik_ratio(phi, n_max)
    out = {"element": phi.to_json(), "ratios": rep.to_dict()}
    ok = True
    if _get(cp, "params", "split", True, bool) and ctx.group.kind in ("free-abelian", "heisenberg"):
        fctx = CrossedContext(ctx.group)
        psi = fctx.element([(g, complex(a)) for g, a in phi.items()])
        e = ctx.group.identity
        u = ctx.group.generators[0]
        f1 = fctx.element([(e, 1.0), (u, 1.0)])
        f2 = fctx.element([(e, 1.0), (u, -1.0)])
        q = _get(cp, "params", "q", 2, int)
        growth = ball_sizes(ctx.group, 10)
        splits = [spectra.pytlik_split_bound(psi, f1, f2, q, m, growth=growth, compression_R=0)
                  for m in range(1, 11)]
        out["split"] = [s.to_dict() for s in splits]
        ok = all(s.ok for s in splits)
    rows = [[n, float(a)] for n, a in enumerate(rep.ratios)]
    return out, ok, {"pytlik": (["n", "a_n"], rows)}


def exp_derivation(cp, seed):
    ctx = build_context(cp, "Z")
    lit = _get(cp, "params", "element", [[2, 1]], "json")
    phi = parse_element(ctx, lit)
    k = _get(cp, "params", "k", 2, int)
    R = _get(cp, "params", "R", 4, int)
    chk = spectra.derivation_check(phi, k, R)
    kb = kernel_derivation_bound(phi, R)
    out = {"element": phi.to_json(), "k": k, "R": R, "check": chk.to_dict(),
           "kernel_bound": {"schur": kb.schur, "bound": kb.bound, "ok": kb.ok}}
    return out, chk.ok and kb.ok, {}


EXPERIMENTS = {
    "growth": exp_growth, "gauge": exp_gauge, "specrad": exp_specrad, "cstar": exp_cstar,
    "wiener": exp_wiener, "smoothk": exp_smoothk, "verify": exp_verify, "katznelson": exp_katznelson,
    "pytlik": exp_pytlik, "derivation": exp_derivation,
}


# ---------------------------------------------------------------- driver


def run(sub: str, cp: configparser.ConfigParser, seed: int) -> tuple[dict, bool, dict]:
    if sub == "all":
        reports, tables, ok = {}, {}, True
        for name, fn in EXPERIMENTS.items():
            fresh = configparser.ConfigParser(interpolation=None)
            for sec in ("experiment", "group", "algebra", "action", "params"):
                fresh.add_section(sec)
            rep, v, tb = fn(fresh, seed)
            reports[name] = {"verdict": "pass" if v else "fail", "report": rep}
            tables.update(tb)
            ok = ok and v
        return reports, ok, tables
    return EXPERIMENTS[sub](cp, seed)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([json.dumps(_clean(x)) if isinstance(x, (list, tuple)) else _clean(x) for x in r])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crossedlab", description="Smooth crossed product experiments.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="INI config file")
    p.add_argument("--out", help="directory for JSON/CSV artifacts")
    p.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    p.add_argument("--json", action="store_true", help="print the JSON report to stdout")
    p.add_argument("--csv", action="store_true", help="write CSV tables (needs --out)")
    p.add_argument("--quiet", action="store_true", help="suppress the text summary")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    try:
        cp = load_config(args.config)
        seed = args.seed if args.seed is not None else _get(cp, "experiment", "seed", 0, int)
        name = _get(cp, "experiment", "name", args.subcommand)
        report, ok, tables = run(args.subcommand, cp, seed)
    except Exception as e:  # any failure to execute is exit code 2
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    doc = _clean({"schema": SCHEMA, "experiment": name, "subcommand": args.subcommand, "seed": seed,
                  "verdict": "pass" if ok else "fail", "report": report})
    text = json.dumps(doc, sort_keys=True, indent=2)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, f"{name}.json"), "w") as fh:
            fh.write(text + "\n")
        meta = {"schema": SCHEMA, "version": __version__, "seed": seed, "argv": list(argv or sys.argv[1:]),
                "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat()}
        with open(os.path.join(args.out, f"{name}.meta.json"), "w") as fh:
            fh.write(json.dumps(meta, sort_keys=True, indent=2) + "\n")
        if args.csv:
            for tname, (header, rows) in tables.items():
                _write_csv(os.path.join(args.out, f"{tname}.csv"), header, rows)
    if args.json:
        print(text)
    elif not args.quiet:
        print(f"experiment: {name}")
        print(f"seed: {seed}")
        for line in _summary(args.subcommand, report):
            print(line)
        print(f"verdict: {'pass' if ok else 'fail'}")
    return 0 if ok else 1


def _summary(sub, report) -> list:
    r = _clean(report)
    if sub == "all":
        return [f"{k}: {v['verdict']}" for k, v in r.items()]
    if sub == "growth":
        g = r["growth"]
        return [f"degree: {g['degree']:.4f}", f"classification: {g['classification']}",
                f"sizes: {' '.join(map(str, g['sizes']))}"]
    if sub == "specrad":
        return [f"estimate: {r['report']['estimate']}", f"last: {r['report']['last']}"]
    if sub == "cstar":
        out = [f"compression: {r['compression']['value']:.10f}"]
        if "value" in r.get("fourier", {}):
            out.append(f"fourier: {r['fourier']['value']:.10f} +- {r['fourier']['error']:.3g}")
        return out
    if sub == "wiener":
        c = r["certificate"]
        return [f"terms: {c['terms']}", f"residual: {c['residual']:.3e}"]
    if sub == "verify":
        s = r["strong_spectral_invariance"]
        return [f"C: {s['C']}", f"D: {s['D']}", f"p: {s['p']}", f"bc_C: {r['blackadar_cuntz']['C']}"]
    if sub == "katznelson":
        return [f"r={row['r']:g} l1={row['l1']:.10f} cstar={row['cstar']:.12f}" for row in r["table"]]
    if sub == "pytlik":
        return [f"limsup: {r['ratios']['limsup']}"]
    if sub == "derivation":
        return [f"max_diff: {r['check']['max_diff']:.3e}"]
    if sub == "gauge":
        return [f"failures: {len(r['failures'])}"]
    if sub == "smoothk":
        return [f"intertwining_error: {r['intertwining_error']:.3e}"]
    return []


if __name__ == "__main__":
    sys.exit(main())
