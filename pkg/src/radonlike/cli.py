"""Command-line pipeline: map -> curvature form -> verdict -> optional harnesses.

Exit codes for ``analyze``: 0 nondegenerate, 2 degenerate, 3 inconclusive,
1 error.  The other subcommands exit 0 on success and 1 on error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import fields
from fractions import Fraction

import numpy as np

from . import __version__
from . import diagram, harness, vfields
from .config import REPORT_SCHEMA, AnalysisConfig, env_value, read_input
from .errors import RadonlikeError
from .qcalc import BasisTriple
from .radonmap import (BasePoint, best_exponents, emit_text, extract_q, from_json,
                       hormander_check, model_map, parse_text)

EXIT_OK, EXIT_ERROR, EXIT_DEGENERATE, EXIT_INCONCLUSIVE = 0, 1, 2, 3
STATUS_EXIT = {"Nondegenerate": EXIT_OK, "Degenerate": EXIT_DEGENERATE,
               "Inconclusive": EXIT_INCONCLUSIVE}


# -- JSON helpers -------------------------------------------------------------------

def _num(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def _arr(a):
    return [_arr(r) for r in a] if np.ndim(a) > 0 else _num(a)


def _bases(b: BasisTriple) -> dict:
    return {"u": _arr(b.u), "v": _arr(b.v), "w": _arr(b.w)}


def emit_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def parse_report(text: str) -> dict:
    rep = json.loads(text)
    if rep.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"unknown report schema {rep.get('schema')!r}")
    return rep


def write_atomic(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def series_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau", "value", "stderr"])
    for t, v, s in rows:
        w.writerow([repr(float(t)), repr(float(v)), repr(float(s))])
    return buf.getvalue()


# -- pipeline pieces --------------------------------------------------------------------

def load_map(source: str):
    text, kind = read_input(source)
    return from_json(text) if kind == ".json" else parse_text(text)


def _verdict_config(cfg: AnalysisConfig) -> diagram.VerdictConfig:
    return diagram.VerdictConfig(
        n_samples=cfg.samples, descent_starts=cfg.descent_starts, descent_evals=cfg.descent_evals,
        eps_coef=cfg.eps_coef, margin_floor=cfg.margin_floor, slope_floor=cfg.slope_floor,
        ymax=cfg.ymax, seed=cfg.seed, threads=cfg.threads, tau_max=cfg.tau_max, n_tau=cfg.n_tau)


def verdict_section(v: diagram.Verdict, cfg: AnalysisConfig) -> dict:
    out = {"status": v.status, "search_stats": {k: _num(x) for k, x in v.search_stats.items()},
           "tolerances": {"eps_coef": cfg.eps_coef, "margin_floor": cfg.margin_floor,
                          "slope_floor": cfg.slope_floor, "hull_tol": diagram.HULL_TOL}}
    if v.certificate:
        out["certificate"] = [
            {"bases": _bases(e["bases"]), "bottleneck": _num(e["bottleneck"]),
             "entries": [{"weight": str(w), "triple": [list(a), list(b), list(c)],
                          "margin": _num(m)} for w, (a, b, c), m in e["entries"]]}
            for e in v.certificate]
    if v.witness is not None:
        D1, D2, D3 = v.witness.matrices()
        out["witness"] = {"bases": _bases(v.witness.bases), "eigenvalues": _arr(v.witness.x),
                          "D1": _arr(D1), "D2": _arr(D2), "D3": _arr(D3)}
        r = v.decay
        out["decay"] = {"taus": _arr(r.taus), "log_ratios": _arr(r.log_ratios),
                        "slope": _num(r.slope), "tail_slope": _num(r.tail_slope),
                        "stderr": _num(r.stderr), "accepted": r.accepted}
    return out


def _knapp_witness(Q, v: diagram.Verdict | None, cfg):
    if v is not None and v.witness is not None:
        return v.witness, "verdict witness"
    return harness.least_separated_witness(Q, eps_coef=cfg.eps_coef), "least separated functional"


def knapp_section(Q, v, cfg) -> tuple[dict, list]:
    w, source = _knapp_witness(Q, v, cfg)
    s = harness.knapp_sweep(Q, w, range(cfg.knapp_tau_max + 1), cfg.knapp_samples, cfg.seed,
                            cfg.knapp_method, cfg.threads)
    return {"witness_source": source, "witness_eigenvalues": _arr(w.x),
            "method": cfg.knapp_method, "samples": cfg.knapp_samples,
            "series": [{"tau": t, "ratio": r, "stderr": e} for t, r, e in s.rows()],
            "slope": _num(s.slope), "slope_halfwidth95": _num(s.slope_halfwidth)}, s.rows()


def testing_section(phi, cfg) -> tuple[dict, list]:
    eta = harness.EtaSpec(cfg.eta_kind, cfg.eta_half_width)
    sw = harness.testing_sweep(phi, eta, range(cfg.testing_tau_max + 1), seed=cfg.seed,
                               threads=cfg.threads)
    return {"eta": {"kind": eta.kind, "half_width": eta.half_width},
            "p_dual": str(best_exponents(phi.n, phi.k, phi.d1).p_dual),
            "baseline": _num(sw.baseline),
            "series": [{"tau": t, "sup": v, "error": e} for t, v, e in sw.rows()],
            "max_over_baseline": _num(float(np.max(sw.values)) / sw.baseline),
            "log_slope": _num(sw.slope), "monotone": sw.monotone, "trend": sw.trend,
            "budget_exhausted": sw.budget_exhausted}, sw.rows()


def vfields_section(cfg) -> dict:
    fmap = load_map(cfg.vfields_input)
    d = fmap.n
    probes = vfields.box_probes(d, cfg.vfields_probes, cfg.vfields_lo, cfg.vfields_hi, cfg.seed)
    st = vfields.build(list(fmap.components), probes, cfg.vfields_generations)
    gens = []
    for N in range(1, st.N + 1):
        r = vfields.verify_identities(st, N)
        g = st.generations[N - 1]
        gens.append({"N": N, "minor": [i + 1 for i in g.minor],
                     "family_size": len(st.families[N]),
                     "expected_size": vfields.component_count(fmap.k, d, N),
                     "kronecker_exact": r.kronecker_exact, "determinant_exact": r.determinant_exact,
                     "kronecker_residual": r.kronecker_residual,
                     "determinant_residual": r.determinant_residual,
                     "sup_abs": r.sup_abs, "coef_sup": r.coef_sup,
                     "decomposition_residual": r.decomposition_residual,
                     "probes_inside": r.n_inside, "probes_excluded": r.n_excluded,
                     "passed": r.passed})
    g1 = st.generations[0]
    m = 64 if d <= 2 else 16
    axis = cfg.vfields_lo + (np.arange(m) + 0.5) / m * (cfg.vfields_hi - cfg.vfields_lo)
    grid = np.array(np.meshgrid(*[axis] * d, indexing="ij")).reshape(d, -1).T
    cheb = vfields.chebyshev_subset(np.ones(len(grid)), g1.jac.eval_many(grid), g1.guard(grid))
    return {"input": cfg.vfields_input, "m": fmap.k, "d": d, "generations": gens,
            "chebyshev_ratio": cheb.ratio, "tolerance": vfields.CHECK_TOL,
            "passed": all(g["passed"] and g["family_size"] == g["expected_size"] for g in gens)}


def analyze(cfg: AnalysisConfig) -> tuple[dict, int, dict]:
    phi = load_map(cfg.input)
    p = BasePoint.parse(cfg.point, phi)
    Q, Z = extract_q(phi, p)
    ex = best_exponents(phi.n, phi.k, phi.d1)
    span, ok = hormander_check(phi, p)
    v = diagram.verdict(Q, _verdict_config(cfg))
    report = base_report("analyze", cfg, phi, p)
    report["form"] = {"dims": list(Q.dims), "coeffs": _arr(Q.coeffs), "norm": _num(Q.norm),
                      "kernel_basis": _arr(Z),
                      "kernel_convention": "projected standard basis, greedy Gram-Schmidt"}
    report["exponents"] = {"p_b": str(ex.p_b), "q_b": str(ex.q_b),
                           "p_dual": str(ex.p_dual), "q_dual": str(ex.q_dual)}
    report["hormander"] = {"span_dimension": int(span), "spans": bool(ok)}
    report["verdict"] = verdict_section(v, cfg)
    sidecars = {}
    if cfg.with_harness:
        report["knapp"], sidecars["knapp"] = knapp_section(Q, v, cfg)
    if cfg.with_testing:
        report["testing"], sidecars["testing"] = testing_section(phi, cfg)
    if cfg.with_vfields:
        report["vfields"] = vfields_section(cfg)
    return report, STATUS_EXIT[v.status], sidecars


def base_report(command, cfg, phi=None, p=None) -> dict:
    rep = {"schema": REPORT_SCHEMA, "version": __version__, "command": command,
           "config": cfg.echo()}
    if phi is not None:
        rep["map"] = {"n": phi.n, "d1": phi.d1, "k": phi.k, "text": emit_text(phi)}
    if p is not None:
        rep["point"] = {"x": list(p.x), "t": list(p.t)}
    return rep


def run_command(command: str, cfg: AnalysisConfig) -> tuple[dict, int, dict]:
    cfg.validate()
    if command == "analyze":
        return analyze(cfg)
    if command == "vfields":
        rep = base_report("vfields", cfg)
        rep["vfields"] = vfields_section(cfg)
        return rep, EXIT_OK, {}
    phi = load_map(cfg.input)
    p = BasePoint.parse(cfg.point, phi)
    rep = base_report(command, cfg, phi, p)
    if command == "knapp":
        Q, _ = extract_q(phi, p)
        model_map(phi, p)                      # rank check on the model as well
        v = diagram.verdict(Q, _verdict_config(cfg))
        rep["verdict_status"] = v.status
        rep["knapp"], rows = knapp_section(Q, v, cfg)
        return rep, EXIT_OK, {"knapp": rows}
    if command == "testing":
        rep["testing"], rows = testing_section(phi, cfg)
        return rep, EXIT_OK, {"testing": rows}
    raise ValueError(f"unknown command {command!r}")


# -- argument parsing --------------------------------------------------------------------

_HELP = {
    "input": "polynomial map file (.poly text or .json) or corpus:NAME",
    "point": "base point 'x1,...,xn;t1,...,td1' (default: origin)",
    "seed": "random seed",
    "threads": "worker threads (results do not depend on it)",
    "samples": "orthonormal basis triples sampled by the verdict search",
    "descent_starts": "descent runs started from the worst samples",
    "descent_evals": "optimizer evaluations per descent run",
    "tau_max": "witness check grid runs over [0, tau_max]",
    "n_tau": "points on the witness check grid",
    "eps_coef": "coefficients below eps*||Q||^s count as zero",
    "margin_floor": "bottleneck margin needed for a nondegenerate verdict",
    "slope_floor": "decay slope a witness must beat",
    "ymax": "box for the rescaling variables in the surrogate",
    "with_harness": "run the Knapp incidence-ratio sweep",
    "knapp_samples": "Monte Carlo samples per tau",
    "knapp_tau_max": "Knapp sweep over tau = 0..N",
    "knapp_method": "montecarlo or grid",
    "with_testing": "run the testing-integral sweep",
    "testing_tau_max": "testing sweep over stretch tau = 0..N",
    "eta_kind": "cutoff kind: box or bump",
    "eta_half_width": "cutoff half-width in the parameter variables",
    "with_vfields": "run the vector-field identity checks",
    "vfields_input": "function list for the vector-field checks",
    "vfields_generations": "generations to build (1..3)",
    "vfields_probes": "probe points in the box",
    "vfields_lo": "probe box lower corner",
    "vfields_hi": "probe box upper corner",
}


def _add_config_args(p: argparse.ArgumentParser):
    for f in fields(AnalysisConfig):
        flag = "--" + f.name.replace("_", "-")
        default = env_value(f.name, f.default)
        if isinstance(f.default, bool):
            p.add_argument(flag, action="store_true", default=default, help=_HELP.get(f.name))
        else:
            p.add_argument(flag, type=type(f.default), default=default, help=_HELP.get(f.name))
    p.add_argument("--out", default=os.environ.get("RADONLIKE_OUT"),
                   help="write the JSON report here (CSV sidecars alongside)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radonlike", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")
    for name, text in (("analyze", "full pipeline (default)"),
                       ("knapp", "Knapp incidence-ratio sweep only"),
                       ("testing", "testing-integral sweep only"),
                       ("vfields", "vector-field construction and checks only")):
        _add_config_args(sub.add_parser(name, help=text))
    return parser


def config_from_args(args) -> AnalysisConfig:
    return AnalysisConfig(**{f.name: getattr(args, f.name) for f in fields(AnalysisConfig)})


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0].startswith("-") and argv[0] not in ("-h", "--help", "--version"):
        argv = ["analyze"] + argv
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        report, code, sidecars = run_command(args.command, cfg)
    except (RadonlikeError, ValueError, FileNotFoundError) as exc:
        print(f"radonlike: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = emit_report(report)
    if args.out:
        write_atomic(args.out, text)
        stem = args.out[:-5] if args.out.endswith(".json") else args.out
        for name, rows in sorted(sidecars.items()):
            write_atomic(f"{stem}.{name}.csv", series_csv(rows))
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
