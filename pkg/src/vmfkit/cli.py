"""Command-line interface: ``vmfkit <command> [flags]``.

Commands
--------
profile   solve the radial ODE and tabulate ``psi, psi', psi''`` and the trace residual
compare   closed-form approximations against the ODE solution (long-format CSV)
kappa     concentration from a mean resultant length (single value or grid)
cluster   seeded movMF fits on a sparse matrix file with NMI summary
sample    draw a labeled synthetic vMF mixture
tfidf     embed a directory corpus into sparse matrix and vocabulary files

Every output file gets a ``<file>.manifest.json`` sidecar.  Exit codes:
0 success, 2 invalid flags or input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, approx, corpus, movmf
from .approx import Level
from .exceptions import (
    DenominatorSingular,
    NonPositiveDenominator,
    NotConverged,
    StepSizeUnderflow,
    VmfkitError,
)
from .kappa import KappaMethod, MethodKind, default_method, estimate_kappa_full
from .ode import Mode, SolverConfig, psi_zero, solve_difference_profile, solve_profile, trace_residual
from .vmf import PsiSource, VmfDistribution, sample

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

_NUMERICAL = (NotConverged, StepSizeUnderflow, DenominatorSingular, NonPositiveDenominator, ArithmeticError)


class UsageError(VmfkitError, ValueError):
    """Invalid flag combination."""


# ---------------------------------------------------------------------------
# helpers


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return x


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def write_manifest(out_path, args, started, seeds=(), extra=None):
    flags = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}
    doc = {
        "command": args.command,
        "flags": flags,
        "seeds": list(seeds),
        "version": __version__,
        "output": str(out_path),
        "wall_clock_seconds": round(time.perf_counter() - started, 6),
    }
    if extra:
        doc.update(extra)
    Path(f"{out_path}.manifest.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _grid(n, lo, hi):
    if n < 1:
        raise UsageError("--grid must be >= 1")
    return np.linspace(lo, hi, n) if n > 1 else np.array([hi])


def _solver(args, checkpoints, mode=Mode.DIRECT):
    return SolverConfig(
        abs_tol=args.tol,
        rel_tol=args.tol,
        initial_slope_eps=args.eps,
        checkpoints=tuple(checkpoints),
        mode=mode,
    )


# ---------------------------------------------------------------------------
# commands


def cmd_profile(args):
    started = time.perf_counter()
    if args.checkpoints:
        rs = np.array(sorted(args.checkpoints))
    else:
        rs = _grid(args.grid, 0.0, args.r_max)
    cps = [r for r in rs if r > 0] or [args.r_max]
    mode = Mode(args.mode)
    if mode is Mode.DIRECT:
        prof = solve_profile(args.dim, _solver(args, cps))
    else:
        prof = solve_difference_profile(args.dim, _solver(args, cps, mode), approx.ApproxFamily(args.dim, Level.TILDE1))
    rows = []
    for r in rs:
        psi, psi1, psi2 = prof.evaluate(r)
        rows.append((r, psi, psi1, psi2, abs(trace_residual(args.dim, r, psi1))))
    write_csv(args.out, ["r", "psi", "psi1", "psi2", "trace_residual"], rows)
    write_manifest(args.out, args, started, extra={"epsilon": prof.epsilon, "nodes": len(prof.r)})
    return EXIT_OK


def _compare_rows(D, rs, quantities, tilde_level):
    prof = solve_profile(D, SolverConfig(checkpoints=tuple(rs)))
    p0 = psi_zero(D)
    tilde_first = approx.tilde1_prime if tilde_level == 1 else approx.tilde2_prime
    for r in rs:
        psi, psi1, _ = prof.evaluate(r)
        ode_q = {"psi": psi, "psi1": psi1, "bregman0": r * psi1 - psi + p0}
        b_q = {
            "psi": approx.psi_b(D, r),
            "psi1": approx.psi_b_prime(D, r),
        }
        b_q["bregman0"] = r * b_q["psi1"] - b_q["psi"] + p0
        t_q = {"psi": approx.tilde1_value(D, r), "psi1": tilde_first(D, r)}
        t_q["bregman0"] = r * t_q["psi1"] - t_q["psi"] + p0
        levels = {"psi": "tilde1", "psi1": f"tilde{tilde_level}", "bregman0": f"tilde1+tilde{tilde_level}"}
        for q in quantities:
            ref, b, t = ode_q[q], b_q[q], t_q[q]
            eb, et = b - ref, t - ref
            scale = abs(ref) if ref != 0 else float("nan")
            yield (D, r, q, ref, b, t, levels[q], abs(eb), abs(eb) / scale, abs(et), abs(et) / scale, eb / scale, et / scale)


COMPARE_HEADER = [
    "D", "r", "quantity", "ode_value", "psiB", "tilde", "tilde_level",
    "abs_err_B", "rel_err_B", "abs_err_tilde", "rel_err_tilde", "signed_rel_err_B", "signed_rel_err_tilde",
]


def cmd_compare(args):
    started = time.perf_counter()
    quantities = [q.strip() for q in args.quantities.split(",") if q.strip()]
    bad = set(quantities) - {"psi", "psi1", "bregman0"}
    if bad:
        raise UsageError(f"unknown quantities: {sorted(bad)}")
    rs = _grid(args.grid, args.r_min, args.r_max)
    rows = [row for D in args.dims for row in _compare_rows(D, rs, quantities, args.tilde_level)]
    write_csv(args.out, COMPARE_HEADER, rows)
    write_manifest(args.out, args, started)
    return EXIT_OK


def _newton(args):
    base = default_method(args.dim)
    if base.kind is not MethodKind.NEWTON_RAPHSON:
        base = KappaMethod.newton_raphson(2, 20)
    steps = base.steps if args.nr_steps is None else args.nr_steps
    depth = base.depth if args.cf_depth is None else args.cf_depth
    return KappaMethod.newton_raphson(steps, depth)


def _method(args):
    name = args.method
    if name == "nr":
        return _newton(args)
    if name == "ode":
        return KappaMethod.ode_profile()
    return KappaMethod.closed_form({"b": Level.B, "tilde1": Level.TILDE1, "tilde2": Level.TILDE2}[name])


def cmd_kappa(args):
    started = time.perf_counter()
    method = _method(args)
    if args.rbar is not None:
        est = estimate_kappa_full(args.dim, args.rbar, method)
        print(f"kappa={est.kappa!r} residual={est.residual!r} method={method.label()}")
        return EXIT_OK
    if args.out is None:
        raise UsageError("--grid needs --out")
    rs = _grid(args.grid, args.r_min, args.r_max)
    est = estimate_kappa_full(args.dim, rs, method)
    ref = estimate_kappa_full(args.dim, rs, _newton(args))
    rows = zip(rs, est.kappa, est.residual, ref.kappa, np.abs(est.kappa - ref.kappa) / ref.kappa)
    write_csv(args.out, ["r", "kappa", "residual", "kappa_nr", "rel_diff_nr"], rows)
    write_manifest(args.out, args, started, extra={"method": method.label()})
    return EXIT_OK


def cmd_cluster(args):
    started = time.perf_counter()
    ids, labels, X = corpus.read_matrix(args.data)
    if args.labels is not None:
        labels = [line.strip() for line in Path(args.labels).read_text().splitlines() if line.strip()]
        if len(labels) != len(ids):
            raise UsageError(f"{len(labels)} labels for {len(ids)} datapoints")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    space = movmf.ParamSpace.MEAN if args.method == "bregman" else movmf.ParamSpace.NATURAL
    seeds = list(range(args.seed, args.seed + args.seeds))
    summary = []
    for seed in seeds:
        cfg = movmf.FitConfig(
            iterations=args.iters,
            assignment=args.assign,
            seed=seed,
            init=args.init,
            param_space=space,
            tied=args.tied,
            psi_source=args.psi,
        )
        res = movmf.fit(X, args.k, cfg)
        stem = f"{args.method}_{args.assign}_{'tied' if args.tied else 'free'}_K{args.k}_seed{seed}"
        model_path = out / f"{stem}.model.json"
        movmf.save_model(res.model, model_path)
        write_manifest(model_path, args, started, seeds=[seed])
        trace_path = out / f"{stem}.objective.csv"
        write_csv(trace_path, ["iteration", "objective"], enumerate(res.objective))
        write_manifest(trace_path, args, started, seeds=[seed])
        score = movmf.nmi(labels, res.labels)
        summary.append((args.method, args.assign, int(args.tied), args.k, seed, score, res.objective[-1]))
    summary_path = out / "nmi_summary.csv"
    write_csv(summary_path, ["method", "assign", "tied", "K", "seed", "nmi", "final_objective"], summary)
    write_manifest(summary_path, args, started, seeds=seeds)
    print(f"mean_nmi={float(np.mean([s[5] for s in summary]))!r}")
    return EXIT_OK


def cmd_sample(args):
    started = time.perf_counter()
    kappas = args.components
    K = len(kappas)
    if K < 1 or args.n < K:
        raise UsageError("need at least one component and n >= number of components")
    rng = np.random.default_rng(args.seed)
    dirs = rng.standard_normal((K, args.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    sizes = [args.n // K + (1 if k < args.n % K else 0) for k in range(K)]
    blocks, labels = [], []
    for k, (kappa, size) in enumerate(zip(kappas, sizes)):
        blocks.append(sample(VmfDistribution.from_natural(kappa * dirs[k]), size, rng))
        labels += [f"c{k}"] * size
    X = np.vstack(blocks)
    ids = [f"s{i}" for i in range(X.shape[0])]
    corpus.write_matrix(args.out, ids, labels, X)
    write_manifest(args.out, args, started, seeds=[args.seed], extra={"directions": dirs.tolist()})
    return EXIT_OK


def cmd_tfidf(args):
    started = time.perf_counter()
    docs = corpus.read_corpus(args.input, strip=args.strip_headers)
    if args.per_class is not None:
        idx = corpus.subsample_balanced([d.label for d in docs], args.per_class, args.seed)
        docs = [docs[i] for i in idx]
    stop = corpus.load_stopwords(args.stopwords)
    emb = corpus.embed_corpus(docs, args.min_df, args.max_df, stop, args.idf)
    vocab_path = args.vocab or Path(f"{args.out}.vocab.tsv")
    corpus.write_matrix(args.out, emb.doc_ids, emb.labels, emb.matrix())
    corpus.write_vocab(vocab_path, emb.vocab)
    extra = {"dropped_documents": emb.dropped, "vocabulary_size": len(emb.vocab), "documents": len(emb.doc_ids)}
    write_manifest(args.out, args, started, seeds=[args.seed] if args.per_class else [], extra=extra)
    write_manifest(vocab_path, args, started, extra=extra)
    for doc_id in emb.dropped:
        print(f"dropped empty document: {doc_id}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _solver_flags(p):
    p.add_argument("--eps", type=float, default=None, help="initial slope psi'(0); default depends on D")
    p.add_argument("--tol", type=float, default=1e-12, help="absolute and relative solver tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vmfkit", description="von Mises-Fisher entropy, concentration and clustering tools")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="solve the radial ODE")
    p.add_argument("--dim", type=int, required=True)
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--checkpoints", type=_floats)
    grid.add_argument("--grid", type=int, default=50)
    p.add_argument("--r-max", type=float, default=0.98)
    p.add_argument("--mode", choices=[m.value for m in Mode], default="direct")
    _solver_flags(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("compare", help="closed-form approximations vs ODE")
    p.add_argument("--dims", type=_ints, default=[10, 100, 1000, 10000])
    p.add_argument("--grid", type=int, default=91)
    p.add_argument("--r-min", type=float, default=0.05)
    p.add_argument("--r-max", type=float, default=0.95)
    p.add_argument("--quantities", default="psi,psi1,bregman0")
    p.add_argument("--tilde-level", type=int, choices=[1, 2], default=2, help="approximation used for psi'")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("kappa", help="estimate the concentration")
    p.add_argument("--dim", type=int, required=True)
    where = p.add_mutually_exclusive_group(required=True)
    where.add_argument("--rbar", type=float)
    where.add_argument("--grid", type=int)
    p.add_argument("--r-min", type=float, default=0.1)
    p.add_argument("--r-max", type=float, default=0.9)
    p.add_argument("--method", choices=["nr", "b", "tilde1", "tilde2", "ode"], default="nr")
    p.add_argument("--nr-steps", type=int, help="Newton steps M; default depends on D")
    p.add_argument("--cf-depth", type=int, help="continued-fraction depth L; default depends on D")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("cluster", help="fit movMF models")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--labels", type=Path, help="one label per line; defaults to the matrix class column")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--method", choices=["bregman", "natural"], default="bregman")
    p.add_argument("--assign", choices=["soft", "hard"], default="soft")
    p.add_argument("--tied", action="store_true")
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--init", choices=[i.value for i in movmf.Init], default="random")
    p.add_argument("--psi", choices=[s.value for s in PsiSource], default="tilde")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("sample", help="synthetic vMF mixture")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--components", type=_floats, required=True, help="comma-separated kappa per component")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("tfidf", help="embed a text corpus")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--min-df", type=int, default=2)
    p.add_argument("--max-df", type=float, default=corpus.DEFAULT_MAX_DF)
    p.add_argument("--stopwords", type=Path)
    p.add_argument("--strip-headers", action="store_true")
    p.add_argument("--idf", choices=list(corpus.IDF_VARIANTS), default="total-count")
    p.add_argument("--per-class", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vocab", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_tfidf)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _NUMERICAL as exc:
        print(f"vmfkit {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (VmfkitError, ValueError, OSError) as exc:
        print(f"vmfkit {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
