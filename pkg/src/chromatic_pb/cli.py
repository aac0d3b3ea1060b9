"""Command-line entry point: ``chromatic-pb <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bounds as B
from .covers import (
    BipartiteRankingShape,
    beta_block_decomposition,
    bipartite_ranking_cover,
    bipartite_ranking_graph,
    iid_cover,
    ranking_dependency_graph,
    ustat_ranking_chi_bound,
    ustat_ranking_cover,
)
from .depgraph import (
    CoverStats,
    chi_estimates,
    fractional_chromatic_exact,
    read_graph,
    validate_cover,
    write_graph,
)
from .gibbs import (
    GaussianLinearPosterior,
    LinearScorer,
    bipartite_gaussian_generator,
    bipartite_gaussian_gibbs_risk,
    empirical_auc_risk,
    gibbs_error_auc,
    gibbs_error_binary,
    mc_gibbs_error,
    moment_comparison,
    train_linear,
)
from .harness import (
    build_pairs,
    load_dataset,
    read_config,
    records_to_csv,
    records_to_jsonl,
    run_sweep,
    run_validity,
    sweep_config_from_mapping,
    validity_config_from_mapping,
)

log = logging.getLogger("chromatic_pb")


class UsageError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj) if obj.denominator != 1 else obj.numerator
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(args, payload: dict, lines: list[str]) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, default=_jsonable, sort_keys=True))
    else:
        print("\n".join(lines))


def _table(rows: list[tuple[str, object]]) -> list[str]:
    out = []
    for k, v in rows:
        if isinstance(v, float):
            v = f"{v:.10g}"
        out.append(f"{k} = {v}")
    return out


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _fractions(text: str) -> list[Fraction]:
    return [Fraction(x) for x in text.split(",") if x.strip()]


# --- chi ---------------------------------------------------------------------

def cmd_chi(args) -> int:
    graph = read_graph(args.graph)
    est = chi_estimates(graph, exact=not args.bounds)
    rows = [
        ("vertices", graph.vertex_count),
        ("edges", len(graph.edges)),
        ("clique_lower", est.clique_lower if est.clique_exact else f"{est.clique_lower} (greedy lower bound)"),
    ]
    if est.chi_star is not None:
        rows.append(("chi_star", est.chi_star))
    elif not args.bounds:
        rows.append(("chi_star", "n/a (graph too large for exact LP)"))
    rows += [("chi_upper", est.chi_upper), ("delta_plus_one", est.delta_plus_one)]
    _emit(args, asdict(est), _table(rows))
    return 0


# --- cover -------------------------------------------------------------------

def _build_cover(family: str, params: list[int]):
    need = {"iid": 1, "auc": 2, "ustat": 1, "beta-blocks": 2}
    if family not in need:
        raise UsageError(f"unknown cover family {family!r}; expected one of {sorted(need)}")
    if len(params) != need[family]:
        raise UsageError(f"cover {family} takes {need[family]} integer parameter(s)")
    if family == "iid":
        graph, cover = iid_cover(params[0])
        return graph, cover, {}
    if family == "auc":
        shape = BipartiteRankingShape(*params)
        return bipartite_ranking_graph(shape), bipartite_ranking_cover(shape), {"l_min": shape.l_min}
    if family == "ustat":
        l = params[0]
        return ranking_dependency_graph(l), ustat_ranking_cover(l), {"chi_bound": ustat_ranking_chi_bound(l)}
    dec = beta_block_decomposition(*params)
    meta = {
        "block_count": dec.block_count,
        "dropped_last": dec.dropped_last,
        "z0_blocks": [list(b) for b in dec.z0_blocks],
        "z1_blocks": [list(b) for b in dec.z1_blocks],
    }
    return dec.surrogate_graph, dec.surrogate_cover, meta


def cmd_cover(args) -> int:
    graph, cover, meta = _build_cover(args.family, args.params)
    payload = {"family": args.family, "omega": cover.weight, "elements": len(cover), **meta}
    lines = []
    if args.validate:
        validate_cover(graph, cover)
        payload["valid"] = True
        lines.append(f"ok, omega = {cover.weight}")
    else:
        lines.append(f"omega = {cover.weight}")
    lines.append(f"elements = {len(cover)}, vertices = {graph.vertex_count}")
    if args.exact:
        chi, _ = fractional_chromatic_exact(graph)
        payload["chi_star"] = chi
        lines.append(f"chi_star = {chi}")
    if args.list:
        payload["sets"] = [list(s) for s in cover.sets]
        payload["weights"] = cover.weights
        lines += [f"  {list(s)} : {w}" for s, w in cover.elements]
    if args.write_graph:
        write_graph(graph, args.write_graph)
    _emit(args, payload, lines)
    return 0


# --- bound -------------------------------------------------------------------

def _req(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"bound {args.name} needs --{', --'.join(m.replace('_', '-') for m in missing)}")


def _evaluate_bound(args):
    name = args.name
    kl = args.kl
    if name == "iid":
        _req(args, "m")
        return B.iid_bound(args.m, kl, args.delta, args.ehat)
    if name == "chromatic-2":
        _req(args, "m", "chi")
        return B.chromatic_bound_II(args.m, Fraction(args.chi), kl, args.delta, args.ehat)
    if name == "chromatic-1":
        _req(args, "m", "weights", "kls")
        weights = _fractions(args.weights)
        omega = sum(weights)
        stats = CoverStats(omega=omega, alpha=[float(w / omega) for w in weights], pi=[])
        return B.chromatic_bound_I(stats, _floats(args.kls), args.m, args.delta, args.ehat)
    if name == "subgraph":
        _req(args, "m", "k", "candidate")
        cands = []
        for c in args.candidate:
            size, chi, e = c.split(":")
            cands.append((int(size), Fraction(chi), float(e)))
        return B.subgraph_bound(cands, args.m, args.k, kl, args.delta)
    if name == "ranking":
        _req(args, "l")
        return B.ranking_bound(args.l, kl, args.delta, args.ehat)
    if name == "auc":
        _req(args, "lpos", "lneg")
        return B.auc_bound(args.lpos, args.lneg, kl, args.delta, args.ehat)
    if name == "auc-linear":
        _req(args, "lmin", "mu")
        return B.auc_linear_bound(args.lmin, args.mu, args.delta, args.ehat)
    if name == "beta-mixing":
        _req(args, "m", "a", "beta_a")
        return B.beta_mixing_bound(args.m, args.a, args.beta_a, kl, args.delta, args.ehat)
    if name == "generalized":
        _req(args, "m", "chi")
        return B.generalized_chromatic_bound(args.m, Fraction(args.chi), args.M, kl, args.delta, args.ehat)
    if name == "phi-mixing":
        _req(args, "m", "phi")
        return B.phi_mixing_bound(args.m, args.M, _floats(args.phi), kl, args.delta, args.ehat)
    raise UsageError(f"unknown bound {name!r}")


BOUND_NAMES = [
    "iid", "chromatic-1", "chromatic-2", "subgraph", "ranking", "auc", "auc-linear",
    "beta-mixing", "generalized", "phi-mixing", "generic", "bayes",
]


def cmd_bound(args) -> int:
    if args.name == "generic":
        _req(args, "alpha", "beta")
        budget = B.generic_pacbayes_budget(args.alpha, args.beta, args.kl, args.delta)
        _emit(args, {"budget": budget}, _table([("budget", budget)]))
        return 0
    if args.name == "bayes":
        value = B.bayes_risk_factor(args.ehat)
        _emit(args, {"bayes_risk_bound": value}, _table([("bayes_risk_bound", value)]))
        return 0
    res = _evaluate_bound(args)
    rows = [
        ("budget", res.kl_budget),
        ("empirical_gibbs", res.empirical_gibbs),
        ("risk_bound_kl" if res.kind == "kl" else "risk_bound", res.risk_bound_kl),
    ]
    if res.kind == "kl":
        rows.append(("risk_bound_pinsker", res.risk_bound_pinsker))
    else:
        rows.append(("lower_bound", res.lower_bound))
    rows += [
        ("effective_m", float(res.effective_m)),
        ("delta", res.delta),
        ("vacuous", res.vacuous),
    ]
    if res.chi_star_used is not None:
        rows.append(("chi_star", res.chi_star_used))
    payload = asdict(res)
    payload["budget"] = res.kl_budget
    _emit(args, payload, _table(rows))
    return 0


# --- gibbs -------------------------------------------------------------------

def cmd_gibbs(args) -> int:
    data = load_dataset(args.dataset)
    if args.w_file:
        w = np.loadtxt(args.w_file, delimiter=",", ndmin=1).ravel()
    elif args.train is not None:
        w = train_linear(data, 1.0 / (args.train * data.m), args.epochs, args.seed).weights
    else:
        raise UsageError("gibbs needs --w-file or --train C")
    post = GaussianLinearPosterior.from_weights(w, args.mu)
    rows: list[tuple[str, object]] = [("mu", post.mu), ("kl", post.kl), ("gibbs_binary", gibbs_error_binary(post, data))]
    if data.n_pos and data.n_neg:
        pairs = build_pairs(data, args.pair_cap, args.seed)
        rows += [
            ("l_pos", pairs.l_pos),
            ("l_neg", pairs.l_neg),
            ("gibbs_auc", gibbs_error_auc(post, data, pairs)),
            ("auc_risk", empirical_auc_risk(LinearScorer(post.direction), data, pairs, args.tie_mode)),
        ]
    if args.samples:
        est = mc_gibbs_error(post, data, args.samples, args.seed)
        rows += [("mc_gibbs_binary", est.rate), ("mc_std_error", est.std_error)]
    _emit(args, dict(rows), _table(rows))
    return 0


# --- sweep / validate / moments --------------------------------------------

def cmd_sweep(args) -> int:
    cfg_path = Path(args.config)
    cfg = sweep_config_from_mapping(read_config(cfg_path), base=cfg_path.parent)
    if args.csv:
        cfg.output = args.csv
    records = run_sweep(cfg)
    if args.json:
        sys.stdout.write(records_to_jsonl(records))
    else:
        sys.stdout.write(records_to_csv(records))
    return 0


def cmd_validate(args) -> int:
    cfg = validity_config_from_mapping(read_config(args.config))
    if args.workers:
        cfg.workers = args.workers
    rep = run_validity(cfg)
    rows = [
        ("mode", rep.mode),
        ("draws", rep.n_draws),
        ("violations", rep.violations),
        ("violation_rate", rep.violation_rate),
        ("tolerance", rep.tolerance),
        ("e_true", rep.e_true),
        ("mean_ehat", rep.mean_ehat),
        ("mean_bound", rep.mean_bound),
        ("passed", rep.passed),
    ]
    payload = asdict(rep)
    payload["passed"] = rep.passed
    _emit(args, payload, _table(rows))
    return 0 if rep.passed else 1


def cmd_moments(args) -> int:
    shape = BipartiteRankingShape(args.lpos, args.lneg)
    graph = bipartite_ranking_graph(shape)
    cover = bipartite_ranking_cover(shape)
    post = GaussianLinearPosterior(np.array([1.0]), args.mu)
    gen = bipartite_gaussian_generator(args.lpos, args.lneg, args.mean_pos, args.mean_neg)
    e_true = bipartite_gaussian_gibbs_risk(post, args.mean_pos, args.mean_neg)
    out = []
    lines = []
    for r in args.r:
        res = moment_comparison(post, graph, cover, gen, r, args.draws, args.seed, e_true)
        ok = bool(res.holds().all())
        out.append({"r": r, "full": res.full_moment, "full_se": res.full_se,
                    "elements": res.element_moments, "elements_se": res.element_se, "holds": ok})
        lines.append(
            f"r={r}: full={res.full_moment:.6g} (se {res.full_se:.2g}), "
            f"elements min={res.element_moments.min():.6g} max={res.element_moments.max():.6g}, "
            f"{'holds' if ok else 'VIOLATED'}"
        )
    _emit(args, {"e_true": e_true, "results": out}, lines)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chromatic-pb", description="Chromatic PAC-Bayes bounds for dependent data.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("chi", help="clique number, fractional and greedy chromatic numbers of a graph file")
    c.add_argument("graph")
    g = c.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", help="solve the fractional colouring LP (default)")
    g.add_argument("--bounds", action="store_true", help="only the cheap bounds")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_chi)

    c = sub.add_parser("cover", help="build a canonical fractional cover")
    c.add_argument("family", choices=["iid", "auc", "ustat", "beta-blocks"])
    c.add_argument("params", nargs="+", type=int)
    c.add_argument("--validate", action="store_true")
    c.add_argument("--exact", action="store_true", help="also compute chi* of the graph")
    c.add_argument("--list", action="store_true", help="print the cover elements")
    c.add_argument("--write-graph", metavar="PATH")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_cover)

    c = sub.add_parser("bound", help="evaluate one bound")
    c.add_argument("name", choices=BOUND_NAMES)
    c.add_argument("--m", type=int)
    c.add_argument("--kl", type=float, default=0.0)
    c.add_argument("--delta", type=float, default=0.01)
    c.add_argument("--ehat", type=float, default=0.0)
    c.add_argument("--chi", type=str, help="fractional chromatic number, e.g. 5/2")
    c.add_argument("--weights", help="comma list of cover weights (chromatic-1)")
    c.add_argument("--kls", help="comma list of per-element KL values (chromatic-1)")
    c.add_argument("--k", type=int, help="removed vertices (subgraph)")
    c.add_argument("--candidate", action="append", metavar="SIZE:CHI:EHAT")
    c.add_argument("--l", type=int)
    c.add_argument("--lpos", type=int)
    c.add_argument("--lneg", type=int)
    c.add_argument("--lmin", type=int)
    c.add_argument("--mu", type=float)
    c.add_argument("--a", type=int)
    c.add_argument("--beta-a", type=float)
    c.add_argument("--M", type=float, default=1.0)
    c.add_argument("--phi", help="comma list phi(1),phi(2),...")
    c.add_argument("--alpha", type=float)
    c.add_argument("--beta", type=float)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_bound)

    c = sub.add_parser("gibbs", help="Gibbs errors of a Gaussian linear posterior on a dataset")
    c.add_argument("dataset")
    c.add_argument("--w-file", help="comma-separated weight vector")
    c.add_argument("--train", type=float, metavar="C", help="train a linear scorer with soft-margin C")
    c.add_argument("--mu", type=float, help="posterior scale (default |w|)")
    c.add_argument("--epochs", type=int, default=50)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--pair-cap", type=int)
    c.add_argument("--tie-mode", choices=["half", "strict"], default="half")
    c.add_argument("--samples", type=int, default=0, help="Monte-Carlo draws for a cross-check")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_gibbs)

    c = sub.add_parser("sweep", help="bound vs test error over a C grid")
    c.add_argument("--config", required=True)
    c.add_argument("--csv", metavar="PATH")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_sweep)

    c = sub.add_parser("validate", help="Monte-Carlo violation rate of a bound")
    c.add_argument("--config", required=True)
    c.add_argument("--workers", type=int)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_validate)

    c = sub.add_parser("moments", help="full-sample vs cover-element moments of the Gibbs error")
    c.add_argument("--lpos", type=int, default=6)
    c.add_argument("--lneg", type=int, default=6)
    c.add_argument("--mean-pos", type=float, default=1.0)
    c.add_argument("--mean-neg", type=float, default=0.0)
    c.add_argument("--mu", type=float, default=1.0)
    c.add_argument("--r", type=int, nargs="+", default=[1, 2])
    c.add_argument("--draws", type=int, default=10_000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_moments)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
