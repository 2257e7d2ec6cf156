"""Batch command-line front end.

Stages hand off through files::

    bayestomo simulate --out samples.csv
    bayestomo bin samples.csv --out dataset.json
    bayestomo fit dataset.json --out chains/
    bayestomo ml dataset.json --out ml.json
    bayestomo analyze chains/ dataset.json --out analysis/
    bayestomo wigner chains/ --out wigner.csv
    bayestomo replicate-table1 --seed 2009 --out table1/

Exit status: 0 success, 2 input error, 3 numerical failure, 4 convergence
gate failure (R-hat >= 1.1), 5 replication band failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import files
from .analysis import (
    PARAM_NAMES,
    DiagnosticError,
    SingularFisherError,
    derived_posterior,
    marginal_histogram,
)
from .data import (
    DEFAULT_BINS,
    DEFAULT_SAMPLES,
    DEFAULT_SPAN,
    DataFormatError,
    Dataset,
    bin_samples,
    load_dataset,
    load_samples,
    simulate_settings,
    write_samples,
)
from .likelihood import LikelihoodModel
from .pipeline import BANDS, ReplicationConfig, StageError, format_table, posterior_report, replicate_table1
from .reconstruct import reconstruct_wigner
from .sampler import DEFAULT_START_CANDIDATES, ProposalSpec, SamplerConfig, greedy_search, run_chains
from .state import PhysicalityError, QuadratureSpec, StateParams, purity_batch

log = logging.getLogger("bayestomo")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_CONVERGENCE = 4
EXIT_BANDS = 5


class InputError(Exception):
    pass


def _add_sampler_flags(p):
    p.add_argument("--iterations", type=int, default=40_000, help="states per chain (default 40000)")
    p.add_argument("--chains", type=int, default=4, help="number of chains (default 4)")
    p.add_argument("--burn-in", type=int, default=2_000, help="discarded leading states (default 2000)")
    p.add_argument("--thin", type=int, default=10, help="keep every k-th state after burn-in (default 10)")
    p.add_argument("--no-adapt", action="store_true", help="keep the proposal widths fixed during burn-in")
    p.add_argument("--target-acceptance", type=float, default=0.44, help="burn-in adaptation target (default 0.44)")
    p.add_argument("--proposal", type=float, nargs=3, default=list(ProposalSpec().as_array()),
                   metavar=("SX", "SP", "SPHI"), help="initial proposal widths (default 0.0042 0.022 0.0037)")
    p.add_argument("--start-candidates", type=int, default=DEFAULT_START_CANDIDATES,
                   help=f"random starts scored per chain, best one kept (default {DEFAULT_START_CANDIDATES})")


def _add_common(p):
    p.add_argument("--seed", type=int, default=0, help="64-bit seed for every random stream (default 0)")
    p.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    p.add_argument("--nodes", type=int, default=64, help="quadrature nodes for the phase average (default 64)")
    p.add_argument("--config", type=Path, help="key = value file; command-line flags take precedence")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayestomo", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw synthetic homodyne samples")
    _add_common(p)
    p.add_argument("--truth", type=float, nargs=3, default=[0.316, 6.889, 0.171], metavar=("VX", "VP", "VPHI"))
    p.add_argument("--thetas", type=float, nargs="+", default=[0.0, math.pi / 2], help="phases in radians")
    p.add_argument("--n", type=int, default=DEFAULT_SAMPLES, help="samples per phase (default 100000)")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("bin", help="histogram a samples file into a dataset")
    _add_common(p)
    p.add_argument("samples", type=Path)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS, help="bins per phase (default 70)")
    p.add_argument("--span", type=float, default=DEFAULT_SPAN, help="edges cover +-span sample sd (default 5)")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("fit", help="run MCMC chains on a dataset")
    _add_common(p)
    _add_sampler_flags(p)
    p.add_argument("dataset", type=Path)
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("ml", help="greedy maximum-likelihood climb")
    _add_common(p)
    _add_sampler_flags(p)
    p.add_argument("dataset", type=Path)
    p.add_argument("--out", type=Path, required=True, help="output JSON")

    p = sub.add_parser("analyze", help="summaries, marginals, Fisher comparison and purity posterior")
    _add_common(p)
    p.add_argument("chain_dir", type=Path)
    p.add_argument("dataset", type=Path)
    p.add_argument("--marginal-bins", type=int, default=100)
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("wigner", help="posterior-averaged Wigner function grid")
    _add_common(p)
    p.add_argument("chain_dir", type=Path)
    p.add_argument("--x-range", type=float, nargs=2, default=[-4.0, 4.0])
    p.add_argument("--p-range", type=float, nargs=2, default=[-10.0, 10.0])
    p.add_argument("--resolution", type=int, default=161)
    p.add_argument("--subsample", type=int, default=500)
    p.add_argument("--out", type=Path, required=True, help="output CSV")

    p = sub.add_parser("replicate-table1", help="full synthetic pipeline with tolerance bands")
    _add_common(p)
    _add_sampler_flags(p)
    p.set_defaults(seed=2009)
    p.add_argument("--truth", type=float, nargs=3, default=[0.316, 6.889, 0.171], metavar=("VX", "VP", "VPHI"))
    p.add_argument("--n", type=int, default=DEFAULT_SAMPLES, help="samples per phase (default 100000)")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--dataset", type=Path, help="use this dataset file instead of simulating one")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    parser.subcommands = sub.choices
    return parser


def read_config(path: Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment; values may be space-separated lists."""
    out = {}
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InputError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    # re-parse with the file values as defaults so explicit flags win
    sub = parser.subcommands[args.command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in read_config(args.config).items():
        if key not in actions:
            raise InputError(f"unknown config key {key!r} for '{args.command}'")
        action = actions[key]
        if action.nargs in ("+", 2, 3):
            defaults[key] = [action.type(v) for v in value.split()]
        elif action.const is True:
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = action.type(value) if action.type else value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _sampler_config(args) -> SamplerConfig:
    try:
        return SamplerConfig(
            iterations=args.iterations,
            n_chains=args.chains,
            burn_in=args.burn_in,
            thin=args.thin,
            adapt=not args.no_adapt,
            target_acceptance=args.target_acceptance,
            seed=args.seed,
            proposal=ProposalSpec(*args.proposal),
            threads=args.threads,
            start_candidates=args.start_candidates,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _run_config(args, *skip) -> dict:
    d = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
         if k not in ("out", "verbose", "config", "threads") + skip}
    return d


def _load_dataset(path) -> Dataset:
    try:
        return load_dataset(path)
    except FileNotFoundError:
        raise InputError(f"dataset file not found: {path}") from None
    except (DataFormatError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _ensure_parent(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create {path.parent}: {exc}") from None


def cmd_simulate(args) -> int:
    if args.n < 1:
        raise InputError("--n must be at least 1")
    try:
        truth = StateParams(*args.truth)
    except PhysicalityError as exc:
        raise InputError(str(exc)) from None
    prov = files.provenance(args.seed, _run_config(args))
    sets = simulate_settings(truth, tuple(args.thetas), args.n, args.seed)
    _ensure_parent(args.out)
    try:
        write_samples(args.out, sets, files.provenance_lines(prov, {"truth": " ".join(map(files.fmt, args.truth))}))
    except OSError as exc:
        raise InputError(f"cannot write {args.out}: {exc}") from None
    print(f"truth v_x={args.truth[0]} v_p={args.truth[1]} v_phi={args.truth[2]} seed={args.seed}")
    print(f"wrote {sum(len(s) for s in sets)} samples to {args.out}")
    return EXIT_OK


def cmd_bin(args) -> int:
    if args.bins < 2:
        raise InputError("--bins must be at least 2")
    try:
        sets = load_samples(args.samples)
    except FileNotFoundError:
        raise InputError(f"samples file not found: {args.samples}") from None
    except (DataFormatError, ValueError) as exc:
        raise InputError(str(exc)) from None
    try:
        data = Dataset(tuple(bin_samples(s, args.bins, span=args.span) for s in sets))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    prov = files.provenance(args.seed, _run_config(args))
    objs = [dict(h.to_dict(), provenance=prov) for h in data.histograms]
    _ensure_parent(args.out)
    files.dump_json(args.out, objs)
    print(f"binned {data.total} samples into {len(data)} histograms of {args.bins} bins -> {args.out}")
    return EXIT_OK


def _rhat_gate(r_hat) -> int:
    if any(not (r < BANDS["r_hat_max"]) for r in r_hat if not math.isnan(r)):
        log.warning("convergence gate failed: R-hat %s", ", ".join(f"{r:.4f}" for r in r_hat))
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_fit(args) -> int:
    data = _load_dataset(args.dataset)
    config = _sampler_config(args)
    spec = QuadratureSpec(args.nodes)
    prov = files.provenance(args.seed, _run_config(args))
    chains = run_chains(LikelihoodModel(data, spec), config)
    args.out.mkdir(parents=True, exist_ok=True)
    files.write_chains(args.out, chains, prov)
    report = posterior_report(chains, data, spec)
    files.dump_json(args.out / "summary.json", {"provenance": prov, **report})
    _print_summary(report)
    return _rhat_gate(report["r_hat"])


def cmd_ml(args) -> int:
    data = _load_dataset(args.dataset)
    # the climb adapts throughout, burn-in only has to be a valid index
    args.burn_in = min(args.burn_in, max(args.iterations - 1, 0))
    config = _sampler_config(args)
    prov = files.provenance(args.seed, _run_config(args))
    res = greedy_search(None, LikelihoodModel(data, QuadratureSpec(args.nodes)), config)
    _ensure_parent(args.out)
    files.dump_json(args.out, {
        "provenance": prov,
        "params": dict(zip(PARAM_NAMES, res.params.as_array())),
        "log_lik": res.log_lik,
        "iterations": config.iterations,
        "final_proposal": res.trace.proposal.as_array(),
    })
    print("ML estimate " + " ".join(f"{n}={v:.6f}" for n, v in zip(PARAM_NAMES, res.params.as_array()))
          + f" log_lik={res.log_lik:.6f}")
    return EXIT_OK


def _read_chains(chain_dir):
    try:
        return files.read_chains(chain_dir)
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from None
    except (DataFormatError, ValueError) as exc:
        raise InputError(str(exc)) from None


def cmd_analyze(args) -> int:
    chains = _read_chains(args.chain_dir)
    data = _load_dataset(args.dataset)
    spec = QuadratureSpec(args.nodes)
    prov = files.provenance(chains[0].seed, _run_config(args))
    report = posterior_report(chains, data, spec)
    args.out.mkdir(parents=True, exist_ok=True)
    files.dump_json(args.out / "summary.json", {"provenance": prov, **report})
    for name in PARAM_NAMES:
        files.write_marginal(args.out / f"marginal_{name}.csv", marginal_histogram(chains, name, args.marginal_bins), prov)
    pur = derived_posterior(chains, lambda s: purity_batch(s, spec), n_bins=args.marginal_bins,
                            name="purity", vectorized=True)
    files.write_marginal(args.out / "purity_posterior.csv", pur.marginal, prov,
                         {"mean": files.fmt(pur.mean), "std": files.fmt(pur.std)})
    fisher_lines = [
        f"{n:<8} sigma_mcmc={s:.6g} sigma_fisher={f:.6g} ratio={r:.4f}"
        for n, s, f, r in zip(PARAM_NAMES, report["stds"], report["fisher_sigma"], report["ratios"])
    ]
    (args.out / "fisher.txt").write_text(
        "".join(f"# {ln}\n" for ln in files.provenance_lines(prov)) + "\n".join(fisher_lines) + "\n", encoding="utf-8")
    _print_summary(report)
    print(f"purity {pur.mean:.5f} +- {pur.std:.5f}")
    return _rhat_gate(report["r_hat"])


def cmd_wigner(args) -> int:
    chains = _read_chains(args.chain_dir)
    if args.subsample < 10:
        raise InputError("--subsample must be at least 10")
    prov = files.provenance(chains[0].seed, _run_config(args))
    grid = reconstruct_wigner(chains, tuple(args.x_range), tuple(args.p_range), args.resolution,
                              QuadratureSpec(args.nodes), args.subsample, threads=args.threads)
    _ensure_parent(args.out)
    files.write_wigner(args.out, grid, prov)
    print(f"wrote {grid.mean.size} cells from {grid.n_samples} posterior samples to {args.out}")
    return EXIT_OK


def cmd_replicate_table1(args) -> int:
    sampler = replace(_sampler_config(args), threads=args.threads)
    try:
        cfg = ReplicationConfig(seed=args.seed, truth=tuple(args.truth), samples_per_setting=args.n,
                                bins=args.bins, sampler=sampler, nodes=args.nodes,
                                dataset_path=str(args.dataset) if args.dataset else None)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    report, art = replicate_table1(cfg)
    prov = files.provenance(args.seed, _run_config(args))
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    files.dump_json(out / "report.json", {"provenance": prov, **report})
    files.dump_json(out / "dataset.json", [dict(h.to_dict(), provenance=prov) for h in art["data"].histograms])
    files.write_chains(out / "chains", art["chains"], prov)
    files.write_chain(out / "ml_trace.csv", art["greedy"].trace, prov)
    files.write_marginal(out / "purity_posterior.csv", art["purity"].marginal, prov)
    for name in PARAM_NAMES:
        files.write_marginal(out / f"marginal_{name}.csv", marginal_histogram(art["chains"], name), prov)
    text = format_table(report)
    (out / "report.txt").write_text(text + "\n", encoding="utf-8")
    print(text)
    gate = _rhat_gate(report["posterior"]["r_hat"])
    if gate:
        return gate
    return EXIT_OK if report["all_pass"] else EXIT_BANDS


def _print_summary(report):
    for i, name in enumerate(PARAM_NAMES):
        print(f"{name:<6} mean={report['means'][i]:.6f} sd={report['stds'][i]:.6f} "
              f"fisher_sd={report['fisher_sigma'][i]:.6f} R-hat={report['r_hat'][i]:.4f}")
    print(f"acceptance {report['acceptance_rate']:.3f}, {report['n_retained']} retained samples")


COMMANDS = {
    "simulate": cmd_simulate,
    "bin": cmd_bin,
    "fit": cmd_fit,
    "ml": cmd_ml,
    "analyze": cmd_analyze,
    "wigner": cmd_wigner,
    "replicate-table1": cmd_replicate_table1,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc.cause, (DataFormatError, PhysicalityError, OSError)):
            return EXIT_INPUT
        return EXIT_NUMERICAL
    except (SingularFisherError, DiagnosticError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
