"""Command-line front end: gen, embed, join, size, verify, decompose.

Every command is deterministic in its seed: all randomness flows from the
root seed through named substreams, and output files are byte-identical
across repeated runs. Reports are JSON; plot data is CSV.

Exit codes: 0 success / all checks pass, 1 check failure, 2 usage or config
error, 3 I/O or parse error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import decomp, fiber, kernels
from .embed import (
    IMAGE,
    TEXT,
    CorpusPoint,
    EmbeddedCorpus,
    GaussianSpec,
    build_map,
    embed_poly,
    load_corpus,
    sample_gaussian_corpus,
    save_corpus,
)
from .errors import DomainError, OptimizationError, ParseError
from .ringpoly import PIXEL_MODULUS, encode_patch, encode_tokens

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3


@dataclass
class RunConfig:
    seed: int = 0
    dim: int = 8
    epsilon: float = 0.5
    eta: float = 0.1
    lam: float = 1.0
    gamma: float = 0.1
    specificity_mode: str = "literal"
    hinge_margin: float = 1.0
    vocab_size: int = 50000
    degree_bound: int = 16
    engine: str = "grid"
    out: str = "."
    input: str | None = None
    patches: str | None = None
    tokens: str | None = None


_JSON_ALIASES = {"lambda": "lam"}
_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}", path=path)
    if not isinstance(raw, dict):
        raise ParseError("config must be a JSON object", path=path)
    out = {}
    for key, value in raw.items():
        name = _JSON_ALIASES.get(key, key)
        if name not in _FIELD_NAMES:
            raise DomainError(f"unknown config key {key!r} in {path}")
        out[name] = value
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, overridden by the config file, overridden by CLI flags."""
    cfg = RunConfig()
    if getattr(args, "config", None):
        for name, value in _load_config_file(args.config).items():
            setattr(cfg, name, value)
    for name in _FIELD_NAMES:
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    return cfg


def _outdir(cfg: RunConfig) -> Path:
    path = Path(cfg.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(obj, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_vector(text: str, dim: int, flag: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise DomainError(f"{flag} must be a comma-separated list of reals: {text!r}")
    if len(vals) == 1:
        return np.full(dim, vals[0])
    if len(vals) != dim:
        raise DomainError(f"{flag} has {len(vals)} entries, expected {dim}")
    return np.array(vals)


def _parse_grid(text: str, flag: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise DomainError(f"{flag} must be a comma-separated list of reals: {text!r}")


def _require_input(cfg: RunConfig, default_name: str = "corpus.csv") -> Path:
    path = Path(cfg.input) if cfg.input else Path(cfg.out) / default_name
    if not path.exists():
        raise ParseError("input corpus not found", path=str(path))
    return path


# --- gen --------------------------------------------------------------------


def cmd_gen(cfg: RunConfig, args) -> int:
    outdir = _outdir(cfg)
    if args.mode == "gaussian":
        spec_f = GaussianSpec(cfg.dim, _parse_vector(args.mean_f, cfg.dim, "--mean-f"), args.var_f)
        spec_g = GaussianSpec(cfg.dim, _parse_vector(args.mean_g, cfg.dim, "--mean-g"), args.var_g)
        corpus = sample_gaussian_corpus(spec_f, spec_g, args.n, args.n, cfg.seed)
        save_corpus(corpus, outdir / "corpus.csv")
        print(f"wrote {outdir / 'corpus.csv'} ({len(corpus.points)} points)")
    else:
        if args.ds or args.di or args.dt:
            if not (args.ds and args.di and args.dt):
                raise DomainError("--ds, --di and --dt must be given together")
            plan = decomp.DimensionPlan(args.ds, args.di, args.dt)
            if plan.total != cfg.dim:
                raise DomainError(
                    f"plan {plan.d_s}+{plan.d_i}+{plan.d_t} != dim {cfg.dim}"
                )
        else:
            plan = decomp.allocate_dimensions(cfg.dim, 1.0, 1.0)
        corpus, truth = decomp.make_planted_corpus(
            cfg.dim, plan, args.n, cfg.seed, noise=args.noise, coord_scale=args.coord_scale
        )
        save_corpus(corpus, outdir / "corpus.csv")
        decomp.save_decomposition(truth, outdir / "planted_decomposition.csv")
        print(
            f"wrote {outdir / 'corpus.csv'} ({len(corpus.points)} points, "
            f"{len(corpus.pairs)} pairs) and planted_decomposition.csv"
        )
    return EXIT_OK


# --- embed -------------------------------------------------------------------


def _read_patches(path: str) -> list[tuple[int, list[int]]]:
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                rows.append((lineno, [int(v) for v in line.split(",")]))
            except ValueError:
                raise ParseError("patch entries must be integers", path=path, line=lineno)
    return rows


def _read_tokens(path: str) -> list[tuple[int, str, list[int]]]:
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                rows.append((lineno, str(obj["id"]), [int(t) for t in obj["tokens"]]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise ParseError(
                    'expected {"id": str, "tokens": [int, ...]}', path=path, line=lineno
                )
    return rows


def cmd_embed(cfg: RunConfig, args) -> int:
    if not cfg.patches and not cfg.tokens:
        raise DomainError("need --patches and/or --tokens")
    outdir = _outdir(cfg)
    points: list[CorpusPoint] = []
    n_img = n_txt = 0
    if cfg.patches:
        fmap = build_map(cfg.seed, cfg.degree_bound, cfg.dim, PIXEL_MODULUS)
        patches = _read_patches(cfg.patches)
        width = max(1, len(str(max(len(patches) - 1, 0))))
        for k, (lineno, pixels) in enumerate(patches):
            try:
                vec = embed_poly(fmap, encode_patch(pixels))
            except DomainError as e:
                raise ParseError(str(e), path=cfg.patches, line=lineno)
            points.append(CorpusPoint(f"img-{k:0{width}d}", IMAGE, vec))
            n_img += 1
    if cfg.tokens:
        gmap = build_map(cfg.seed, cfg.degree_bound, cfg.dim, cfg.vocab_size)
        for lineno, tid, toks in _read_tokens(cfg.tokens):
            try:
                vec = embed_poly(gmap, encode_tokens(toks, cfg.vocab_size))
            except DomainError as e:
                raise ParseError(str(e), path=cfg.tokens, line=lineno)
            points.append(CorpusPoint(tid, TEXT, vec))
            n_txt += 1
    pairs = []
    if args.paired:
        if n_img != n_txt:
            raise DomainError(
                f"--paired requires equal counts, got {n_img} patches and {n_txt} token rows"
            )
        imgs = [p.id for p in points if p.modality == IMAGE]
        txts = [p.id for p in points if p.modality == TEXT]
        pairs = list(zip(imgs, txts))
    corpus = EmbeddedCorpus(cfg.dim, points, pairs)
    save_corpus(corpus, outdir / "corpus.csv")
    print(f"wrote {outdir / 'corpus.csv'} ({n_img} image + {n_txt} text points)")
    return EXIT_OK


# --- join ---------------------------------------------------------------------


def cmd_join(cfg: RunConfig, args) -> int:
    outdir = _outdir(cfg)
    corpus = load_corpus(_require_input(cfg))
    result = fiber.join(
        corpus.image_set(),
        corpus.text_set(),
        fiber.JoinConfig(cfg.epsilon),
        engine=cfg.engine,
    )
    fiber.write_join_csv(result, outdir / "join.csv")
    _write_json(
        {
            "count": len(result),
            "epsilon": result.epsilon,
            "engine": result.engine,
            "distance_evals": result.distance_evals,
        },
        outdir / "join_summary.json",
    )
    print(f"{len(result)} pairs at eps={cfg.epsilon} ({result.engine} engine)")
    return EXIT_OK


# --- size ----------------------------------------------------------------------


def cmd_size(cfg: RunConfig, args) -> int:
    outdir = _outdir(cfg)
    eps_grid = _parse_grid(args.eps_grid, "--eps-grid")
    notices = []
    mean_f = _parse_vector(args.mean_f, cfg.dim, "--mean-f")
    mean_g = _parse_vector(args.mean_g, cfg.dim, "--mean-g")
    spec_f = GaussianSpec(cfg.dim, mean_f, args.var_f)
    spec_g = GaussianSpec(cfg.dim, mean_g, args.var_g)

    empirical = None
    if args.n_empirical > 0:
        corpus = sample_gaussian_corpus(
            spec_f, spec_g, args.n_empirical, args.n_empirical, cfg.seed
        )
        empirical = (corpus.image_set(), corpus.text_set())

    grid_rows = []
    mc_values = []
    for i, eps in enumerate(eps_grid):
        est = fiber.estimate_size_mc(spec_f, spec_g, eps, args.n_samples, cfg.seed)
        mc_values.append(est.value)
        row = {
            "epsilon": eps,
            "mc_value": est.value,
            "mc_std_error": est.std_error,
            "closed_form": fiber.closed_form_gaussian_size(spec_f, spec_g, eps)
            if eps > 0
            else None,
            "empirical_count": (
                fiber.empirical_size(*empirical, fiber.JoinConfig(eps), engine=cfg.engine)
                if empirical
                else None
            ),
        }
        grid_rows.append(row)

    slope = fiber.fit_loglog_slope(eps_grid, mc_values)
    if slope is None:
        notices.append("log-log slope omitted: need at least 2 positive grid points")

    sep_grid = _parse_grid(args.sep_grid, "--sep-grid")
    sep_estimates = []
    for sep_sq in sep_grid:
        if sep_sq < 0:
            raise DomainError(f"--sep-grid entries must be >= 0, got {sep_sq}")
        mean_sep = np.zeros(cfg.dim)
        mean_sep[0] = np.sqrt(sep_sq)
        est = fiber.estimate_size_mc(
            GaussianSpec(cfg.dim, np.zeros(cfg.dim), args.var_f),
            GaussianSpec(cfg.dim, mean_sep, args.var_g),
            cfg.epsilon,
            args.n_samples,
            cfg.seed,
        )
        sep_estimates.append(
            {"separation_sq": sep_sq, "mc_value": est.value, "mc_std_error": est.std_error}
        )
    sep_coeff = fiber.fit_exponential_coefficient(
        [r["separation_sq"] for r in sep_estimates],
        [r["mc_value"] for r in sep_estimates],
    )
    if sep_coeff is None:
        notices.append("separation coefficient omitted: need at least 2 positive points")

    report = {
        "dim": cfg.dim,
        "n_samples": args.n_samples,
        "epsilon_grid": eps_grid,
        "grid": grid_rows,
        "loglog_slope": slope,
        "separation": {
            "epsilon": cfg.epsilon,
            "estimates": sep_estimates,
            "fitted_coefficient": sep_coeff,
            "theory_coefficient": -1.0 / (2.0 * (args.var_f + args.var_g)),
        },
        "notices": notices,
    }
    _write_json(report, outdir / "size_report.json")
    with open(outdir / "size_grid.csv", "w") as fh:
        fh.write("epsilon,mc_value,mc_std_error,closed_form,empirical_count\n")
        for row in grid_rows:
            cf = "" if row["closed_form"] is None else repr(row["closed_form"])
            ec = "" if row["empirical_count"] is None else str(row["empirical_count"])
            fh.write(
                f"{row['epsilon']!r},{row['mc_value']!r},{row['mc_std_error']!r},{cf},{ec}\n"
            )
    print(
        f"wrote {outdir / 'size_report.json'} "
        f"(slope={'n/a' if slope is None else f'{slope:.3f}'})"
    )
    return EXIT_OK


# --- verify ----------------------------------------------------------------------


def _default_verify_corpus(cfg: RunConfig) -> EmbeddedCorpus:
    spec = GaussianSpec(cfg.dim, np.zeros(cfg.dim), 1.0)
    return sample_gaussian_corpus(spec, spec, 60, 60, cfg.seed)


def cmd_verify(cfg: RunConfig, args) -> int:
    outdir = _outdir(cfg)
    if cfg.input:
        corpus = load_corpus(_require_input(cfg))
        source = cfg.input
    else:
        corpus = _default_verify_corpus(cfg)
        source = "synthetic-default"
    X, Y = corpus.image_set(), corpus.text_set()
    checks = []

    diameter = fiber.max_cross_distance(X, Y)
    if diameter > 0:
        # pad the last point by one part in 1e9: the diameter is itself a
        # rounded sqrt, and convergence needs the extremal pair included
        eps_grid = [diameter * f for f in (0.25, 0.5, 0.75)] + [diameter * (1 + 1e-9)]
    else:
        eps_grid = [0.5, 1.0]
    mono = fiber.verify_monotonicity(X, Y, eps_grid, engine=cfg.engine)
    checks.append(mono)
    final_count = mono["details"][-1]["count"] if mono["details"] else 0
    checks.append(
        {
            "check": "convergence",
            "passed": final_count == len(X) * len(Y),
            "trials": 1,
            "details": [
                {
                    "diameter": diameter,
                    "final_count": final_count,
                    "expected": len(X) * len(Y),
                }
            ],
        }
    )
    noise = fiber.NoiseSpec(cfg.eta, cfg.seed)
    checks.append(
        fiber.verify_noise_tolerance(
            X, Y, fiber.JoinConfig(cfg.epsilon), noise, args.trials, engine=cfg.engine
        )
    )

    plan = decomp.allocate_dimensions(corpus.dim, 1.0, 1.0)
    dec = decomp.random_orthogonal_decomposition(corpus.dim, plan, cfg.seed)
    checks.append(decomp.projector_laws_check(dec, args.trials, cfg.seed))
    checks.append(decomp.perturb_stability_check(dec, args.trials, cfg.eta, cfg.seed))
    if len(X) and len(Y):
        checks.append(decomp.check_dim_constraint(X.vectors, Y.vectors))

    inclusion = fiber.check_inclusion_claim(
        X, Y, fiber.JoinConfig(cfg.epsilon), noise, trials=args.trials, engine=cfg.engine
    )

    all_passed = all(c["passed"] for c in checks)
    report = {
        "source": source,
        "seed": cfg.seed,
        "epsilon": cfg.epsilon,
        "eta": cfg.eta,
        "checks": checks,
        "diagnostics": [inclusion],
        "all_theorem_checks_passed": all_passed,
    }
    _write_json(report, outdir / "verify_report.json")
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['check']}")
    print(
        "DIAG inclusion_claim: "
        + (
            "reproducible as printed"
            if inclusion["reproducible_as_printed"]
            else f"refuted ({inclusion['violations_found']} violations)"
        )
    )
    return EXIT_OK if all_passed else EXIT_CHECK_FAILED


# --- decompose ---------------------------------------------------------------------


def cmd_decompose(cfg: RunConfig, args) -> int:
    outdir = _outdir(cfg)
    corpus = load_corpus(_require_input(cfg))
    if not corpus.pairs:
        raise DomainError("decompose requires a corpus with pairs")
    if args.ds or args.di or args.dt:
        if not (args.ds and args.di and args.dt):
            raise DomainError("--ds, --di and --dt must be given together")
        plan = decomp.DimensionPlan(args.ds, args.di, args.dt)
    else:
        var_f = float(np.var(corpus.image_set().vectors, axis=0).mean())
        var_g = float(np.var(corpus.text_set().vectors, axis=0).mean())
        if var_f <= 0 or var_g <= 0:
            raise DomainError("cannot allocate dimensions: a modality has zero variance")
        plan = decomp.allocate_dimensions(corpus.dim, var_f, var_g)
    weights = decomp.LossWeights(
        lam=cfg.lam,
        gamma=cfg.gamma,
        specificity_mode=cfg.specificity_mode,
        hinge_margin=cfg.hinge_margin,
    )
    if cfg.specificity_mode == "literal" and cfg.gamma > 0:
        print(
            "notice: literal specificity adds +gamma*||component||^2 to a "
            "minimized loss, which shrinks modality-specific components; "
            "use --specificity-mode hinge for the stated intent",
            file=sys.stderr,
        )
    dec, trace = decomp.optimize(corpus, plan, weights, args.steps, args.lr, cfg.seed)
    decomp.save_decomposition(dec, outdir / "decomposition.csv")
    decomp.write_loss_trace(trace, outdir / "loss_trace.csv")
    final = trace[-1]
    _write_json(
        {
            "plan": {"d_s": plan.d_s, "d_i": plan.d_i, "d_t": plan.d_t},
            "steps": args.steps,
            "learning_rate": args.lr,
            "loss_align": final.align,
            "loss_orth": final.orth,
            "loss_specificity": final.specificity,
            "loss_total": final.total,
            "certified_orthogonal": dec.is_orthogonal(),
        },
        outdir / "decompose_metrics.json",
    )
    print(
        f"plan ({plan.d_s},{plan.d_i},{plan.d_t}); final align={final.align:.3e} "
        f"orth={final.orth:.3e} certified_orthogonal={dec.is_orthogonal()}"
    )
    return EXIT_OK


# --- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file mirroring RunConfig fields")
    common.add_argument("--seed", type=int, help="root seed for all substreams")
    common.add_argument("--out", help="output directory (default .)")
    common.add_argument("--engine", choices=["brute", "grid"], help="join engine")
    common.add_argument("--eps", dest="epsilon", type=float, help="join tolerance")
    common.add_argument("--eta", type=float, help="noise bound")
    common.add_argument("--dim", type=int, help="embedding dimension")

    parser = argparse.ArgumentParser(
        prog="fiberalign",
        description="Approximate fiber products and subspace decomposition "
        "for multimodal embeddings",
    )
    parser.add_argument(
        "--backend-info", action="store_true", help="print kernel backend and exit"
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--mode", choices=["gaussian", "planted"], default="gaussian")
    p.add_argument("--n", type=int, default=500, help="points per modality / pairs")
    p.add_argument("--mean-f", default="0", help="image mean (scalar or comma list)")
    p.add_argument("--mean-g", default="0", help="text mean (scalar or comma list)")
    p.add_argument("--var-f", type=float, default=1.0)
    p.add_argument("--var-g", type=float, default=1.0)
    p.add_argument("--ds", type=int, help="planted shared dimensions")
    p.add_argument("--di", type=int, help="planted image-specific dimensions")
    p.add_argument("--dt", type=int, help="planted text-specific dimensions")
    p.add_argument("--noise", type=float, default=1e-3)
    p.add_argument("--coord-scale", type=float, default=1.0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("embed", parents=[common], help="encode and embed raw corpora")
    p.add_argument("--patches", help="CSV file, one pixel patch per line")
    p.add_argument("--tokens", help="JSONL file with id and token list per line")
    p.add_argument("--vocab-size", dest="vocab_size", type=int)
    p.add_argument("--degree-bound", dest="degree_bound", type=int)
    p.add_argument("--paired", action="store_true", help="pair row k of each file")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("join", parents=[common], help="compute the approximate fiber product")
    p.add_argument("--input", help="embedded corpus file")
    p.set_defaults(func=cmd_join)

    p = sub.add_parser("size", parents=[common], help="size estimates vs epsilon and separation")
    p.add_argument("--eps-grid", default="0.05,0.077,0.119,0.183,0.27,0.4")
    p.add_argument("--sep-grid", default="0,1,2,4", help="squared separations")
    p.add_argument("--n-samples", type=int, default=200000)
    p.add_argument("--n-empirical", type=int, default=400, help="0 disables empirical counts")
    p.add_argument("--mean-f", default="0")
    p.add_argument("--mean-g", default="0")
    p.add_argument("--var-f", type=float, default=1.0)
    p.add_argument("--var-g", type=float, default=1.0)
    p.set_defaults(func=cmd_size)

    p = sub.add_parser("verify", parents=[common], help="run the theorem checker suite")
    p.add_argument("--input", help="embedded corpus file (default: synthetic)")
    p.add_argument("--trials", type=int, default=50)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("decompose", parents=[common], help="learn the subspace decomposition")
    p.add_argument("--input", help="embedded corpus file with pairs")
    p.add_argument("--ds", type=int)
    p.add_argument("--di", type=int)
    p.add_argument("--dt", type=int)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--specificity-mode", dest="specificity_mode", choices=["literal", "hinge"])
    p.add_argument("--hinge-margin", dest="hinge_margin", type=float)
    p.set_defaults(func=cmd_decompose)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "backend_info", False) and args.command is None:
        print(f"join kernel backend: {kernels.backend()}")
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE
    try:
        cfg = resolve_config(args)
        return args.func(cfg, args)
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except OptimizationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
