"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Tolerances and budgets are pinned here; nothing is deferred to later
calibration.
"""
import json
import math
import time

import numpy as np

from fiberalign.cli import EXIT_OK, main
from fiberalign.decomp import (
    DimensionPlan,
    LossWeights,
    alignment_volume_mc,
    allocate_dimensions,
    gradient_check,
    loss_align,
    make_planted_corpus,
    optimize,
    perturb_stability_check,
    projector_laws_check,
    random_orthogonal_decomposition,
)
from fiberalign.embed import GaussianSpec, PointSet, sample_gaussian_corpus
from fiberalign.fiber import (
    JoinConfig,
    NoiseSpec,
    check_inclusion_claim,
    estimate_size_mc,
    fit_exponential_coefficient,
    fit_loglog_slope,
    join_bruteforce,
    join_grid,
    max_cross_distance,
    verify_monotonicity,
    verify_noise_tolerance,
)
from fiberalign.ringpoly import RingPoly, decode, encode_patch, encode_tokens, ring_add, ring_mul, zero
from fiberalign.rng import substream


def _report(num: int, description: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {num:02d}] {status} {description}" + (f" ({detail})" if detail else ""))
    assert ok, f"criterion {num}: {description} {detail}"


def _std_spec(dim: int) -> GaussianSpec:
    return GaussianSpec(dim, np.zeros(dim), 1.0)


def test_c01_gaussian_epsilon_scaling():
    """Log-log slope of the MC size vs epsilon is within 20% of d."""
    eps_grid = list(np.geomspace(0.05, 0.4, 6))
    n_by_dim = {1: 400_000, 2: 1_000_000, 3: 4_000_000}
    for d, n in n_by_dim.items():
        t0 = time.monotonic()
        spec = _std_spec(d)
        sizes = [estimate_size_mc(spec, spec, e, n, seed=101).value for e in eps_grid]
        slope = fit_loglog_slope(eps_grid, sizes)
        elapsed = time.monotonic() - t0
        ok = slope is not None and abs(slope - d) <= 0.2 * d and elapsed <= 60.0
        _report(1, f"epsilon scaling slope, d={d}",
                ok, f"slope={slope:.3f}, {elapsed:.1f}s")


def test_c02_gaussian_separation_decay():
    """Coefficient of log(size) vs separation^2 within 15% of -1/(2(vf+vg))."""
    t0 = time.monotonic()
    d, eps, n = 2, 0.2, 400_000
    sep_sq = [0.0, 1.0, 2.0, 4.0]
    sizes = []
    for s2 in sep_sq:
        mean_g = np.zeros(d)
        mean_g[0] = math.sqrt(s2)
        sizes.append(
            estimate_size_mc(
                _std_spec(d), GaussianSpec(d, mean_g, 1.0), eps, n, seed=202
            ).value
        )
    coeff = fit_exponential_coefficient(sep_sq, sizes)
    target = -0.25
    elapsed = time.monotonic() - t0
    ok = coeff is not None and abs(coeff - target) <= 0.15 * abs(target) and elapsed <= 60.0
    _report(2, "separation decay coefficient", ok, f"coeff={coeff:.4f}, target={target}, {elapsed:.1f}s")


def test_c03_mc_vs_closed_form():
    """d=1, eps=0.1: MC estimate within 4 standard errors of the erf value."""
    oracle = math.erf(0.1 / 2.0)  # P(|D| <= 0.1), D ~ N(0, 2)
    assert round(oracle, 4) == 0.0564
    est = estimate_size_mc(_std_spec(1), _std_spec(1), 0.1, 100_000, seed=303)
    ok = abs(est.value - oracle) <= 4.0 * est.std_error
    _report(3, "MC vs erf closed form", ok,
            f"est={est.value:.5f}, oracle={oracle:.5f}, se={est.std_error:.1e}")


def test_c04_noise_tolerance_theorem():
    """Perturbed-eps join inside clean-(eps+2eta) join in 1000/1000 trials."""
    total = passes = 0
    for c in range(10):
        rng = substream(404, "acceptance-noise-corpus", c)
        d = int(rng.integers(1, 9))
        n_img = int(rng.integers(20, 201))
        n_txt = int(rng.integers(20, 201))
        spec = GaussianSpec(d, rng.uniform(-1, 1, d), float(rng.uniform(0.5, 2.0)))
        corpus = sample_gaussian_corpus(spec, spec, n_img, n_txt, int(rng.integers(1e9)))
        eps = float(rng.uniform(0.2, 1.0))
        eta = float(rng.uniform(0.0, 1.0))
        report = verify_noise_tolerance(
            corpus.image_set(), corpus.text_set(),
            JoinConfig(eps), NoiseSpec(eta, seed=c), trials=100,
        )
        total += report["trials"]
        passes += report["passes"]
    _report(4, "noise tolerance theorem", passes == total == 1000, f"{passes}/{total}")


def test_c05_inclusion_claim_diagnostic():
    """The adversarial construction refutes the eta <= eps/2 claim as printed."""
    corpus = sample_gaussian_corpus(_std_spec(3), _std_spec(3), 40, 40, 505)
    report = check_inclusion_claim(
        corpus.image_set(), corpus.text_set(),
        JoinConfig(1.0), NoiseSpec(0.5, seed=5), trials=25,
    )
    ok = (
        report["claim_applicable"]
        and report["adversarial"]["violation"]
        and report["violations_found"] >= 1
        and report["reproducible_as_printed"] is False
    )
    _report(5, "inclusion-claim counterexample", ok,
            f"violations={report['violations_found']}")


def test_c06_monotonicity_and_convergence():
    """Nested pair sets along every grid; full join at eps >= diameter."""
    all_ok = True
    for c in range(20):
        rng = substream(606, "acceptance-mono", c)
        d = int(rng.integers(1, 7))
        spec = GaussianSpec(d, rng.uniform(-1, 1, d), float(rng.uniform(0.3, 1.5)))
        corpus = sample_gaussian_corpus(
            spec, spec, int(rng.integers(10, 60)), int(rng.integers(10, 60)),
            int(rng.integers(1e9)),
        )
        X, Y = corpus.image_set(), corpus.text_set()
        diam = max_cross_distance(X, Y)
        grid = [diam * f for f in (0.2, 0.5, 0.8)] + [diam * (1 + 1e-12)]
        report = verify_monotonicity(X, Y, grid)
        complete = report["details"][-1]["count"] == len(X) * len(Y)
        all_ok = all_ok and report["passed"] and complete
    _report(6, "monotonicity and convergence on 20 random corpora", all_ok)


def test_c07_engine_equivalence():
    """Grid join equals brute-force join exactly on 50 randomized instances."""
    all_ok = True
    for c in range(50):
        rng = substream(707, "acceptance-engines", c)
        d = int(rng.integers(1, 9))
        n_cap = 2000 if d <= 3 else 400
        n_x = int(rng.integers(50, n_cap + 1))
        n_y = int(rng.integers(50, n_cap + 1))
        X = PointSet(
            tuple(f"x-{k:05d}" for k in range(n_x)), rng.random((n_x, d)) * 2.0
        )
        Y = PointSet(
            tuple(f"y-{k:05d}" for k in range(n_y)), rng.random((n_y, d)) * 2.0
        )
        eps = float(rng.uniform(0.05, 0.25)) * math.sqrt(d)
        cfg = JoinConfig(eps)
        a = join_bruteforce(X, Y, cfg)
        b = join_grid(X, Y, cfg)
        all_ok = all_ok and a.pairs == b.pairs
    _report(7, "grid == brute on 50 instances", all_ok)


def test_c08_projector_laws():
    """Idempotence/annihilation to 1e-10, completeness/Pythagoras to 1e-9."""
    reports = []
    for d, plan, seed in ((16, DimensionPlan(6, 5, 5), 1), (9, DimensionPlan(3, 3, 3), 2)):
        dec = random_orthogonal_decomposition(d, plan, seed)
        reports.append(projector_laws_check(dec, 500, seed))
    ok = all(r["passed"] for r in reports) and sum(r["trials"] for r in reports) == 1000
    _report(8, "projector laws on 1000 random vectors", ok)


def test_c09_perturbation_stability():
    """Pythagorean split of perturbations holds to 1e-9 in 1000 trials."""
    dec = random_orthogonal_decomposition(8, DimensionPlan(3, 3, 2), 909)
    report = perturb_stability_check(dec, 1000, eta=0.8, seed=910)
    _report(9, "perturbation stability", report["passed"], f"{report['passes']}/1000")


def test_c10_gradient_correctness():
    """Analytic vs central-difference gradients within 1e-4 on 10 instances."""
    worst = 0.0
    for c in range(10):
        rng = substream(1010, "acceptance-grad", c)
        d = int(rng.integers(4, 11))
        ds = int(rng.integers(1, d - 1))
        di = int(rng.integers(1, d - ds))
        dt = d - ds - di
        plan = DimensionPlan(ds, di, max(dt, 1))
        dim = plan.total
        corpus, _ = make_planted_corpus(dim, plan, int(rng.integers(5, 25)), c)
        mode = "hinge" if c % 2 else "literal"
        weights = LossWeights(
            lam=float(rng.uniform(0, 2)),
            gamma=float(rng.uniform(-1, 1)),
            specificity_mode=mode,
            hinge_margin=float(rng.uniform(0.1, 1.0)),
        )
        worst = max(worst, gradient_check(corpus, plan, weights, seed=c))
    _report(10, "gradient check on 10 instances", worst <= 1e-4, f"max rel err={worst:.2e}")


def test_c11_planted_model_recovery():
    """Optimizer reaches L_orth <= 1e-6 and L_align <= 1.05x planted optimum."""
    t0 = time.monotonic()
    plan = DimensionPlan(4, 2, 2)
    corpus, truth = make_planted_corpus(8, plan, 150, seed=1111, noise=1e-3)
    planted = loss_align(truth, corpus)
    dec, trace = optimize(
        corpus, plan, LossWeights(lam=1.0, gamma=0.0),
        steps=2000, learning_rate=1e-3, seed=1112,
    )
    elapsed = time.monotonic() - t0
    ok = trace[-1].orth <= 1e-6 and trace[-1].align <= 1.05 * planted and elapsed <= 30.0
    _report(11, "planted-model recovery", ok,
            f"align ratio={trace[-1].align / planted:.3f}, orth={trace[-1].orth:.1e}, {elapsed:.1f}s")


def test_c12_dimensionality_allocation():
    """(16, equal variances) -> (8,4,4); swap symmetry; valid on 1000 draws."""
    plan = allocate_dimensions(16, 1.0, 1.0)
    ok = (plan.d_s, plan.d_i, plan.d_t) == (8, 4, 4)
    rng = substream(1212, "acceptance-alloc")
    for _ in range(1000):
        d = int(rng.integers(3, 128))
        vf = float(10.0 ** rng.uniform(-2, 2))
        vg = float(10.0 ** rng.uniform(-2, 2))
        p = allocate_dimensions(d, vf, vg)
        q = allocate_dimensions(d, vg, vf)
        ok = ok and p.total == d and min(p.d_s, p.d_i, p.d_t) >= 1
        ok = ok and (p.d_s, p.d_i, p.d_t) == (q.d_s, q.d_t, q.d_i)
        if not ok:
            break
    _report(12, "dimension allocation", ok)


def test_c13_alignment_volume_bound():
    """Min-integral matches 2*Phi(-1); product <= bound + 4 combined SE."""
    f = GaussianSpec(1, np.zeros(1), 1.0)
    g = GaussianSpec(1, np.full(1, 2.0), 1.0)
    prod, bound = alignment_volume_mc(f, g, 200_000, seed=1313)
    oracle = 2.0 * 0.5 * (1.0 + math.erf(-1.0 / math.sqrt(2.0)))
    assert round(oracle, 4) == 0.3173
    ok = abs(bound.value - oracle) <= 4.0 * bound.std_error
    rng = substream(1314, "acceptance-volume")
    for _ in range(20):
        # variances >= 0.2 keep both densities bounded by 1 on the line
        sf = GaussianSpec(1, rng.uniform(-2, 2, 1), float(rng.uniform(0.2, 3.0)))
        sg = GaussianSpec(1, rng.uniform(-2, 2, 1), float(rng.uniform(0.2, 3.0)))
        p, b = alignment_volume_mc(sf, sg, 50_000, seed=int(rng.integers(1e9)))
        ok = ok and p.value <= b.value + 4.0 * (p.std_error + b.std_error)
    _report(13, "alignment volume bound", ok,
            f"min-integral={bound.value:.4f} vs {oracle:.4f}")


def test_c14_ring_round_trip_and_axioms():
    """10,000 exact round trips; ring axioms over Z_256 and Z_7."""
    rng = substream(1414, "acceptance-ring")
    ok = True
    for _ in range(5000):
        pixels = [int(v) for v in rng.integers(0, 256, int(rng.integers(1, 16)))]
        ok = ok and decode(encode_patch(pixels)) == pixels
        toks = [int(v) for v in rng.integers(0, 50000, int(rng.integers(0, 16)))]
        ok = ok and decode(encode_tokens(toks, 50000)) == toks
    for modulus in (256, 7):
        for _ in range(300):
            polys = []
            for _k in range(3):
                length = int(rng.integers(0, 7))
                polys.append(
                    RingPoly(modulus, tuple(int(v) for v in rng.integers(0, modulus, length)))
                )
            a, b, c = polys
            ok = ok and ring_add(a, b) == ring_add(b, a)
            ok = ok and ring_add(ring_add(a, b), c) == ring_add(a, ring_add(b, c))
            ok = ok and ring_mul(ring_mul(a, b), c) == ring_mul(a, ring_mul(b, c))
            lhs = ring_mul(a, ring_add(b, c))
            rhs = ring_add(ring_mul(a, b), ring_mul(a, c))
            n = max(len(lhs.coeffs), len(rhs.coeffs), 1)
            ok = ok and lhs.coeffs + (0,) * (n - len(lhs.coeffs)) == rhs.coeffs + (0,) * (n - len(rhs.coeffs))
            ok = ok and ring_add(a, zero(modulus)) == a
    _report(14, "ring round trips and axioms", ok)


def test_c15_cli_determinism(tmp_path):
    """Every CLI command repeated with the same seed is byte-identical."""
    patches = tmp_path / "patches.csv"
    patches.write_text("".join(f"{k % 250},{(3 * k) % 250},9\n" for k in range(8)))
    tokens = tmp_path / "tokens.jsonl"
    tokens.write_text(
        "".join(json.dumps({"id": f"t{k}", "tokens": [k, k + 7]}) + "\n" for k in range(8))
    )

    def run_all(base):
        gen_dir = base / "gen"
        assert main(["gen", "--mode", "planted", "--dim", "6", "--ds", "2", "--di",
                     "2", "--dt", "2", "--n", "40", "--seed", "21",
                     "--out", str(gen_dir)]) == EXIT_OK
        emb_dir = base / "embed"
        assert main(["embed", "--patches", str(patches), "--tokens", str(tokens),
                     "--dim", "4", "--seed", "22", "--out", str(emb_dir)]) == EXIT_OK
        join_dir = base / "join"
        assert main(["join", "--input", str(gen_dir / "corpus.csv"), "--eps", "1.5",
                     "--seed", "23", "--out", str(join_dir)]) == EXIT_OK
        size_dir = base / "size"
        assert main(["size", "--dim", "2", "--n-samples", "20000", "--n-empirical",
                     "60", "--seed", "24", "--out", str(size_dir)]) == EXIT_OK
        ver_dir = base / "verify"
        assert main(["verify", "--seed", "25", "--dim", "4", "--trials", "10",
                     "--out", str(ver_dir)]) == EXIT_OK
        dec_dir = base / "decompose"
        assert main(["decompose", "--input", str(gen_dir / "corpus.csv"), "--steps",
                     "60", "--lr", "1e-3", "--seed", "26",
                     "--out", str(dec_dir)]) == EXIT_OK
        return {
            str(p.relative_to(base)): p.read_bytes()
            for p in sorted(base.rglob("*"))
            if p.is_file()
        }

    first = run_all(tmp_path / "run1")
    second = run_all(tmp_path / "run2")
    _report(15, "CLI determinism across all six commands", first == second)
