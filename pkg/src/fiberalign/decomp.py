"""Orthogonal decomposition of the embedding space into shared and
modality-specific subspaces, with the associated loss and optimizer.

The space R^d is split as Z = Z_s + Z_I + Z_T with mutually orthogonal
subspaces: Z_s carries semantics common to both modalities, Z_I and Z_T the
image-only and text-only features. A decomposition stores one orthonormal
basis per subspace; projections are B @ B.T. The optimizer runs full-batch
gradient descent on the stacked basis matrix, re-orthonormalizing each
subspace basis after every step while cross-subspace orthogonality is only
encouraged by the penalty term, matching the soft formulation of the loss:

    L = L_align + lambda * L_orth + gamma * L_specificity
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .embed import IMAGE, TEXT, CorpusPoint, EmbeddedCorpus, GaussianSpec
from .errors import DomainError, OptimizationError, ParseError
from .fiber import SizeEstimate
from .rng import substream

BASIS_ORTHO_TOL = 1e-10  # within-basis column orthonormality
CROSS_ORTHO_TOL = 1e-10  # cross-basis inner products for `orthogonal` status
COMPLETE_TOL = 1e-9  # reconstruction / completeness
_VOLUME_MC_CHUNK = 131072


@dataclass(frozen=True)
class Decomposition:
    """Three disjoint subspace bases of R^dim (columns are basis vectors).

    Each basis is column-orthonormal on its own; the decomposition is
    certified `orthogonal` only when all cross-basis inner products vanish
    to CROSS_ORTHO_TOL as well.
    """

    basis_s: np.ndarray
    basis_i: np.ndarray
    basis_t: np.ndarray

    def __post_init__(self):
        mats = {}
        dim = None
        for name in ("basis_s", "basis_i", "basis_t"):
            b = np.asarray(getattr(self, name), dtype=np.float64)
            if b.ndim != 2:
                raise DomainError(f"{name} must be 2-D, got shape {b.shape}")
            if not np.all(np.isfinite(b)):
                raise DomainError(f"{name} has non-finite entries")
            if dim is None:
                dim = b.shape[0]
            elif b.shape[0] != dim:
                raise DomainError(
                    f"{name} has {b.shape[0]} rows, expected {dim}"
                )
            if b.shape[1] > 0:
                gram = b.T @ b
                err = np.abs(gram - np.eye(b.shape[1])).max()
                if err > BASIS_ORTHO_TOL:
                    raise DomainError(
                        f"{name} columns are not orthonormal (error {err:.3e})"
                    )
            mats[name] = b
        if sum(m.shape[1] for m in mats.values()) > dim:
            raise DomainError("subspace dimensions exceed the ambient dimension")
        for name, b in mats.items():
            b = b.copy()
            b.flags.writeable = False
            object.__setattr__(self, name, b)

    @property
    def dim(self) -> int:
        return self.basis_s.shape[0]

    @property
    def d_s(self) -> int:
        return self.basis_s.shape[1]

    @property
    def d_i(self) -> int:
        return self.basis_i.shape[1]

    @property
    def d_t(self) -> int:
        return self.basis_t.shape[1]

    def is_complete(self) -> bool:
        return self.d_s + self.d_i + self.d_t == self.dim

    def cross_coupling(self) -> float:
        """Largest |<u, v>| over basis vectors u, v from different subspaces."""
        worst = 0.0
        bases = [self.basis_s, self.basis_i, self.basis_t]
        for a in range(3):
            for b in range(a + 1, 3):
                if bases[a].shape[1] and bases[b].shape[1]:
                    worst = max(worst, float(np.abs(bases[a].T @ bases[b]).max()))
        return worst

    def is_orthogonal(self, tol: float = CROSS_ORTHO_TOL) -> bool:
        return self.cross_coupling() <= tol

    def basis(self, which: str) -> np.ndarray:
        try:
            return {"s": self.basis_s, "i": self.basis_i, "t": self.basis_t}[which]
        except KeyError:
            raise DomainError(f"subspace selector must be 's', 'i' or 't', got {which!r}")


@dataclass(frozen=True)
class ComponentSplit:
    """The three subspace components of a vector; their sum reconstructs it."""

    z_s: np.ndarray
    z_i: np.ndarray
    z_t: np.ndarray


class LossRecord(NamedTuple):
    total: float
    align: float
    orth: float
    specificity: float


@dataclass(frozen=True)
class LossWeights:
    """Weights of the three-term loss, and the specificity variant.

    `literal` implements the printed specificity formula +gamma*||.||^2,
    which shrinks modality-specific components when minimized; `hinge`
    implements the stated intent (penalize components smaller than the
    margin): sum of max(0, margin - ||component||^2).
    """

    lam: float = 1.0
    gamma: float = 0.1
    specificity_mode: str = "literal"
    hinge_margin: float = 1.0

    def __post_init__(self):
        if self.lam < 0:
            raise DomainError(f"lambda must be >= 0, got {self.lam}")
        if not math.isfinite(self.gamma):
            raise DomainError(f"gamma must be finite, got {self.gamma}")
        if self.specificity_mode not in ("literal", "hinge"):
            raise DomainError(
                f"specificity_mode must be 'literal' or 'hinge', got {self.specificity_mode!r}"
            )
        if self.hinge_margin < 0:
            raise DomainError(f"hinge_margin must be >= 0, got {self.hinge_margin}")


@dataclass(frozen=True)
class DimensionPlan:
    """Per-subspace dimensions; each at least 1."""

    d_s: int
    d_i: int
    d_t: int

    def __post_init__(self):
        for name in ("d_s", "d_i", "d_t"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise DomainError(f"{name} must be an integer >= 1, got {v!r}")

    @property
    def total(self) -> int:
        return self.d_s + self.d_i + self.d_t


def axis_aligned_decomposition(dim: int, plan: DimensionPlan) -> Decomposition:
    """Standard-basis decomposition: first d_s axes shared, then image, text."""
    if plan.total > dim:
        raise DomainError(f"plan total {plan.total} exceeds dim {dim}")
    eye = np.eye(dim)
    return Decomposition(
        eye[:, : plan.d_s],
        eye[:, plan.d_s : plan.d_s + plan.d_i],
        eye[:, plan.d_s + plan.d_i : plan.total],
    )


def random_orthogonal_decomposition(
    dim: int, plan: DimensionPlan, seed: int
) -> Decomposition:
    """A uniformly random orthogonal decomposition (QR of a Gaussian matrix)."""
    if plan.total > dim:
        raise DomainError(f"plan total {plan.total} exceeds dim {dim}")
    rng = substream(seed, "random-decomposition")
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return Decomposition(
        q[:, : plan.d_s],
        q[:, plan.d_s : plan.d_s + plan.d_i],
        q[:, plan.d_s + plan.d_i : plan.total],
    )


def project(dec: Decomposition, z, which: str) -> np.ndarray:
    """Orthogonal projection of z onto the selected subspace: B (B^T z)."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (dec.dim,):
        raise DomainError(f"vector has shape {z.shape}, expected ({dec.dim},)")
    b = dec.basis(which)
    return b @ (b.T @ z)


def split(dec: Decomposition, z) -> ComponentSplit:
    """Unique decomposition z = z_s + z_i + z_t.

    Requires an orthogonal decomposition with a full dimension split, so the
    three projectors sum to the identity.
    """
    if not dec.is_complete():
        raise DomainError(
            f"decomposition covers {dec.d_s + dec.d_i + dec.d_t} of {dec.dim} dimensions"
        )
    if not dec.is_orthogonal():
        raise DomainError(
            f"subspaces are not mutually orthogonal (coupling {dec.cross_coupling():.3e})"
        )
    return ComponentSplit(
        project(dec, z, "s"), project(dec, z, "i"), project(dec, z, "t")
    )


# --- loss terms on raw basis matrices -------------------------------------
#
# These operate on arbitrary (not necessarily orthonormal) matrices, because
# the optimizer's finite-difference oracle perturbs single entries. With
# orthonormal columns, B @ B.T is the exact subspace projection.


class _LossData(NamedTuple):
    diffs: np.ndarray  # paired image - text vectors, (n_pairs, d)
    images: np.ndarray  # all image vectors, (n_i, d)
    texts: np.ndarray  # all text vectors, (n_t, d)
    allpoints: np.ndarray  # every corpus point, (n_i + n_t, d)


def _loss_data(corpus: EmbeddedCorpus, require_pairs: bool = True) -> _LossData:
    images = corpus.image_set().vectors
    texts = corpus.text_set().vectors
    if corpus.pairs:
        px, pt = corpus.pair_matrices()
        diffs = px - pt
    elif require_pairs:
        raise DomainError("corpus has no pairs")
    else:
        diffs = np.zeros((0, corpus.dim))
    return _LossData(diffs, images, texts, np.vstack([images, texts]))


def _align_value(bs: np.ndarray, diffs: np.ndarray) -> float:
    v = (diffs @ bs) @ bs.T
    return float((v * v).sum())


def _align_grad(bs: np.ndarray, diffs: np.ndarray) -> np.ndarray:
    v = (diffs @ bs) @ bs.T
    return 2.0 * (v.T @ diffs + diffs.T @ v) @ bs


def _orth_terms(ba: np.ndarray, bb: np.ndarray, z: np.ndarray):
    u = (z @ ba) @ ba.T
    w = (z @ bb) @ bb.T
    c = (u * w).sum(axis=1)
    return u, w, c


def _orth_value(bs, bi, bt, z) -> float:
    total = 0.0
    for a, b in ((bs, bi), (bs, bt), (bi, bt)):
        _, _, c = _orth_terms(a, b, z)
        total += float((c * c).sum())
    return total


def _orth_grads(bs, bi, bt, z):
    grads = {0: np.zeros_like(bs), 1: np.zeros_like(bi), 2: np.zeros_like(bt)}
    bases = (bs, bi, bt)
    for ia, ib in ((0, 1), (0, 2), (1, 2)):
        u, w, c = _orth_terms(bases[ia], bases[ib], z)
        cw = c[:, None] * w
        cu = c[:, None] * u
        cz = c[:, None] * z
        grads[ia] += 2.0 * (z.T @ cw + w.T @ cz) @ bases[ia]
        grads[ib] += 2.0 * (z.T @ cu + u.T @ cz) @ bases[ib]
    return grads[0], grads[1], grads[2]


def _spec_value(b: np.ndarray, pts: np.ndarray, weights: LossWeights) -> float:
    if pts.shape[0] == 0:
        return 0.0
    v = (pts @ b) @ b.T
    sq = (v * v).sum(axis=1)
    if weights.specificity_mode == "literal":
        return float(sq.sum())
    return float(np.maximum(0.0, weights.hinge_margin - sq).sum())


def _spec_grad(b: np.ndarray, pts: np.ndarray, weights: LossWeights) -> np.ndarray:
    if pts.shape[0] == 0:
        return np.zeros_like(b)
    v = (pts @ b) @ b.T
    if weights.specificity_mode == "literal":
        return 2.0 * (v.T @ pts + pts.T @ v) @ b
    active = ((v * v).sum(axis=1) < weights.hinge_margin).astype(np.float64)
    av = active[:, None] * v
    ap = active[:, None] * pts
    return -2.0 * (av.T @ pts + ap.T @ v) @ b


def _raw_losses(bs, bi, bt, data: _LossData, weights: LossWeights) -> LossRecord:
    align = _align_value(bs, data.diffs)
    orth = _orth_value(bs, bi, bt, data.allpoints)
    spec = _spec_value(bi, data.images, weights) + _spec_value(bt, data.texts, weights)
    total = align + weights.lam * orth + weights.gamma * spec
    return LossRecord(total, align, orth, spec)


def _raw_grads(bs, bi, bt, data: _LossData, weights: LossWeights):
    gs = _align_grad(bs, data.diffs)
    os_, oi, ot = _orth_grads(bs, bi, bt, data.allpoints)
    gs = gs + weights.lam * os_
    gi = weights.lam * oi + weights.gamma * _spec_grad(bi, data.images, weights)
    gt = weights.lam * ot + weights.gamma * _spec_grad(bt, data.texts, weights)
    return gs, gi, gt


# --- public loss operations ------------------------------------------------


def loss_align(dec: Decomposition, corpus: EmbeddedCorpus) -> float:
    """Sum over pairs of squared distance between shared-subspace projections."""
    data = _loss_data(corpus)
    return _align_value(dec.basis_s, data.diffs)


def loss_orth(dec: Decomposition, corpus: EmbeddedCorpus) -> float:
    """Sum over corpus points of squared cross-component dot products."""
    data = _loss_data(corpus, require_pairs=False)
    return _orth_value(dec.basis_s, dec.basis_i, dec.basis_t, data.allpoints)


def loss_specificity(
    dec: Decomposition, corpus: EmbeddedCorpus, weights: LossWeights
) -> float:
    """Size of the modality-specific components (literal or hinge form)."""
    data = _loss_data(corpus, require_pairs=False)
    return _spec_value(dec.basis_i, data.images, weights) + _spec_value(
        dec.basis_t, data.texts, weights
    )


def total_loss(
    dec: Decomposition, corpus: EmbeddedCorpus, weights: LossWeights
) -> float:
    """L_align + lambda * L_orth + gamma * L_specificity."""
    data = _loss_data(corpus)
    return _raw_losses(
        dec.basis_s, dec.basis_i, dec.basis_t, data, weights
    ).total


def _orthonormalize(b: np.ndarray) -> np.ndarray:
    if b.shape[1] == 0:
        return b
    q, _ = np.linalg.qr(b)
    return q


def optimize(
    corpus: EmbeddedCorpus,
    plan: DimensionPlan,
    weights: LossWeights,
    steps: int,
    learning_rate: float,
    seed: int,
) -> tuple[Decomposition, list[LossRecord]]:
    """Full-batch gradient descent on the stacked basis matrix.

    After every step each subspace basis is re-orthonormalized (QR); the
    cross-subspace orthogonality is driven only by lambda * L_orth. The
    trace records the loss after each step, so it has exactly `steps`
    entries. Deterministic in the seed.
    """
    if plan.total != corpus.dim:
        raise DomainError(
            f"plan allocates {plan.total} dimensions, corpus dim is {corpus.dim}"
        )
    if steps < 1:
        raise DomainError(f"steps must be >= 1, got {steps}")
    if not (learning_rate > 0):
        raise DomainError(f"learning_rate must be > 0, got {learning_rate}")
    data = _loss_data(corpus)

    rng = substream(seed, "optimize-init")
    q, _ = np.linalg.qr(rng.standard_normal((corpus.dim, corpus.dim)))
    bs = q[:, : plan.d_s].copy()
    bi = q[:, plan.d_s : plan.d_s + plan.d_i].copy()
    bt = q[:, plan.d_s + plan.d_i : plan.total].copy()

    trace: list[LossRecord] = []
    for step in range(steps):
        gs, gi, gt = _raw_grads(bs, bi, bt, data, weights)
        if not all(np.all(np.isfinite(g)) for g in (gs, gi, gt)):
            raise OptimizationError("non-finite gradient", step=step)
        bs = _orthonormalize(bs - learning_rate * gs)
        bi = _orthonormalize(bi - learning_rate * gi)
        bt = _orthonormalize(bt - learning_rate * gt)
        rec = _raw_losses(bs, bi, bt, data, weights)
        if not math.isfinite(rec.total):
            raise OptimizationError("non-finite loss", step=step)
        trace.append(rec)
    return Decomposition(bs, bi, bt), trace


def gradient_check(
    corpus: EmbeddedCorpus,
    plan: DimensionPlan,
    weights: LossWeights,
    seed: int,
    fd_step: float = 1e-5,
) -> float:
    """Max guarded relative error between analytic and central-difference
    gradients of the total loss at a random (non-orthonormalized) point.

    Each entry's error is measured against max(|analytic|, |numeric|, 1), so
    near-zero entries are judged on an absolute unit scale; an all-zero
    corpus therefore reports 0.
    """
    if plan.total != corpus.dim:
        raise DomainError(
            f"plan allocates {plan.total} dimensions, corpus dim is {corpus.dim}"
        )
    data = _loss_data(corpus)
    rng = substream(seed, "gradient-check")
    scale = 1.0 / math.sqrt(corpus.dim)
    mats = [
        rng.standard_normal((corpus.dim, k)) * scale
        for k in (plan.d_s, plan.d_i, plan.d_t)
    ]

    analytic = _raw_grads(*mats, data, weights)
    worst = 0.0
    for m, grad in zip(mats, analytic):
        it = np.nditer(m, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = m[idx]
            m[idx] = orig + fd_step
            hi = _raw_losses(*mats, data, weights).total
            m[idx] = orig - fd_step
            lo = _raw_losses(*mats, data, weights).total
            m[idx] = orig
            numeric = (hi - lo) / (2.0 * fd_step)
            denom = max(abs(grad[idx]), abs(numeric), 1.0)
            worst = max(worst, abs(grad[idx] - numeric) / denom)
    return worst


def allocate_dimensions(d: int, var_f: float, var_g: float) -> DimensionPlan:
    """Split d dimensions per the optimal-allocation proportions.

    Weights (sf^2 + sg^2)/(sf^2 sg^2) : sf^2/sg^2 : sg^2/sf^2 are normalized
    to sum d and rounded by largest remainder, with at least one dimension
    per subspace. With exactly equal variances an odd leftover unit goes to
    the shared subspace so that d_I = d_T, keeping the variance-swap
    symmetry exact.
    """
    if d < 3:
        raise DomainError(f"d must be >= 3 to give every subspace a dimension, got {d}")
    if not (var_f > 0) or not (var_g > 0):
        raise DomainError(f"variances must be positive, got ({var_f}, {var_g})")
    w = np.array(
        [
            (var_f + var_g) / (var_f * var_g),
            var_f / var_g,
            var_g / var_f,
        ]
    )
    shares = w / w.sum() * d
    parts = np.floor(shares).astype(int)
    fractions = shares - parts
    # hand out the leftover units by largest fraction; ties go to the larger
    # weight, then to the fixed order (s, i, t)
    order = sorted(range(3), key=lambda k: (-fractions[k], -w[k], k))
    for k in order[: d - int(parts.sum())]:
        parts[k] += 1
    if var_f == var_g and parts[1] != parts[2]:
        excess = parts[1] - parts[2]
        parts[1] -= excess
        parts[0] += excess
    while (parts < 1).any():
        # give to the emptiest (larger weight first on ties), take from the
        # fullest (smaller weight first on ties); weight-aware tie-breaking
        # keeps the variance-swap symmetry exact
        needy = min(range(3), key=lambda k: (parts[k], -w[k], k))
        donor = max(range(3), key=lambda k: (parts[k], -w[k], k))
        parts[donor] -= 1
        parts[needy] += 1
    return DimensionPlan(int(parts[0]), int(parts[1]), int(parts[2]))


def _iso_log_pdf(x: np.ndarray, spec: GaussianSpec) -> np.ndarray:
    d = spec.dim
    n2 = ((x - spec.mean) ** 2).sum(axis=1)
    return -0.5 * n2 / spec.variance - 0.5 * d * math.log(2.0 * math.pi * spec.variance)


def alignment_volume_mc(
    spec_f: GaussianSpec,
    spec_g: GaussianSpec,
    n_samples: int,
    seed: int,
) -> tuple[SizeEstimate, SizeEstimate]:
    """Monte Carlo estimates of the alignment volume and its upper bound.

    Returns (integral of mu_f * mu_g, integral of min(mu_f, mu_g)) over the
    shared coordinates, both with standard errors, via importance sampling
    from the balanced mixture (mu_f + mu_g) / 2.
    """
    if spec_f.dim != spec_g.dim:
        raise DomainError(f"dim mismatch: {spec_f.dim} != {spec_g.dim}")
    if not 1 <= spec_f.dim <= 8:
        raise DomainError(f"shared dimension must be in [1, 8], got {spec_f.dim}")
    if n_samples < 1:
        raise DomainError(f"n_samples must be >= 1, got {n_samples}")
    rng = substream(seed, "alignment-volume")
    d = spec_f.dim
    sums = np.zeros(2)
    sumsq = np.zeros(2)
    done = 0
    while done < n_samples:
        m = min(_VOLUME_MC_CHUNK, n_samples - done)
        z = rng.standard_normal((m, d))
        from_f = rng.random(m) < 0.5
        x = np.where(
            from_f[:, None],
            spec_f.mean + spec_f.sigma * z,
            spec_g.mean + spec_g.sigma * z,
        )
        pf = np.exp(_iso_log_pdf(x, spec_f))
        pg = np.exp(_iso_log_pdf(x, spec_g))
        q = 0.5 * (pf + pg)
        w_prod = np.divide(pf * pg, q, out=np.zeros_like(q), where=q > 0)
        w_min = np.divide(np.minimum(pf, pg), q, out=np.zeros_like(q), where=q > 0)
        sums += (w_prod.sum(), w_min.sum())
        sumsq += ((w_prod**2).sum(), (w_min**2).sum())
        done += m
    means = sums / n_samples
    if n_samples > 1:
        var = np.maximum(0.0, (sumsq - n_samples * means**2) / (n_samples - 1))
        ses = np.sqrt(var / n_samples)
    else:
        ses = np.zeros(2)
    return (
        SizeEstimate(float(means[0]), float(ses[0]), n_samples),
        SizeEstimate(float(means[1]), float(ses[1]), n_samples),
    )


def _numerical_rank(m: np.ndarray, rank_tol: float) -> int:
    if m.size == 0:
        return 0
    svals = np.linalg.svd(m, compute_uv=False)
    if svals.size == 0 or svals[0] <= 0:
        return 0
    return int((svals > rank_tol * svals[0]).sum())


def check_dim_constraint(
    points_f: np.ndarray, points_g: np.ndarray, rank_tol: float = 1e-8
) -> dict:
    """Check dim(Z_s) <= min(dim f(I), dim g(T)) on embedded point clouds.

    The shared span is computed as the numerical intersection of the two
    point spans: dim(A ^ B) = rank(A) + rank(B) - rank([A; B]).
    """
    f = np.asarray(points_f, dtype=np.float64)
    g = np.asarray(points_g, dtype=np.float64)
    if f.ndim != 2 or g.ndim != 2 or f.shape[0] == 0 or g.shape[0] == 0:
        raise DomainError("point matrices must be non-empty and 2-D")
    if f.shape[1] != g.shape[1]:
        raise DomainError(
            f"ambient dim mismatch: {f.shape[1]} != {g.shape[1]}"
        )
    rank_f = _numerical_rank(f, rank_tol)
    rank_g = _numerical_rank(g, rank_tol)
    rank_union = _numerical_rank(np.vstack([f, g]), rank_tol)
    shared = max(0, rank_f + rank_g - rank_union)
    return {
        "check": "dim_constraint",
        "passed": shared <= min(rank_f, rank_g),
        "trials": 1,
        "details": [
            {
                "rank_f": rank_f,
                "rank_g": rank_g,
                "rank_union": rank_union,
                "shared_rank": shared,
            }
        ],
    }


def perturb_stability_check(
    dec: Decomposition, trials: int, eta: float, seed: int
) -> dict:
    """Check the Pythagorean split of perturbations and projection bounds.

    For random z and delta with ||delta|| <= eta: ||delta||^2 equals the sum
    of its three component norms (to COMPLETE_TOL, relative) and each
    projection moves by at most eta.
    """
    if not dec.is_complete() or not dec.is_orthogonal():
        raise DomainError("requires an orthogonal, complete decomposition")
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    if eta < 0:
        raise DomainError(f"eta must be >= 0, got {eta}")
    from .fiber import sample_bounded_perturbation

    rng = substream(seed, "perturb-stability")
    failures = []
    for t in range(trials):
        z = rng.standard_normal(dec.dim)
        delta = sample_bounded_perturbation(rng, 1, dec.dim, eta)[0]
        parts = split(dec, delta)
        lhs = float(delta @ delta)
        rhs = sum(float(p @ p) for p in (parts.z_s, parts.z_i, parts.z_t))
        pythagoras_ok = abs(lhs - rhs) <= COMPLETE_TOL * max(1.0, lhs)
        move_ok = all(
            float(np.linalg.norm(project(dec, z + delta, w) - project(dec, z, w)))
            <= eta + 1e-12
            for w in ("s", "i", "t")
        )
        if not (pythagoras_ok and move_ok):
            failures.append(
                {"trial": t, "pythagoras_ok": pythagoras_ok, "move_ok": move_ok}
            )
    return {
        "check": "perturbation_stability",
        "passed": not failures,
        "trials": trials,
        "passes": trials - len(failures),
        "details": failures,
    }


def projector_laws_check(dec: Decomposition, trials: int, seed: int) -> dict:
    """Exercise the projector laws on random vectors.

    Checks, per sampled z: idempotence Pi(Pi z) = Pi z and mutual
    annihilation Pi_a(Pi_b z) = 0 to BASIS_ORTHO_TOL; completeness
    (sum of projections reconstructs z) and the norm decomposition
    ||z||^2 = sum ||Pi z||^2 to COMPLETE_TOL.
    """
    if not dec.is_complete() or not dec.is_orthogonal():
        raise DomainError("requires an orthogonal, complete decomposition")
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    rng = substream(seed, "projector-laws")
    failures = []
    subspaces = ("s", "i", "t")
    for t in range(trials):
        z = rng.standard_normal(dec.dim)
        projs = {w: project(dec, z, w) for w in subspaces}
        idem = max(
            float(np.abs(project(dec, projs[w], w) - projs[w]).max())
            for w in subspaces
        )
        annih = max(
            float(np.abs(project(dec, projs[b], a)).max())
            for a in subspaces
            for b in subspaces
            if a != b
        )
        recon = sum(projs.values())
        complete = float(np.abs(recon - z).max())
        z2 = float(z @ z)
        norm_err = abs(z2 - sum(float(p @ p) for p in projs.values()))
        ok = (
            idem <= BASIS_ORTHO_TOL
            and annih <= BASIS_ORTHO_TOL
            and complete <= COMPLETE_TOL
            and norm_err <= COMPLETE_TOL * max(1.0, z2)
        )
        if not ok:
            failures.append(
                {
                    "trial": t,
                    "idempotence_err": idem,
                    "annihilation_err": annih,
                    "completeness_err": complete,
                    "norm_err": norm_err,
                }
            )
    return {
        "check": "projector_laws",
        "passed": not failures,
        "trials": trials,
        "passes": trials - len(failures),
        "details": failures,
    }


def misalignment_vs_ds_sweep(
    corpus: EmbeddedCorpus,
    d_s_values,
    weights: LossWeights,
    steps: int,
    learning_rate: float,
    seed: int,
) -> list[dict]:
    """Optimize at each shared dimension and record the worst pair misalignment.

    The remaining dimensions are split as evenly as possible between the two
    modality subspaces, each keeping at least 1 (d_s = dim - 1 or dim is
    rejected). Emits one row per requested d_s for trend inspection; no
    theorem is asserted.
    """
    d = corpus.dim
    rows = []
    for ds in d_s_values:
        ds = int(ds)
        if ds < 1 or ds > d - 2:
            raise DomainError(
                f"d_s must be in [1, {d - 2}] so both modality subspaces keep "
                f"a dimension, got {ds}"
            )
        rest = d - ds
        plan = DimensionPlan(ds, (rest + 1) // 2, rest // 2)
        dec, trace = optimize(corpus, plan, weights, steps, learning_rate, seed)
        px, pt = corpus.pair_matrices()
        v = ((px - pt) @ dec.basis_s) @ dec.basis_s.T
        sup = float((v * v).sum(axis=1).max())
        rows.append(
            {
                "d_s": ds,
                "d_i": plan.d_i,
                "d_t": plan.d_t,
                "sup_misalignment": sup,
                "final_align": trace[-1].align,
                "final_orth": trace[-1].orth,
                "final_total": trace[-1].total,
            }
        )
    return rows


def make_planted_corpus(
    dim: int,
    plan: DimensionPlan,
    n_pairs: int,
    seed: int,
    noise: float = 1e-3,
    coord_scale: float = 1.0,
) -> tuple[EmbeddedCorpus, Decomposition]:
    """Synthesize a paired corpus from a known ground-truth decomposition.

    Shared coordinates are sampled once per pair; each modality adds its own
    independent specific coordinates plus isotropic Gaussian noise. Returns
    the corpus and the planted decomposition (the optimization oracle).
    """
    if plan.total != dim:
        raise DomainError(f"plan allocates {plan.total} dimensions, dim is {dim}")
    if n_pairs < 1:
        raise DomainError(f"n_pairs must be >= 1, got {n_pairs}")
    if noise < 0 or coord_scale <= 0:
        raise DomainError("noise must be >= 0 and coord_scale > 0")
    rng = substream(seed, "planted-model")
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    truth = Decomposition(
        q[:, : plan.d_s],
        q[:, plan.d_s : plan.d_s + plan.d_i],
        q[:, plan.d_s + plan.d_i : plan.total],
    )
    shared = coord_scale * rng.standard_normal((n_pairs, plan.d_s))
    img_spec = coord_scale * rng.standard_normal((n_pairs, plan.d_i))
    txt_spec = coord_scale * rng.standard_normal((n_pairs, plan.d_t))
    xs = shared @ truth.basis_s.T + img_spec @ truth.basis_i.T
    ys = shared @ truth.basis_s.T + txt_spec @ truth.basis_t.T
    xs = xs + noise * rng.standard_normal((n_pairs, dim))
    ys = ys + noise * rng.standard_normal((n_pairs, dim))
    width = len(str(n_pairs - 1))
    points = [CorpusPoint(f"img-{k:0{width}d}", IMAGE, xs[k]) for k in range(n_pairs)]
    points += [CorpusPoint(f"txt-{k:0{width}d}", TEXT, ys[k]) for k in range(n_pairs)]
    pairs = [(f"img-{k:0{width}d}", f"txt-{k:0{width}d}") for k in range(n_pairs)]
    return EmbeddedCorpus(dim, points, pairs), truth


def save_decomposition(dec: Decomposition, path) -> None:
    """Write `dim=..,ds=..,di=..,dt=..` then the stacked basis row-major."""
    stacked = np.hstack([dec.basis_s, dec.basis_i, dec.basis_t])
    with open(path, "w", newline="") as fh:
        fh.write(f"dim={dec.dim},ds={dec.d_s},di={dec.d_i},dt={dec.d_t}\n")
        writer = csv.writer(fh, lineterminator="\n")
        for row in stacked:
            writer.writerow([repr(float(v)) for v in row])


def load_decomposition(path) -> Decomposition:
    """Parse a decomposition file written by save_decomposition."""
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        fields = {}
        try:
            for part in header.split(","):
                key, val = part.split("=")
                fields[key] = int(val)
            dim, ds, di, dt = (fields[k] for k in ("dim", "ds", "di", "dt"))
        except (ValueError, KeyError):
            raise ParseError(
                f"expected header 'dim=..,ds=..,di=..,dt=..', got {header!r}",
                path=path,
                line=1,
            )
        width = ds + di + dt
        rows = []
        for lineno, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line:
                continue
            row = next(csv.reader([line]))
            if len(row) != width:
                raise ParseError(
                    f"expected {width} values, got {len(row)}", path=path, line=lineno
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise ParseError("non-numeric entry", path=path, line=lineno)
        if len(rows) != dim:
            raise ParseError(
                f"expected {dim} basis rows, got {len(rows)}", path=path, line=1
            )
    stacked = np.array(rows, dtype=np.float64)
    return Decomposition(
        stacked[:, :ds], stacked[:, ds : ds + di], stacked[:, ds + di :]
    )


def write_loss_trace(trace: list[LossRecord], path) -> None:
    """Write the per-step loss trace as step,total,align,orth,specificity."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "total", "align", "orth", "specificity"])
        for k, rec in enumerate(trace):
            writer.writerow(
                [k, repr(rec.total), repr(rec.align), repr(rec.orth), repr(rec.specificity)]
            )
