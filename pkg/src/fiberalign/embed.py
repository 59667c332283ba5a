"""Embedding of ring polynomials into the shared space R^d, and corpora.

The shared real polynomial space is realized as R^d (coefficient vectors of
bounded degree), and the image/text embedding maps are seeded random linear
maps applied to normalized coefficient vectors. This keeps every property of
the framework checkable without training an encoder, and the decomposition
optimizer stays linear end to end.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParseError
from .ringpoly import RingPoly
from .rng import substream

IMAGE = "image"
TEXT = "text"
MODALITIES = (IMAGE, TEXT)


def _as_readonly(a: np.ndarray) -> np.ndarray:
    # always copy: freezing a caller-owned array in place would be rude
    a = np.array(a, dtype=np.float64, order="C")
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class EmbeddingMap:
    """A seeded linear map from normalized coefficient vectors to R^out_dim.

    Weights are a pure function of (seed, input_len, out_dim): rebuilding with
    the same parameters reproduces them bit-for-bit.
    """

    seed: int
    input_len: int
    out_dim: int
    modulus: int
    weights: np.ndarray  # (out_dim, input_len)

    def __post_init__(self):
        if self.input_len < 1 or self.out_dim < 1:
            raise DomainError(
                f"input_len and out_dim must be >= 1, got ({self.input_len}, {self.out_dim})"
            )
        if self.modulus < 2:
            raise DomainError(f"modulus must be >= 2, got {self.modulus}")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (self.out_dim, self.input_len):
            raise DomainError(
                f"weights shape {w.shape} != (out_dim, input_len) = "
                f"({self.out_dim}, {self.input_len})"
            )
        object.__setattr__(self, "weights", _as_readonly(w))


def build_map(seed: int, input_len: int, out_dim: int, modulus: int) -> EmbeddingMap:
    """Construct the seeded linear map for polynomials of length input_len.

    Entries are i.i.d. uniform on [-1/sqrt(input_len), +1/sqrt(input_len)],
    drawn from a substream keyed by (seed, input_len, out_dim).
    """
    if input_len < 1 or out_dim < 1:
        raise DomainError(
            f"input_len and out_dim must be >= 1, got ({input_len}, {out_dim})"
        )
    if modulus < 2:
        raise DomainError(f"modulus must be >= 2, got {modulus}")
    rng = substream(seed, "embedding-map", input_len, out_dim, modulus)
    bound = 1.0 / math.sqrt(input_len)
    weights = rng.uniform(-bound, bound, size=(out_dim, input_len))
    return EmbeddingMap(seed, input_len, out_dim, modulus, weights)


def embed_poly(emap: EmbeddingMap, p: RingPoly) -> np.ndarray:
    """Map a polynomial into R^out_dim.

    Coefficients are zero-padded to input_len, normalized into [0, 1] by
    dividing by (modulus - 1), then multiplied by the weight matrix. The map
    is linear in the normalized coefficient vector.
    """
    if p.modulus != emap.modulus:
        raise DomainError(f"modulus mismatch: poly {p.modulus} != map {emap.modulus}")
    if len(p.coeffs) > emap.input_len:
        raise DomainError(
            f"polynomial has {len(p.coeffs)} coefficients, exceeding the "
            f"degree bound of {emap.input_len}"
        )
    vec = np.zeros(emap.input_len, dtype=np.float64)
    if p.coeffs:
        vec[: len(p.coeffs)] = p.coeffs
    vec /= emap.modulus - 1
    return emap.weights @ vec


@dataclass(frozen=True)
class GaussianSpec:
    """An isotropic Gaussian N(mean, variance * I) on R^dim."""

    dim: int
    mean: np.ndarray
    variance: float

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError(f"dim must be >= 1, got {self.dim}")
        mean = np.asarray(self.mean, dtype=np.float64)
        if mean.ndim == 0:
            mean = np.full(self.dim, float(mean))
        if mean.shape != (self.dim,):
            raise DomainError(f"mean shape {mean.shape} != ({self.dim},)")
        if not np.all(np.isfinite(mean)):
            raise DomainError("mean must be finite")
        if not (self.variance > 0) or not math.isfinite(self.variance):
            raise DomainError(f"variance must be positive, got {self.variance}")
        object.__setattr__(self, "mean", _as_readonly(mean))
        object.__setattr__(self, "variance", float(self.variance))

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class CorpusPoint:
    id: str
    modality: str
    vector: np.ndarray


@dataclass(frozen=True)
class PointSet:
    """An id-tagged set of points in R^dim, the input shape of the joins."""

    ids: tuple[str, ...]
    vectors: np.ndarray  # (n, dim)

    def __post_init__(self):
        vecs = np.asarray(self.vectors, dtype=np.float64)
        if vecs.ndim != 2:
            raise DomainError(f"vectors must be 2-D, got shape {vecs.shape}")
        if len(self.ids) != vecs.shape[0]:
            raise DomainError(
                f"got {len(self.ids)} ids for {vecs.shape[0]} vectors"
            )
        if len(set(self.ids)) != len(self.ids):
            raise DomainError("point ids must be unique")
        if not np.all(np.isfinite(vecs)):
            raise DomainError("vectors must be finite")
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "vectors", _as_readonly(vecs))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def vector_of(self, point_id: str) -> np.ndarray:
        return self.vectors[self.ids.index(point_id)]


@dataclass
class EmbeddedCorpus:
    """Points of both modalities in a shared R^dim, with optional pairing."""

    dim: int
    points: list[CorpusPoint]
    pairs: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError(f"dim must be >= 1, got {self.dim}")
        seen: dict[str, set[str]] = {m: set() for m in MODALITIES}
        pts = []
        for p in self.points:
            if p.modality not in MODALITIES:
                raise DomainError(f"unknown modality {p.modality!r} for id {p.id!r}")
            vec = np.asarray(p.vector, dtype=np.float64)
            if vec.shape != (self.dim,):
                raise DomainError(
                    f"point {p.id!r} has {vec.size} entries, corpus dim is {self.dim}"
                )
            if not np.all(np.isfinite(vec)):
                raise DomainError(f"point {p.id!r} has non-finite entries")
            if p.id in seen[p.modality]:
                raise DomainError(f"duplicate {p.modality} id {p.id!r}")
            seen[p.modality].add(p.id)
            pts.append(CorpusPoint(p.id, p.modality, _as_readonly(vec)))
        self.points = pts
        self.pairs = [(str(a), str(b)) for a, b in self.pairs]
        for img_id, txt_id in self.pairs:
            if img_id not in seen[IMAGE]:
                raise DomainError(f"pair references unknown image id {img_id!r}")
            if txt_id not in seen[TEXT]:
                raise DomainError(f"pair references unknown text id {txt_id!r}")

    def modality_set(self, modality: str) -> PointSet:
        if modality not in MODALITIES:
            raise DomainError(f"unknown modality {modality!r}")
        sel = [p for p in self.points if p.modality == modality]
        vecs = (
            np.stack([p.vector for p in sel])
            if sel
            else np.zeros((0, self.dim), dtype=np.float64)
        )
        return PointSet(tuple(p.id for p in sel), vecs)

    def image_set(self) -> PointSet:
        return self.modality_set(IMAGE)

    def text_set(self) -> PointSet:
        return self.modality_set(TEXT)

    def pair_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """Vectors of the paired (image, text) points, row-aligned by pair."""
        if not self.pairs:
            raise DomainError("corpus has no pairs")
        img = self.image_set()
        txt = self.text_set()
        img_index = {pid: k for k, pid in enumerate(img.ids)}
        txt_index = {pid: k for k, pid in enumerate(txt.ids)}
        xi = np.array([img_index[a] for a, _ in self.pairs], dtype=np.intp)
        yi = np.array([txt_index[b] for _, b in self.pairs], dtype=np.intp)
        return img.vectors[xi], txt.vectors[yi]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddedCorpus):
            return NotImplemented
        if self.dim != other.dim or self.pairs != other.pairs:
            return False
        if len(self.points) != len(other.points):
            return False
        return all(
            a.id == b.id
            and a.modality == b.modality
            and np.array_equal(a.vector, b.vector)
            for a, b in zip(self.points, other.points)
        )


def sample_gaussian_corpus(
    spec_f: GaussianSpec,
    spec_g: GaussianSpec,
    n_f: int,
    n_t: int,
    seed: int,
) -> EmbeddedCorpus:
    """Draw n_f image points from spec_f and n_t text points from spec_g.

    Deterministic in the seed; the returned corpus has no pairs.
    """
    if spec_f.dim != spec_g.dim:
        raise DomainError(f"dim mismatch: {spec_f.dim} != {spec_g.dim}")
    if n_f < 1 or n_t < 1:
        raise DomainError(f"need at least one point per modality, got ({n_f}, {n_t})")
    rng = substream(seed, "gaussian-corpus")
    xs = spec_f.mean + spec_f.sigma * rng.standard_normal((n_f, spec_f.dim))
    ys = spec_g.mean + spec_g.sigma * rng.standard_normal((n_t, spec_g.dim))
    width = len(str(max(n_f, n_t) - 1))
    points = [
        CorpusPoint(f"img-{i:0{width}d}", IMAGE, xs[i]) for i in range(n_f)
    ] + [CorpusPoint(f"txt-{j:0{width}d}", TEXT, ys[j]) for j in range(n_t)]
    return EmbeddedCorpus(spec_f.dim, points)


PAIRS_MARKER = "#pairs"


def save_corpus(corpus: EmbeddedCorpus, path) -> None:
    """Write a corpus as CSV: `dim=<d>` header, point rows, optional #pairs.

    Floats are written with shortest-round-trip formatting, so load(save(c))
    reproduces c exactly.
    """
    with open(path, "w", newline="") as fh:
        fh.write(f"dim={corpus.dim}\n")
        writer = csv.writer(fh, lineterminator="\n")
        for p in corpus.points:
            writer.writerow([p.id, p.modality, *(repr(float(v)) for v in p.vector)])
        if corpus.pairs:
            fh.write(PAIRS_MARKER + "\n")
            for img_id, txt_id in corpus.pairs:
                writer.writerow([img_id, txt_id])


def load_corpus(path) -> EmbeddedCorpus:
    """Parse a corpus file written by save_corpus.

    Malformed content raises ParseError naming the offending line.
    """
    points: list[CorpusPoint] = []
    pairs: list[tuple[str, str]] = []
    with open(path, newline="") as fh:
        header = fh.readline()
        if not header.startswith("dim="):
            raise ParseError("expected header 'dim=<d>'", path=path, line=1)
        try:
            dim = int(header[len("dim=") :].strip())
        except ValueError:
            raise ParseError(f"bad dimension {header.strip()!r}", path=path, line=1)
        if dim < 1:
            raise ParseError(f"dimension must be >= 1, got {dim}", path=path, line=1)
        in_pairs = False
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line:
                continue
            if line == PAIRS_MARKER:
                in_pairs = True
                continue
            row = next(csv.reader([line]))
            if in_pairs:
                if len(row) != 2:
                    raise ParseError(
                        f"pair row must have 2 fields, got {len(row)}",
                        path=path,
                        line=lineno,
                    )
                pairs.append((row[0], row[1]))
                continue
            if len(row) != 2 + dim:
                raise ParseError(
                    f"expected id,modality plus {dim} values, got {len(row)} fields",
                    path=path,
                    line=lineno,
                )
            pid, modality = row[0], row[1]
            if modality not in MODALITIES:
                raise ParseError(
                    f"unknown modality {modality!r}", path=path, line=lineno
                )
            try:
                vec = np.array([float(v) for v in row[2:]], dtype=np.float64)
            except ValueError:
                raise ParseError("non-numeric vector entry", path=path, line=lineno)
            if not np.all(np.isfinite(vec)):
                raise ParseError("non-finite vector entry", path=path, line=lineno)
            points.append(CorpusPoint(pid, modality, vec))
    return EmbeddedCorpus(dim, points, pairs)
