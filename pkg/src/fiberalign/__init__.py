"""fiberalign: approximate fiber products and subspace decomposition for
multimodal embeddings.

Pipeline: encode discrete image patches / token sequences as polynomials
over Z_m (`ringpoly`), embed them into a shared R^d (`embed`), join the two
modalities with an epsilon-tolerance similarity join and analyze the join's
size and robustness (`fiber`), and learn an orthogonal split of R^d into
shared and modality-specific subspaces (`decomp`). The `fiberalign` CLI
wires these into deterministic, scriptable runs.
"""

from .decomp import (
    ComponentSplit,
    Decomposition,
    DimensionPlan,
    LossWeights,
    allocate_dimensions,
    alignment_volume_mc,
    check_dim_constraint,
    gradient_check,
    loss_align,
    loss_orth,
    loss_specificity,
    make_planted_corpus,
    misalignment_vs_ds_sweep,
    optimize,
    perturb_stability_check,
    project,
    projector_laws_check,
    split,
    total_loss,
)
from .embed import (
    EmbeddedCorpus,
    EmbeddingMap,
    GaussianSpec,
    PointSet,
    build_map,
    embed_poly,
    load_corpus,
    sample_gaussian_corpus,
    save_corpus,
)
from .errors import DomainError, FiberAlignError, OptimizationError, ParseError
from .fiber import (
    JoinConfig,
    JoinResult,
    NoiseSpec,
    SizeEstimate,
    check_inclusion_claim,
    closed_form_gaussian_size,
    empirical_size,
    estimate_join_dimension,
    estimate_size_mc,
    join,
    join_bruteforce,
    join_grid,
    verify_monotonicity,
    verify_noise_tolerance,
)
from .kernels import backend
from .ringpoly import RingPoly, decode, encode_patch, encode_tokens, ring_add, ring_mul
from .rng import substream

__version__ = "0.1.0"
