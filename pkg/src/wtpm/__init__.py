"""Weighted tensor decomposition for latent variable models with partially
observed dimensions."""

from .errors import (
    ConfigError,
    ConvergenceFailure,
    DegenerateDimension,
    InsufficientPairData,
    InsufficientTripleData,
    InvalidInput,
    NotIdentifiable,
    ParseError,
    RankDeficient,
    RecoveryError,
    ShapeError,
    WTPMError,
)
from .evaluation import epsilon_c, gm_holdout_loglik, match_columns
from .missingness import MaskedDataset, block_mask, estimate_rates, mcar_mask
from .models import (
    GMParams,
    GPParams,
    estimate_sigma2_complete,
    gm_population_moments,
    gp_population_moments,
    random_gm_params,
    random_gp_params,
    recover_gm,
    recover_gp,
    sample_gm,
    sample_gp,
)
from .moments import MomentPair, gm_moments, gp_moments
from .spectral import SpectralResult, TPMOptions, decompose, tpm, unwhiten, whiten
from .tensors import SymMatrix, SymTensor3, outer3, pseudoinverse, sym_eig, tensor_contract
from .weighting import WeightVector, compute_weights, unweight_topics, weight_moments

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConvergenceFailure",
    "DegenerateDimension",
    "InsufficientPairData",
    "InsufficientTripleData",
    "InvalidInput",
    "NotIdentifiable",
    "ParseError",
    "RankDeficient",
    "RecoveryError",
    "ShapeError",
    "WTPMError",
    "epsilon_c",
    "gm_holdout_loglik",
    "match_columns",
    "MaskedDataset",
    "block_mask",
    "estimate_rates",
    "mcar_mask",
    "GMParams",
    "GPParams",
    "estimate_sigma2_complete",
    "gm_population_moments",
    "gp_population_moments",
    "random_gm_params",
    "random_gp_params",
    "recover_gm",
    "recover_gp",
    "sample_gm",
    "sample_gp",
    "MomentPair",
    "gm_moments",
    "gp_moments",
    "SpectralResult",
    "TPMOptions",
    "decompose",
    "tpm",
    "unwhiten",
    "whiten",
    "SymMatrix",
    "SymTensor3",
    "outer3",
    "pseudoinverse",
    "sym_eig",
    "tensor_contract",
    "WeightVector",
    "compute_weights",
    "unweight_topics",
    "weight_moments",
]
