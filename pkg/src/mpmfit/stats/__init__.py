"""Statistical characterization of fitted parameter populations."""

from .dependence import acf, conditional_histograms, corpus_acf, embed_gains, gain_acf
from .distributions import CATALOG, DistributionFit, DistributionSpec, fit_params, mle_fit, population_moments
from .goodness import Selection, anderson_darling, choose, select_distribution
from .mixtures import GainMixture, LengthMixture, fit_gain_mixture, fit_length_mixture
from .regression import (
    A0_VS_GAIN,
    A_VS_GAIN,
    PATHS_VS_SPREAD_GAIN,
    RegressionSpec,
    predict_path_count,
    regression_A,
    regression_N,
    regression_a0,
)

__all__ = [
    "A0_VS_GAIN",
    "A_VS_GAIN",
    "CATALOG",
    "DistributionFit",
    "DistributionSpec",
    "GainMixture",
    "LengthMixture",
    "PATHS_VS_SPREAD_GAIN",
    "RegressionSpec",
    "Selection",
    "acf",
    "anderson_darling",
    "choose",
    "conditional_histograms",
    "corpus_acf",
    "embed_gains",
    "fit_gain_mixture",
    "fit_length_mixture",
    "fit_params",
    "gain_acf",
    "mle_fit",
    "population_moments",
    "predict_path_count",
    "regression_A",
    "regression_N",
    "regression_a0",
    "select_distribution",
]
