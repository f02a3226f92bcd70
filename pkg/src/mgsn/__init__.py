"""Multivariate geometric skew-normal (MGSN) distribution toolkit.

Density, moments and structural maps live in :mod:`mgsn.distribution`,
the univariate case in :mod:`mgsn.gsn`, samplers in :mod:`mgsn.sampling`,
EM / profile-likelihood fitting in :mod:`mgsn.estimation` and likelihood
ratio tests in :mod:`mgsn.inference`.
"""
__version__ = "0.1.0"

from .distribution import (  # noqa: E402
    MgsnParams,
    affine,
    canonical_corr,
    cond_n_inv_mean,
    cond_n_mean,
    marginal,
    mardia_beta1,
    mgsn_cdf_mc,
    mgsn_logpdf,
    mgsn_mgf,
    mgsn_moments,
    mgsn_pdf,
    moment_relation,
    mtp2_holds,
    projection,
)
from .errors import MgsnError  # noqa: E402
from .estimation import (  # noqa: E402
    DataMatrix,
    EmControl,
    em_fit_diag,
    em_fit_fixed_p,
    em_fit_mu_zero,
    fit_normal,
    observed_loglik,
    profile_fit,
)
from .gsn import GsnParams, gsn_mgf, gsn_moments, gsn_pdf  # noqa: E402
from .inference import lrt_diagonal, lrt_normality, lrt_symmetry  # noqa: E402
from .sampling import RngStream, sample_decomp1, sample_decomp2, sample_mgsn  # noqa: E402
from .series import SeriesControl  # noqa: E402
