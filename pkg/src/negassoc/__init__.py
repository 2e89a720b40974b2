"""Negative-association and dependence-ordering checks for finite point
processes."""

__version__ = "0.1.0"

from .pmf import (JointPmf, Pmf, class_q_pmf, condition_n_joint, convolve,
                  cx_dominates, efron_monotone_check, is_pf2, is_ulc,
                  poisson_binomial, stop_loss, truncated_poisson)
from .multiaffine import (StabilityVerdict, SubsetMeasure,
                          elementary_symmetric, evaluate, is_rayleigh,
                          is_strongly_rayleigh, partial_derivative, polarize,
                          product_measure, rayleigh_at)
from .dependence import (DependenceVerdict, UpSet, enumerate_up_sets, is_na,
                         is_nqd, is_sna, sm_dominates_bivariate,
                         wcs_dominates)
from .processes import (CountVectorLaw, DppModel, MixedSampledProcess,
                        PartitionModel, count_law, dpp_count_law,
                        dpp_exact_law, dpp_sample, dpp_validate,
                        exact_count_law, intensity, marked_sum_law,
                        sample_mixed)
from .bounds import (BoundReport, binomial_void_superadditivity,
                     laplace_bound_check, moment_factorization_check,
                     poisson_domination_report, void_bound_check)
from .montecarlo import (McEstimate, chebyshev_bound, chernoff_bound,
                         kolmogorov_bound_check, mc_estimate)
