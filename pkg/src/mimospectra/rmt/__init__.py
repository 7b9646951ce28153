"""Random-matrix spectral analytics: Stieltjes-domain laws and supports."""

from .laws import (
    ANCHOR_IM,
    DoubleSidedParams,
    MixtureComponent,
    OneSidedParams,
    StieltjesEval,
    density_from_stieltjes,
    double_sided_residual,
    equal_aoa_mixture,
    iid_limit_residual,
    mixture_stieltjes,
    mp_density,
    mp_s_transform,
    mp_stieltjes,
    onesided_residual,
    s_stieltjes_link_check,
    s_transform_two_mass,
    stieltjes_double_sided,
    stieltjes_iid_limit,
    stieltjes_onesided,
    two_mass_stieltjes,
)
from .support import (
    SpectralSupport,
    SupportGrid,
    TruncationReport,
    distinct_inverse_coeffs,
    double_inverse_coeffs,
    iid_inverse_coeffs,
    onesided_inverse_coeffs,
    scan_support,
    support_distinct,
    support_double_sided,
    support_iid,
    support_onesided,
)

__all__ = [
    "ANCHOR_IM",
    "DoubleSidedParams",
    "MixtureComponent",
    "OneSidedParams",
    "SpectralSupport",
    "StieltjesEval",
    "SupportGrid",
    "TruncationReport",
    "density_from_stieltjes",
    "distinct_inverse_coeffs",
    "double_inverse_coeffs",
    "double_sided_residual",
    "equal_aoa_mixture",
    "iid_inverse_coeffs",
    "iid_limit_residual",
    "mixture_stieltjes",
    "mp_density",
    "mp_s_transform",
    "mp_stieltjes",
    "onesided_inverse_coeffs",
    "onesided_residual",
    "s_stieltjes_link_check",
    "s_transform_two_mass",
    "scan_support",
    "stieltjes_double_sided",
    "stieltjes_iid_limit",
    "stieltjes_onesided",
    "support_distinct",
    "support_double_sided",
    "support_iid",
    "support_onesided",
    "two_mass_stieltjes",
]
