"""Mean-function estimation and inference for noisily, discretely observed
random functions on [0,1]^D: de La Vallee Poussin series with
control-neighbors coefficient integration, confidence bands, and adaptive
Holder-regularity estimation."""

try:
    from fdavp._fdavp import (  # installed wheel layout
        __version__,
        basis_eval,
        design_weights,
        enumerate_indices,
        estimate_alpha,
        fit,
        optimal_L,
        run_cli,
        theta_average,
        vp_eval,
        vp_weight,
    )
except ImportError:  # build-tree layout: extension on PYTHONPATH
    from _fdavp import (
        __version__,
        basis_eval,
        design_weights,
        enumerate_indices,
        estimate_alpha,
        fit,
        optimal_L,
        run_cli,
        theta_average,
        vp_eval,
        vp_weight,
    )

__all__ = [
    "__version__",
    "basis_eval",
    "design_weights",
    "enumerate_indices",
    "estimate_alpha",
    "fit",
    "optimal_L",
    "run_cli",
    "theta_average",
    "vp_eval",
    "vp_weight",
]
