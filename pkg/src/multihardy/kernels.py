"""Backend selection for the hot kernels.

The compiled extension is used when it imports cleanly; setting the
environment variable ``MULTIHARDY_PURE_PYTHON=1`` forces the numpy fallback.
``BACKEND`` records which one is active.
"""

import os

if os.environ.get("MULTIHARDY_PURE_PYTHON", "") not in ("", "0"):
    from ._kernels_py import pairwise_potential, power_product, sum_inverse_square

    BACKEND = "python"
else:
    try:
        from ._kernels import pairwise_potential, power_product, sum_inverse_square

        BACKEND = "cython"
    except ImportError:  # extension not built
        from ._kernels_py import pairwise_potential, power_product, sum_inverse_square

        BACKEND = "python"

__all__ = ["BACKEND", "pairwise_potential", "power_product", "sum_inverse_square"]
