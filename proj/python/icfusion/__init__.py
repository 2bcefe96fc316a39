"""Cross-modal feature fusion kernels (RGB + thermal), C++ core."""

try:
    from ._icfusion import *  # noqa: F401,F403  (installed package layout)
    from ._icfusion import __doc__ as _core_doc
except ImportError:  # flat build-tree layout used by the ctest harness
    from _icfusion import *  # noqa: F401,F403
    from _icfusion import __doc__ as _core_doc

__all__ = [
    "FusionModel",
    "channel_shuffle",
    "conv2d",
    "count_macs",
    "count_params",
    "gelu",
    "haar_dwt2",
    "haar_idwt2",
    "seeded_uniform",
    "set_num_threads",
    "shuffle_perm",
    "subband_energy",
]
