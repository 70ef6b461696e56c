"""Hot-loop kernels with a compiled core and a pure-NumPy fallback.

The Cython extension is preferred when it imported cleanly; set
``FRACSHAPE_PURE_PYTHON=1`` to force the fallback (used by the parity tests
and the benchmark).
"""
import os

from . import _pycore

if os.environ.get("FRACSHAPE_PURE_PYTHON", "") == "1":
    _impl = _pycore
    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _pycore
        BACKEND = "python"

seg_ball_masses = _impl.seg_ball_masses
min_dist_points_segments = _impl.min_dist_points_segments
points_in_polygon = _impl.points_in_polygon
discrete_frechet = _impl.discrete_frechet
besov_pair_sum = _impl.besov_pair_sum
polyline_self_intersects = _impl.polyline_self_intersects

__all__ = [
    "BACKEND",
    "seg_ball_masses",
    "min_dist_points_segments",
    "points_in_polygon",
    "discrete_frechet",
    "besov_pair_sum",
    "polyline_self_intersects",
]
