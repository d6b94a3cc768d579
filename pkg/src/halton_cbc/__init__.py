"""CBC construction of mid-simplified p-adic shifts for Halton point sets."""

__version__ = "0.1.0"

from .bounds import BoundReport, bound_report, cbc_bound_sq, rms_bound_sq
from .cbc import CbcResult, ShiftVector, cbc_construct, rescan_dimension
from .halton import BaseVector, PointSet, halton_points, shifted_halton_points
from .padic import (
    ExactPoint,
    PAdicDigits,
    minimal_m,
    mid_simplified_shift,
    monna_inverse,
    padic_shift,
    radical_inverse,
    simplified_shift,
)
from .wce import ErrorCache, WeightSequence, cache_extend, cache_init, squared_wce, squared_wce_from_cache

__all__ = [
    "BaseVector",
    "BoundReport",
    "CbcResult",
    "ErrorCache",
    "ExactPoint",
    "PAdicDigits",
    "PointSet",
    "ShiftVector",
    "WeightSequence",
    "bound_report",
    "cache_extend",
    "cache_init",
    "cbc_bound_sq",
    "cbc_construct",
    "halton_points",
    "mid_simplified_shift",
    "minimal_m",
    "monna_inverse",
    "padic_shift",
    "radical_inverse",
    "rescan_dimension",
    "rms_bound_sq",
    "shifted_halton_points",
    "simplified_shift",
    "squared_wce",
    "squared_wce_from_cache",
]
