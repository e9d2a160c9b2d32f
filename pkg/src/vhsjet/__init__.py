"""Exact computations with jets of variations of Hodge structure."""

from .errors import VhsError
from .exact_series import QI, LaurentT, SeriesMatrix, TruncatedSeries

__all__ = ["QI", "LaurentT", "SeriesMatrix", "TruncatedSeries", "VhsError"]
__version__ = "0.1.0"
