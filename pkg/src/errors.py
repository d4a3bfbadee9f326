"""
Exception and warning types raised by spinlet
"""


class SpinletError(Exception):
    """Base class for all spinlet errors"""


class PoleInChart(SpinletError):
    """A point sits on a pole of the chart it is evaluated in"""


class PoleEvaluation(SpinletError, ValueError):
    """A chart-I harmonic was requested at theta = 0 or theta = pi"""


class UndefinedHarmonic(SpinletError, ValueError):
    """A spin-s harmonic was requested for l < |s|"""


class ScaleTooCoarse(SpinletError, ValueError):
    """Partition parameter b * a**j exceeds pi"""


class BandLimitExceeded(SpinletError):
    """Filter support reaches past the available band limit"""


class DegenerateFilter(SpinletError):
    """Daubechies lower bound is not positive"""


class DegenerateModel(SpinletError):
    """Model variance of a statistic is zero"""


class ScaleMissing(SpinletError, KeyError):
    """Requested scale j is not part of a frame"""


class ConfigError(SpinletError, ValueError):
    """Malformed experiment configuration"""


class ThresholdViolation(SpinletError):
    """An acceptance check failed"""

    def __init__(self, check: str, observed: float, threshold: float, detail: str = ""):
        self.check = check
        self.observed = observed
        self.threshold = threshold
        self.detail = detail
        message = f"{check}: observed {observed:.6g}, threshold {threshold:.6g}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class InvalidExponent(UserWarning):
    """Power-law exponent outside the range where the statistics theory applies"""


class BandLimitHeuristicWarning(UserWarning):
    """Top shell of an analysed field carries a noticeable share of its energy"""
