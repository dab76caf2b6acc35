from fractions import Fraction

import numpy as np
import scipy.stats as stats

from config import EMPIRICS_DEFAULTS


def summarize_deviations(deviations, confidence=None):
    """
    Summary of one batch of exact sup deviations.

    Args:
        deviations: list of Fractions, one per trial
        confidence: level of the t-interval (default from EMPIRICS_DEFAULTS)

    Returns:
        Dictionary with exact mean and max, and float std, cv and an interval
        around the mean
    """
    confidence = EMPIRICS_DEFAULTS["confidence"] if confidence is None else confidence
    count = len(deviations)
    if not count:
        return {'mean': Fraction(0), 'max': Fraction(0), 'std': 0.0, 'cv': 0.0, 'ci': (0.0, 0.0), 'count': 0}

    mean = sum(deviations, Fraction(0)) / count
    spread = np.asarray([float(d) for d in deviations], dtype=float)
    std = float(np.std(spread))
    # cv in percent of the exact mean; a batch of zero deviations has none
    cv = std / float(mean) * 100 if mean > 0 else 0.0
    if count > 1 and std > 0:
        low, high = stats.t.interval(confidence, count - 1, loc=float(mean), scale=stats.sem(spread))
    else:
        low = high = float(mean)

    return {
        'mean': mean,
        'max': max(deviations),
        'std': std,
        'cv': cv,
        'ci': (float(low), float(high)),
        'count': count
    }


def proportion_half_width(p, n, confidence=None):
    """Normal-approximation half-width of a Monte-Carlo proportion."""
    confidence = EMPIRICS_DEFAULTS["confidence"] if confidence is None else confidence
    z = stats.norm.ppf(0.5 + confidence / 2)
    return float(z * np.sqrt(max(p * (1 - p), 0.0) / n))


def hoeffding_union_bound(n, columns, delta=None):
    """sqrt(ln(2 * columns / delta) / (2n)); with delta None, the ln(2 * columns) form."""
    if delta is None:
        return float(np.sqrt(np.log(2 * columns) / (2 * n)))
    return float(np.sqrt(np.log(2 * columns / delta) / (2 * n)))
