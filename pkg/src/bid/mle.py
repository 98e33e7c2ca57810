"""Scale-dependent maximum-likelihood dimension from thin Hamming shells.

Shell ``A`` holds the points at distance exactly ``r_A`` and shell ``B`` the
points at distance ``r_A`` or ``r_A + 1``. For a binary cube of dimension
``d`` the volume ratio is ``V_A / V_B = (r_A + 1) / (d + 1)``; equating it
to the observed ``<n_A> / <n_B>`` gives

    d_hat(r_A) = (r_A + 1) * <n_B> / <n_A> - 1,

with ``<n_A> ~ N_{r_A}`` and ``<n_B> ~ N_{r_A} + N_{r_A + 1}``.
The density of points cancels in the ratio.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bitdata import DistanceHistogram

MAX_EXACT_DIM = 256


def hamming_volume(r: int, d: int) -> int:
    """Number of binary strings within distance ``r`` of a point of the ``d``-cube."""
    if d < 0 or d > MAX_EXACT_DIM:
        raise ValueError(f"exact volumes are limited to 0 <= d <= {MAX_EXACT_DIM}")
    if not 0 <= r <= d:
        raise ValueError(f"need 0 <= r <= d, got r={r}, d={d}")
    return sum(math.comb(d, k) for k in range(r + 1))


def thin_shell_ratio(r_A: int, d: float) -> float:
    """``V_A / V_B`` for shells at ``r_A`` and ``r_A + 1``: ``(r_A + 1) / (d + 1)``."""
    if not d > r_A - 1:
        raise ValueError(f"thin-shell ratio needs d > r_A - 1, got d={d}, r_A={r_A}")
    return (r_A + 1) / (d + 1)


def mle_scale_dependent(hist: DistanceHistogram, r_A: int) -> float:
    n_a = int(hist.counts[r_A]) if 0 <= r_A <= hist.n_bits else 0
    if r_A + 1 > hist.n_bits:
        raise ValueError(f"r_A + 1 = {r_A + 1} exceeds n_bits = {hist.n_bits}")
    if n_a == 0:
        raise ValueError(f"no pairs at distance r_A={r_A}; the estimate is undefined there")
    n_b = n_a + int(hist.counts[r_A + 1])
    return (r_A + 1) * n_b / n_a - 1


@dataclass(frozen=True)
class ScaleProfile:
    r_values: np.ndarray
    d_hat: np.ndarray
    n_bits: int
    valid_mask: np.ndarray
    n_A: np.ndarray
    n_B: np.ndarray

    def rows(self):
        """Tuples ``(r, r/N, d_hat, d_hat/N, n_A, n_B)`` for the valid scales."""
        N = self.n_bits
        for r, d, ok, a, b in zip(self.r_values, self.d_hat, self.valid_mask, self.n_A, self.n_B):
            if ok:
                yield int(r), r / N, float(d), float(d) / N, int(a), int(b)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("r,r_over_N,d_hat,d_hat_over_N,n_A,n_B\n")
            for r, rn, d, dn, a, b in self.rows():
                fh.write(f"{r},{rn!r},{d!r},{dn!r},{a},{b}\n")


def mle_profile(hist: DistanceHistogram) -> ScaleProfile:
    """``d_hat(r)`` at every ``r < N``; scales with no pairs at ``r`` are masked."""
    c = hist.counts.astype(np.int64)
    r = np.arange(hist.n_bits)
    n_a = c[:-1]
    n_b = c[:-1] + c[1:]
    valid = n_a > 0
    d_hat = np.full(r.shape, np.nan)
    d_hat[valid] = (r[valid] + 1) * n_b[valid] / n_a[valid] - 1
    return ScaleProfile(r_values=r, d_hat=d_hat, n_bits=hist.n_bits,
                        valid_mask=valid, n_A=n_a, n_B=n_b)


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def profile_linear_fit(
    profile: ScaleProfile,
    mass: float = 0.8,
    min_count: int = 5,
    r_max: int | None = None,
) -> LinearFit:
    """Least-squares line through ``d_hat(r)`` over the bulk of the distance distribution.

    Keeps the scales that hold the central ``mass`` fraction of pairs (equal
    tails trimmed) and have at least ``min_count`` pairs in both shells.
    ``r_max`` further restricts the fit to ``r <= r_max``.
    """
    if not 0.0 < mass <= 1.0:
        raise ValueError(f"mass must lie in (0, 1], got {mass}")
    cdf = np.cumsum(profile.n_A) / max(int(profile.n_A.sum()), 1)
    tail = (1.0 - mass) / 2.0
    lo = int(np.searchsorted(cdf, tail)) if tail > 0 else 0
    hi = int(np.searchsorted(cdf, 1.0 - tail)) if tail > 0 else profile.r_values.size - 1
    ok = profile.valid_mask & (profile.n_A >= min_count) & (profile.n_B - profile.n_A >= min_count)
    ok &= (profile.r_values >= lo) & (profile.r_values <= hi)
    if r_max is not None:
        ok &= profile.r_values <= r_max
    idx = np.flatnonzero(ok)
    if idx.size < 3:
        raise ValueError("too few populated scales for a linear fit")
    x = profile.r_values[idx].astype(np.float64)
    y = profile.d_hat[idx]
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return LinearFit(float(slope), float(intercept), r2, int(idx.size))
