"""Metropolis-Hastings sampling of the ``(d0, d1)`` posterior under a flat prior."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, logsumexp

from .bitdata import DistanceHistogram
from .errors import DegenerateError
from .model import AUTO, LN2, is_feasible, resolve_r_star

DEFAULT_STEPS = 110_000
DEFAULT_BURN_IN = 10_000


class LogLikelihood:
    """``sum_r N_r log P(r)`` as a function of ``(d0, d1)``.

    With ``normalize=True`` (default) ``P`` is the model normalized on
    ``[0, r_star]``, so the maximum coincides with the KL minimum. With
    ``normalize=False`` the bare weights ``binom(d(r), r) / 2**d(r)`` are used
    and only observed distances need ``d(r) > r - 1``. Infeasible points give
    ``-inf``.
    """

    def __init__(self, hist: DistanceHistogram, r_star=AUTO, normalize: bool = True):
        self.r_star = resolve_r_star(hist, r_star)
        self.normalize = normalize
        counts = hist.counts[: self.r_star + 1]
        self.support = np.flatnonzero(counts)
        if self.support.size == 0:
            raise DegenerateError("histogram has no pairs in the fit domain")
        self.n_r = counts[self.support].astype(np.float64)
        self._r_all = np.arange(self.r_star + 1, dtype=np.float64)
        self._r_obs = self.support.astype(np.float64)

    def feasible(self, d0: float, d1: float) -> bool:
        if self.normalize:
            return is_feasible(d0, d1, self.r_star)
        d = d0 + d1 * self._r_obs
        return bool(np.all(d > self._r_obs - 1))

    def __call__(self, d0: float, d1: float) -> float:
        if not self.feasible(d0, d1):
            return -math.inf
        r = self._r_all if self.normalize else self._r_obs
        d = d0 + d1 * r
        lw = -np.log1p(d) - betaln(d - r + 1.0, r + 1.0) - d * LN2
        if self.normalize:
            lw = lw[self.support] - logsumexp(lw)
        return float(np.dot(self.n_r, lw))


def log_likelihood(
    hist: DistanceHistogram, d0: float, d1: float, r_star=AUTO, normalize: bool = True
) -> float:
    return LogLikelihood(hist, r_star, normalize)(d0, d1)


def metropolis_hastings(
    log_target,
    x0,
    steps: int,
    burn_in: int,
    step_fraction: float = 0.01,
    seed: int = 0,
    hastings: bool = True,
):
    """Random-walk Metropolis with per-coordinate moves uniform in ``[-f|x|, +f|x|]``.

    The move amplitude scales with the current value, so the proposal is not
    symmetric; ``hastings=True`` applies the density ratio ``prod |x| / |x'|``
    (and rejects moves whose reverse would be out of reach). ``hastings=False``
    omits the correction.

    Returns ``(chain, acceptance_rate, burn_in_acceptance)`` where ``chain``
    holds the ``steps - burn_in`` states after burn-in.
    """
    if not steps > burn_in >= 0:
        raise ValueError("need steps > burn_in >= 0")
    if not step_fraction > 0:
        raise ValueError("step_fraction must be > 0")
    rng = np.random.default_rng(seed)
    x = np.asarray(x0, dtype=np.float64).copy()
    lp = log_target(*x)
    if not np.isfinite(lp):
        raise ValueError(f"starting point {x.tolist()} has zero posterior density")
    chain = np.empty((steps - burn_in, x.size))
    accepted_burn = accepted = 0
    for t in range(steps):
        width = step_fraction * np.abs(x)
        y = x + rng.uniform(-1.0, 1.0, size=x.size) * width
        log_ratio = 0.0
        if hastings:
            moving = width > 0
            if np.any(np.abs(x - y)[moving] > step_fraction * np.abs(y[moving])):
                log_ratio = -math.inf
            else:
                log_ratio = float(np.sum(np.log(np.abs(x[moving]) / np.abs(y[moving]))))
        if log_ratio > -math.inf:
            lp_y = log_target(*y)
            a = lp_y - lp + log_ratio
            if a >= 0 or rng.random() < math.exp(a):
                x, lp = y, lp_y
                if t < burn_in:
                    accepted_burn += 1
                else:
                    accepted += 1
        if t >= burn_in:
            chain[t - burn_in] = x
    burn_acc = accepted_burn / burn_in if burn_in else float("nan")
    return chain, accepted / (steps - burn_in), burn_acc


@dataclass(frozen=True)
class PosteriorSample:
    """Post-burn-in chain over ``(d0, d1)`` with its exact sample moments.

    Moments use the population convention (divide by ``n``).
    """

    chain: np.ndarray
    acceptance_rate: float
    mean_d0: float
    mean_d1: float
    std_d0: float
    std_d1: float
    cov_d0d1: float
    burn_in_acceptance: float = float("nan")
    status: str = "ok"
    hastings: bool = True

    @classmethod
    def from_chain(cls, chain, acceptance_rate: float, **extra) -> "PosteriorSample":
        chain = np.asarray(chain, dtype=np.float64)
        if chain.ndim != 2 or chain.shape[1] != 2 or chain.shape[0] < 1:
            raise ValueError("chain must be a non-empty (n, 2) array")
        mean = chain.mean(axis=0)
        dev = chain - mean
        cov = dev.T @ dev / chain.shape[0]
        return cls(
            chain=chain,
            acceptance_rate=float(acceptance_rate),
            mean_d0=float(mean[0]),
            mean_d1=float(mean[1]),
            std_d0=float(math.sqrt(cov[0, 0])),
            std_d1=float(math.sqrt(cov[1, 1])),
            cov_d0d1=float(cov[0, 1]),
            **extra,
        )


@dataclass(frozen=True)
class PosteriorSummary:
    n: int
    mean_d0: float
    mean_d1: float
    std_d0: float
    std_d1: float
    var_d0: float
    var_d1: float
    cov_d0d1: float
    acceptance_rate: float
    split_half_d0: tuple[float, float]
    split_half_d1: tuple[float, float]
    status: str = "ok"

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["split_half_d0"] = list(self.split_half_d0)
        d["split_half_d1"] = list(self.split_half_d1)
        return d


def posterior_summary(p) -> PosteriorSummary:
    """Mean, std, covariance (population convention) and split-half means of a chain.

    Accepts a :class:`PosteriorSample` or a raw ``(n, 2)`` chain.
    """
    if isinstance(p, PosteriorSample):
        chain, acc, status = p.chain, p.acceptance_rate, p.status
    else:
        chain, acc, status = np.asarray(p, dtype=np.float64), float("nan"), "ok"
    if chain.ndim != 2 or chain.shape[0] == 0:
        raise ValueError("posterior summary of an empty chain")
    n = chain.shape[0]
    mean = chain.mean(axis=0)
    dev = chain - mean
    cov = dev.T @ dev / n
    half = max(n // 2, 1)
    first = chain[:half].mean(axis=0)
    second = chain[half:].mean(axis=0) if n > 1 else first
    return PosteriorSummary(
        n=n,
        mean_d0=float(mean[0]),
        mean_d1=float(mean[1]),
        std_d0=float(math.sqrt(cov[0, 0])),
        std_d1=float(math.sqrt(cov[1, 1])),
        var_d0=float(cov[0, 0]),
        var_d1=float(cov[1, 1]),
        cov_d0d1=float(cov[0, 1]),
        acceptance_rate=acc,
        split_half_d0=(float(first[0]), float(second[0])),
        split_half_d1=(float(first[1]), float(second[1])),
        status=status,
    )


def mcmc_sample(
    hist: DistanceHistogram,
    steps: int = DEFAULT_STEPS,
    burn_in: int = DEFAULT_BURN_IN,
    step_fraction: float = 0.01,
    seed: int = 0,
    *,
    r_star=AUTO,
    hastings: bool = True,
    start=None,
) -> PosteriorSample:
    """Sample the flat-prior posterior of ``(d0, d1)`` given a distance histogram.

    Starts at ``(<r>, 1)`` unless ``start`` is given. ``hastings=False``
    reproduces the uncorrected multiplicative-step sampler.
    """
    target = LogLikelihood(hist, r_star)
    if np.count_nonzero(hist.counts[: target.r_star + 1]) < 2:
        raise DegenerateError(
            "underdetermined histogram: fewer than 2 nonzero bins in the fit domain"
        )
    x0 = (hist.mean_distance(), 1.0) if start is None else start
    chain, acc, burn_acc = metropolis_hastings(
        target, x0, steps, burn_in, step_fraction, seed, hastings
    )
    status = "ok"
    if burn_in and burn_acc == 0.0:
        status = "warning: no move accepted during burn-in"
        warnings.warn(status, RuntimeWarning, stacklevel=2)
    return PosteriorSample.from_chain(
        chain, acc, burn_in_acceptance=burn_acc, status=status, hastings=hastings
    )


def batch_means_stderr(x, n_batches: int = 50) -> float:
    """Standard error of the mean of a correlated series by non-overlapping batch means."""
    x = np.asarray(x, dtype=np.float64)
    size = x.size // n_batches
    if size < 1:
        raise ValueError("series too short for the requested number of batches")
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def write_chain_csv(path, sample: PosteriorSample, thin: int = 1) -> None:
    if thin < 1:
        raise ValueError("thin must be >= 1")
    idx = np.arange(0, sample.chain.shape[0], thin)
    with open(path, "w") as fh:
        fh.write("step,d0,d1\n")
        for i in idx:
            fh.write(f"{i},{sample.chain[i, 0]!r},{sample.chain[i, 1]!r}\n")
