"""Generalized-binomial distance model and its KL fit.

The model assigns to Hamming distance ``r`` the probability

    P(r) = C * binom(d(r), r) / 2**d(r),    d(r) = d0 + d1 * r,

on the fit domain ``0 <= r <= r_star``; ``binom`` is continued to real
``d`` through the Beta function. The binary intrinsic dimension is ``d0``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import betaln, logsumexp

from .bitdata import DistanceHistogram
from .errors import ConvergenceError, DegenerateError

LN2 = math.log(2.0)
AUTO = "auto"


def log_binom_general(d, r):
    """``log binom(d, r)`` for real ``d > r - 1`` and integer ``r >= 0``.

    Uses ``-log(d + 1) - log B(d - r + 1, r + 1)``, which reduces to the
    integer binomial when ``d`` is an integer.
    """
    d = np.asarray(d, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0):
        raise ValueError("r must be non-negative")
    if np.any(~(d > r - 1)):
        raise ValueError("log_binom_general requires d > r - 1")
    out = -np.log1p(d) - betaln(d - r + 1.0, r + 1.0)
    return float(out) if out.ndim == 0 else out


def is_feasible(d0: float, d1: float, r_star: int) -> bool:
    """True when ``d0 >= 0`` and ``d(r) > r - 1`` on the whole domain ``[0, r_star]``.

    ``d(r) - r`` is linear in ``r``, so checking both ends is enough.
    """
    return bool(
        np.isfinite(d0) and np.isfinite(d1) and d0 >= 0.0
        and d0 + d1 * r_star > r_star - 1
    )


def log_weights(d0: float, d1: float, r_star: int) -> np.ndarray:
    """Unnormalized ``log(binom(d(r), r) / 2**d(r))`` for ``r = 0..r_star``."""
    r = np.arange(r_star + 1, dtype=np.float64)
    d = d0 + d1 * r
    return log_binom_general(d, r) - d * LN2


@dataclass(frozen=True)
class BidModelParams:
    d0: float
    d1: float
    r_star: int
    log_C: float

    @classmethod
    def normalized(cls, d0: float, d1: float, r_star: int) -> "BidModelParams":
        """Build parameters with ``log_C`` chosen so the model sums to 1 on the domain."""
        if r_star < 0:
            raise ValueError("r_star must be >= 0")
        if not is_feasible(d0, d1, r_star):
            raise ValueError(
                f"infeasible parameters d0={d0}, d1={d1} on [0, {r_star}]"
            )
        lw = log_weights(d0, d1, r_star)
        return cls(float(d0), float(d1), int(r_star), float(-logsumexp(lw)))

    def dimension(self, r):
        return self.d0 + self.d1 * np.asarray(r)

    def log_probs(self) -> np.ndarray:
        """Model log-probabilities at ``r = 0..r_star``."""
        return self.log_C + log_weights(self.d0, self.d1, self.r_star)


def model_log_prob(r: int, params: BidModelParams) -> float:
    if not 0 <= r <= params.r_star:
        raise ValueError(f"r={r} outside the fit domain [0, {params.r_star}]")
    d = params.d0 + params.d1 * r
    if not d > r - 1:
        raise ValueError(f"d(r)={d} violates d(r) > r - 1 at r={r}")
    return params.log_C + log_binom_general(d, r) - d * LN2


def resolve_r_star(hist: DistanceHistogram, r_star=AUTO) -> int:
    """Turn an r* specification into a distance.

    ``"auto"`` (or ``None``) is the largest distance with a nonzero count;
    ``"median"`` or ``"q<p>"`` (e.g. ``"q0.2"``) is the smallest ``r`` whose
    empirical CDF reaches ``p``; an integer is used as is.
    """
    if r_star is None:
        return hist.max_distance
    if isinstance(r_star, str):
        key = r_star.strip().lower()
        if key == AUTO:
            return hist.max_distance
        if key == "median":
            key = "q0.5"
        if key.startswith("q"):
            try:
                p = float(key[1:])
            except ValueError:
                raise ValueError(f"bad r* quantile {r_star!r}") from None
            if not 0.0 < p <= 1.0:
                raise ValueError(f"r* quantile must lie in (0, 1], got {p}")
            cdf = np.cumsum(hist.counts) / hist.n_pairs
            return int(np.searchsorted(cdf, p - 1e-12))
        r_star = int(key)
    r_star = int(r_star)
    if not 0 <= r_star <= hist.n_bits:
        raise ValueError(f"r_star={r_star} outside [0, {hist.n_bits}]")
    return r_star


class KLObjective:
    """``D_KL(P_emp || P)`` on ``r <= r_star`` as a function of ``(d0, d1)``.

    The empirical distribution is renormalized over the truncated domain.
    Infeasible points evaluate to ``+inf``.
    """

    def __init__(self, hist: DistanceHistogram, r_star=AUTO):
        self.r_star = resolve_r_star(hist, r_star)
        p = hist.probabilities(self.r_star)
        support = np.flatnonzero(p)
        if support.size < 2:
            raise DegenerateError(
                "underdetermined histogram: fewer than 2 nonzero bins in the fit domain"
            )
        self.support = support
        self.p = p[support]
        self.entropy_term = float(np.sum(self.p * np.log(self.p)))
        self._r = np.arange(self.r_star + 1, dtype=np.float64)

    def __call__(self, d0: float, d1: float) -> float:
        if not is_feasible(d0, d1, self.r_star):
            return math.inf
        d = d0 + d1 * self._r
        lw = -np.log1p(d) - betaln(d - self._r + 1.0, self._r + 1.0) - d * LN2
        log_p = lw[self.support] - logsumexp(lw)
        kl = self.entropy_term - float(np.dot(self.p, log_p))
        return max(kl, 0.0)


def kl_objective(hist: DistanceHistogram, params: BidModelParams) -> float:
    """KL divergence between the empirical histogram and the model on ``r <= r_star``."""
    p = hist.probabilities(params.r_star)
    support = np.flatnonzero(p)
    if support.size < 2:
        raise DegenerateError(
            "underdetermined histogram: fewer than 2 nonzero bins in the fit domain"
        )
    log_model = params.log_probs()[support]
    ps = p[support]
    return max(float(np.sum(ps * (np.log(ps) - log_model))), 0.0)


@dataclass(frozen=True)
class OptimizerInfo:
    starts: list
    iterations: int
    evaluations: int
    converged: bool
    best_start: int


@dataclass(frozen=True)
class BidFit:
    params: BidModelParams
    kl: float
    log_kl: float
    n_bits: int
    n_samples: int
    bid_per_bit: float
    optimizer: OptimizerInfo = field(compare=False)

    @property
    def d0(self) -> float:
        return self.params.d0

    @property
    def d1(self) -> float:
        return self.params.d1

    def to_dict(self) -> dict:
        p = self.params
        C = math.exp(p.log_C) if p.log_C < 700 else None
        return {
            "d0": p.d0,
            "d1": p.d1,
            "C": C,
            "log_C": p.log_C,
            "kl": self.kl,
            "log_kl": self.log_kl,
            "r_star": p.r_star,
            "n_bits": self.n_bits,
            "n_samples": self.n_samples,
            "bid_per_bit": self.bid_per_bit,
            "optimizer": asdict(self.optimizer),
        }


def default_starts(hist: DistanceHistogram) -> list[tuple[float, float]]:
    mean_r = hist.mean_distance()
    return [(mean_r, 1.0), (2.0 * mean_r, 0.0), (float(hist.n_bits), 0.0)]


def _simplex(x0: np.ndarray) -> np.ndarray:
    return np.array([x0, x0 + [0.1, 0.0], x0 + [0.0, 0.1]])


def fit_bid(
    hist: DistanceHistogram,
    r_star=AUTO,
    *,
    starts=None,
    xtol: float = 1e-6,
    ftol: float = 1e-14,
    max_evals: int = 100_000,
) -> BidFit:
    """Minimize the KL divergence over ``(d0, d1)`` with a multi-start simplex search.

    Each start is optimized in coordinates ``(d0 / s, d1)`` with ``s`` the
    start's ``d0``, so ``xtol`` acts as a relative tolerance on ``d0``.
    Infeasible starts are skipped. Raises :class:`DegenerateError` when the
    histogram has a single occupied bin and :class:`ConvergenceError` when no
    start converges within ``max_evals`` evaluations.
    """
    objective = KLObjective(hist, r_star)
    if starts is None:
        starts = default_starts(hist)
    starts = [(float(a), float(b)) for a, b in starts]

    best = None
    iterations = evaluations = 0
    for k, (a, b) in enumerate(starts):
        if not is_feasible(a, b, objective.r_star):
            continue
        scale = max(a, 1.0)

        def f(u, scale=scale):
            return objective(u[0] * scale, u[1])

        x0 = np.array([a / scale, b])
        res = minimize(
            f,
            x0,
            method="Nelder-Mead",
            options={
                "initial_simplex": _simplex(x0),
                "xatol": xtol,
                "fatol": ftol,
                "maxfev": max_evals,
                "maxiter": max_evals,
            },
        )
        iterations += int(res.nit)
        evaluations += int(res.nfev)
        cand = (float(res.fun), bool(res.status == 0), k, res.x[0] * scale, res.x[1])
        if best is None or (cand[1], -cand[0]) > (best[1], -best[0]):
            best = cand

    if best is None:
        raise ValueError("no feasible starting point for the fit")
    kl, converged, k_best, d0, d1 = best
    info = OptimizerInfo(
        starts=[list(s) for s in starts],
        iterations=iterations,
        evaluations=evaluations,
        converged=converged,
        best_start=k_best,
    )
    params = BidModelParams.normalized(d0, d1, objective.r_star)
    kl = kl_objective(hist, params)
    fit = BidFit(
        params=params,
        kl=kl,
        log_kl=math.log(kl) if kl > 0 else -math.inf,
        n_bits=hist.n_bits,
        n_samples=hist.n_samples,
        bid_per_bit=params.d0 / hist.n_bits,
        optimizer=info,
    )
    if not converged:
        raise ConvergenceError(
            f"simplex search did not converge within {max_evals} evaluations", best=fit
        )
    return fit
