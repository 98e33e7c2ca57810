import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bid.bitdata import DistanceHistogram, concat_datasets, distance_histogram, pack_bits
from bid.errors import ConvergenceError, DegenerateError
from bid.experiments import sample_system
from bid.model import (
    BidModelParams,
    KLObjective,
    fit_bid,
    is_feasible,
    kl_objective,
    log_binom_general,
    model_log_prob,
    resolve_r_star,
)


def binomial_histogram(N, scale=10**12):
    counts = np.array([math.comb(N, r) for r in range(N + 1)], dtype=object) * scale // 2**N
    return DistanceHistogram(N, 2, np.array([int(c) for c in counts], dtype=np.int64))


def mp_log_binom(d, r):
    d, r = mpmath.mpf(d), mpmath.mpf(r)
    return mpmath.loggamma(d + 1) - mpmath.loggamma(r + 1) - mpmath.loggamma(d - r + 1)


# --- generalized binomial ---------------------------------------------------------


@pytest.mark.parametrize("d, r", [(10, 3), (0, 0), (5, 5), (40, 17), (1000, 1)])
def test_log_binom_integer_cases(d, r):
    assert log_binom_general(d, r) == pytest.approx(math.log(math.comb(d, r)), abs=1e-12)


def test_log_binom_fractional_example():
    expected = float(mpmath.log(mpmath.gamma(11.5) / (mpmath.gamma(4) * mpmath.gamma(8.5))))
    assert log_binom_general(10.5, 3) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=200)
@given(st.integers(0, 400), st.floats(0.0, 3000.0))
def test_log_binom_against_arbitrary_precision(r, extra):
    d = r - 1 + 1e-3 + extra
    assert log_binom_general(d, r) == pytest.approx(float(mp_log_binom(d, r)), rel=1e-10, abs=1e-9)


def test_log_binom_pole():
    with pytest.raises(ValueError):
        log_binom_general(1.0, 2)
    with pytest.raises(ValueError):
        log_binom_general(2.0, 3)


# --- model -------------------------------------------------------------------------


def test_model_reduces_to_binomial_example():
    p = BidModelParams.normalized(4.0, 0.0, 4)
    assert model_log_prob(2, p) == pytest.approx(math.log(6 / 16), abs=1e-13)


@pytest.mark.parametrize("N", [1, 7, 64, 500])
def test_model_reduction_every_r(N):
    p = BidModelParams.normalized(float(N), 0.0, N)
    expected = [math.log(math.comb(N, r)) - N * math.log(2) for r in range(N + 1)]
    np.testing.assert_allclose(p.log_probs(), expected, atol=1e-9)
    assert p.log_C == pytest.approx(0.0, abs=1e-12)


def test_model_geometric_when_d_equals_r():
    p = BidModelParams.normalized(0.0, 1.0, 30)
    lp = p.log_probs()
    np.testing.assert_allclose(np.diff(lp), -math.log(2), atol=1e-12)


@settings(max_examples=100)
@given(st.floats(0.0, 5000.0), st.floats(-0.5, 3.0), st.integers(1, 2000))
def test_model_normalization(d0, d1, r_star):
    if not is_feasible(d0, d1, r_star):
        with pytest.raises(ValueError):
            BidModelParams.normalized(d0, d1, r_star)
        return
    p = BidModelParams.normalized(d0, d1, r_star)
    total = math.fsum(np.exp(p.log_probs()))
    assert total == pytest.approx(1.0, rel=1e-10)


def test_model_log_prob_domain_errors():
    p = BidModelParams.normalized(10.0, 0.0, 10)
    with pytest.raises(ValueError):
        model_log_prob(11, p)
    bad = BidModelParams(1.0, 0.0, 5, 0.0)
    with pytest.raises(ValueError):
        model_log_prob(3, bad)


def test_feasibility_is_checked_on_whole_domain():
    assert is_feasible(10.0, 0.5, 18)
    assert not is_feasible(10.0, 0.5, 30)
    assert not is_feasible(-1.0, 2.0, 10)


# --- r* resolution ------------------------------------------------------------------


def test_resolve_r_star_forms():
    h = DistanceHistogram(10, 5, np.array([0, 1, 2, 3, 4, 0, 0, 0, 0, 0, 0]))
    assert resolve_r_star(h) == 4
    assert resolve_r_star(h, "auto") == 4
    assert resolve_r_star(h, 7) == 7
    # cdf = 0.1, 0.3, 0.6, 1.0 at r = 1..4
    assert resolve_r_star(h, "median") == 3
    assert resolve_r_star(h, "q0.3") == 2
    assert resolve_r_star(h, "q1") == 4
    with pytest.raises(ValueError):
        resolve_r_star(h, 11)
    with pytest.raises(ValueError):
        resolve_r_star(h, "q1.5")


# --- KL objective ------------------------------------------------------------------


def test_kl_zero_for_exact_binomial():
    h = binomial_histogram(20)
    p = BidModelParams.normalized(20.0, 0.0, 20)
    assert kl_objective(h, p) < 1e-10


def test_kl_positive_for_wrong_model():
    h = binomial_histogram(20)
    assert kl_objective(h, BidModelParams.normalized(30.0, 0.0, 20)) > 1e-3


def test_kl_matches_direct_sum_with_truncation():
    counts = np.array([0, 3, 10, 20, 12, 5, 1, 0, 0])
    h = DistanceHistogram(8, 20, counts)
    p = BidModelParams.normalized(6.0, 0.3, 5)
    pe = counts[:6] / counts[:6].sum()
    lm = p.log_probs()
    expected = sum(q * (math.log(q) - lm[r]) for r, q in enumerate(pe) if q > 0)
    assert kl_objective(h, p) == pytest.approx(expected, rel=1e-12)
    assert KLObjective(h, 5)(6.0, 0.3) == pytest.approx(expected, rel=1e-9)


def test_kl_infeasible_is_inf():
    h = binomial_histogram(20)
    assert KLObjective(h)(1.0, 0.0) == math.inf


def test_kl_underdetermined():
    h = DistanceHistogram(10, 3, np.array([0, 0, 0, 3, 0, 0, 0, 0, 0, 0, 0]))
    with pytest.raises(DegenerateError, match="underdetermined"):
        fit_bid(h)
    with pytest.raises(DegenerateError):
        kl_objective(h, BidModelParams.normalized(10.0, 0.0, 10))


# --- fit -------------------------------------------------------------------------


def test_fit_exact_binomial_recovers_N():
    fit = fit_bid(binomial_histogram(200))
    assert fit.d0 == pytest.approx(200.0, rel=2e-3)
    assert abs(fit.d1) < 1e-2
    assert fit.kl < 1e-8


def test_fit_uniform_bits():
    rng = np.random.default_rng(11)
    ds = pack_bits(rng.integers(0, 2, (2000, 100), dtype=np.uint8))
    fit = fit_bid(distance_histogram(ds))
    assert 0.95 <= fit.bid_per_bit <= 1.05
    assert abs(fit.d1) < 0.1


@pytest.mark.parametrize("d0, d1, r_star", [(200.0, 0.5, 300), (80.0, 1.2, 250), (1000.0, 0.0, 1000)])
def test_fit_recovers_model_parameters(d0, d1, r_star):
    truth = BidModelParams.normalized(d0, d1, r_star)
    rng = np.random.default_rng(12)
    counts = rng.multinomial(10**7, np.exp(truth.log_probs()))
    h = DistanceHistogram(max(r_star, 1000), 10**4, np.pad(counts, (0, max(r_star, 1000) - r_star)))
    fit = fit_bid(h, r_star)
    assert fit.d0 == pytest.approx(d0, rel=0.02)
    assert fit.d1 == pytest.approx(d1, rel=0.02, abs=0.02)


def test_fit_normalization_holds_at_optimum():
    fit = fit_bid(binomial_histogram(64))
    assert math.fsum(np.exp(fit.params.log_probs())) == pytest.approx(1.0, rel=1e-10)


def test_fit_is_deterministic_and_permutation_invariant():
    rng = np.random.default_rng(13)
    x = (rng.random((300, 150)) < 0.3).astype(np.uint8)
    a = fit_bid(distance_histogram(pack_bits(x)))
    b = fit_bid(distance_histogram(pack_bits(x[rng.permutation(300)])))
    assert a == b
    assert a.to_dict() == b.to_dict()


def test_fit_reports_non_convergence():
    with pytest.raises(ConvergenceError) as err:
        fit_bid(binomial_histogram(200), max_evals=5)
    assert err.value.best is not None
    assert not err.value.best.optimizer.converged


def test_fit_export_fields():
    d = fit_bid(binomial_histogram(30)).to_dict()
    for key in ("d0", "d1", "C", "kl", "log_kl", "r_star", "n_bits", "n_samples", "bid_per_bit"):
        assert key in d
    assert {"starts", "iterations", "converged"} <= set(d["optimizer"])


def test_concatenation_additivity():
    kw = dict(burn_in=50)
    a = sample_system("chain-blocks", 400, 2.0, 800, seed=21, **kw).dataset
    b = sample_system("chain-blocks", 600, 2.0, 800, seed=22, **kw).dataset
    fa, fb = fit_bid(distance_histogram(a)), fit_bid(distance_histogram(b))
    fab = fit_bid(distance_histogram(concat_datasets([a, b])))
    total = fa.d0 + fb.d0
    assert abs(fab.d0 - total) / total <= 0.03
