"""Monte Carlo generators for the spin-system benchmarks.

Every chain owns a private splitmix64 stream seeded from
``SeedSequence([master_seed, stream, block, chain])``, so datasets are
bit-identical for a given seed whatever the number of worker threads.
One configuration is harvested per chain after burn-in.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .bitdata import BitDataset, concat_datasets, pack_bits, potts_encode, spins_to_bits

TOPOLOGIES = ("square", "triangular", "chain")
ISING_TC = 2.0 / math.log(1.0 + math.sqrt(2.0))

# Stream tags keep seeds of different generators apart.
_STREAM_ISING = 1
_STREAM_POTTS = 2
_STREAM_CHAIN = 3

_OFFSETS = {
    "square": ((1, 0), (-1, 0), (0, 1), (0, -1)),
    "triangular": ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)),
}


@dataclass(frozen=True)
class LatticeSpec:
    """Periodic lattice. ``L`` is the side for 2-D lattices and the length for a chain."""

    topology: str
    L: int
    J: float = 1.0
    boundary: str = "periodic"

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        if self.L < 2:
            raise ValueError(f"L must be >= 2, got {self.L}")
        if self.boundary != "periodic":
            raise ValueError("only periodic boundaries are supported")

    @property
    def n_sites(self) -> int:
        return self.L if self.topology == "chain" else self.L * self.L

    @property
    def coordination(self) -> int:
        return {"square": 4, "triangular": 6, "chain": 2}[self.topology]

    def neighbors(self) -> np.ndarray:
        """``(n_sites, z)`` neighbor table; site ``(x, y)`` has index ``x * L + y``."""
        L = self.L
        if self.topology == "chain":
            i = np.arange(L)
            return np.stack([(i + 1) % L, (i - 1) % L], axis=1).astype(np.int32)
        x, y = np.divmod(np.arange(L * L), L)
        cols = [((x + dx) % L) * L + (y + dy) % L for dx, dy in _OFFSETS[self.topology]]
        return np.stack(cols, axis=1).astype(np.int32)

    def bonds(self) -> np.ndarray:
        """Each unordered neighbor pair once, as ``(n_bonds, 2)``."""
        nbr = self.neighbors()
        half = nbr[:, 0::2]  # forward offsets: (+1,0), (0,+1), (+1,+1) / chain +1
        i = np.repeat(np.arange(self.n_sites), half.shape[1])
        return np.stack([i, half.ravel()], axis=1)

    def critical_temperature(self, q: int | None = None) -> float | None:
        """Transition temperature of the benchmark, or ``None`` when there is none."""
        if q is not None:
            return 1.0 / math.log(1.0 + math.sqrt(q)) if self.topology == "square" else None
        if self.topology == "square" and self.J > 0:
            return ISING_TC * self.J
        return None


@dataclass(frozen=True)
class SamplerConfig:
    """Sampling settings; ``None`` burn-in or start means "pick from T and T_c"."""

    temperature: float
    n_samples: int
    seed: int
    burn_in_sweeps: int | None = None
    start: str | None = None

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.burn_in_sweeps is not None and self.burn_in_sweeps < 0:
            raise ValueError("burn_in_sweeps must be >= 0")
        if self.start not in (None, "hot", "cold"):
            raise ValueError(f"start must be 'hot' or 'cold', got {self.start!r}")

    @property
    def beta(self) -> float:
        return 0.0 if math.isinf(self.temperature) else 1.0 / self.temperature


def default_burn_in(T: float, T_c: float | None) -> int:
    """1000 sweeps, or 10^4 within 10% of the transition (critical slowing down)."""
    if T_c is not None and abs(T - T_c) <= 0.1 * T_c:
        return 10_000
    return 1_000


def default_start(T: float, T_c: float | None) -> str:
    """Hot start at or above the transition, cold below; hot when there is no transition."""
    if T_c is None or T >= T_c:
        return "hot"
    return "cold"


def chain_seeds(master_seed: int, stream: int, n: int, block: int = 0) -> np.ndarray:
    return np.array(
        [
            np.random.SeedSequence([master_seed, stream, block, c]).generate_state(1, np.uint64)[0]
            for c in range(n)
        ],
        dtype=np.uint64,
    )


# --- energies -------------------------------------------------------------------


def _check_config(config, spec: LatticeSpec) -> np.ndarray:
    config = np.asarray(config)
    if config.shape[-1] != spec.n_sites:
        raise ValueError(
            f"configuration has {config.shape[-1]} sites, lattice has {spec.n_sites}"
        )
    return config


def ising_energy(config, spec: LatticeSpec) -> float:
    """``-J * sum_<ij> s_i s_j`` over unordered neighbor pairs. Batched over leading axes."""
    s = _check_config(config, spec).astype(np.int64)
    b = spec.bonds()
    bond_sum = (s[..., b[:, 0]] * s[..., b[:, 1]]).sum(axis=-1)
    e = -spec.J * bond_sum
    return float(e) if np.ndim(e) == 0 else e


def potts_energy(config, spec: LatticeSpec, q: int | None = None) -> float:
    """``-sum_<ij> delta(s_i, s_j)``. Batched over leading axes."""
    s = _check_config(config, spec)
    if s.min() < 0 or (q is not None and s.max() >= q):
        raise ValueError("Potts state out of range")
    b = spec.bonds()
    e = -(s[..., b[:, 0]] == s[..., b[:, 1]]).sum(axis=-1)
    return float(e) if np.ndim(e) == 0 else e.astype(np.float64)


# --- RNG ------------------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_S32 = np.uint64(32)
_M32 = np.uint64(0xFFFFFFFF)
_INV53 = 1.0 / 9007199254740992.0
_INV32 = 1.0 / 4294967296.0


@njit(inline="always")
def _next(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return state, z ^ (z >> _S31)


@njit(inline="always")
def _uniform(state):
    state, z = _next(state)
    return state, float(z >> _S11) * _INV53


@njit(inline="always")
def _index(state, n):
    state, z = _next(state)
    return state, int(((z >> _S32) * np.uint64(n)) >> _S32)


@njit(inline="always")
def _index_and_uniform(state, n):
    """Site index from the high 32 bits, a uniform in [0, 1) from the low 32."""
    state, z = _next(state)
    i = int(((z >> _S32) * np.uint64(n)) >> _S32)
    return state, i, float(z & _M32) * _INV32


# --- Ising Metropolis -------------------------------------------------------------


@njit(cache=True)
def _ising_bond_sum(spins, nbr):
    total = 0
    for i in range(nbr.shape[0]):
        for k in range(nbr.shape[1]):
            total += spins[i] * spins[nbr[i, k]]
    return total // 2


@njit(parallel=True, cache=True)
def _ising_chains(nbr, accept, seeds, hot, n_sweeps, trace_every, out, bond_sums, traces):
    n_chains = seeds.shape[0]
    N, z = nbr.shape
    for c in prange(n_chains):
        state = seeds[c]
        spins = np.ones(N, dtype=np.int32)
        if hot:
            for i in range(N):
                state, u = _uniform(state)
                if u < 0.5:
                    spins[i] = -1
        S = _ising_bond_sum(spins, nbr)
        t = 0
        for sweep in range(n_sweeps):
            for _ in range(N):
                state, i, u = _index_and_uniform(state, N)
                h = 0
                for k in range(z):
                    h += spins[nbr[i, k]]
                m = spins[i] * h
                # flipping site i changes the bond sum by -2 * s_i * h
                if u >= accept[m + z]:
                    continue
                spins[i] = -spins[i]
                S -= 2 * m
            if trace_every > 0 and (sweep + 1) % trace_every == 0:
                traces[c, t] = S
                t += 1
        for i in range(N):
            out[c, i] = spins[i]
        bond_sums[c] = S


@dataclass(frozen=True)
class ChainRun:
    """Raw output of a batch of chains.

    ``configs`` holds spins (Ising, values in {-1, +1}) or colors (Potts).
    ``energies`` is the incrementally tracked final energy of each chain and
    ``traces`` the energy every ``trace_every`` sweeps (``None`` if disabled).
    """

    configs: np.ndarray
    energies: np.ndarray
    traces: np.ndarray | None
    burn_in_sweeps: int
    start: str
    trace_every: int = 0


def _resolve(spec: LatticeSpec, cfg: SamplerConfig, q: int | None = None):
    T_c = spec.critical_temperature(q)
    burn = cfg.burn_in_sweeps
    if burn is None:
        burn = default_burn_in(cfg.temperature, T_c)
    start = cfg.start or default_start(cfg.temperature, T_c)
    return burn, start


def run_ising_chains(
    spec: LatticeSpec, cfg: SamplerConfig, trace_every: int = 0, *, block: int = 0,
    stream: int = _STREAM_ISING,
) -> ChainRun:
    """Single-spin-flip Metropolis with random site selection, one chain per sample."""
    burn, start = _resolve(spec, cfg)
    nbr = spec.neighbors()
    z = nbr.shape[1]
    m = np.arange(-z, z + 1)
    with np.errstate(over="ignore"):
        accept = np.minimum(1.0, np.exp(-cfg.beta * 2.0 * spec.J * m))
    seeds = chain_seeds(cfg.seed, stream, cfg.n_samples, block)
    out = np.empty((cfg.n_samples, spec.n_sites), dtype=np.int8)
    bond_sums = np.empty(cfg.n_samples, dtype=np.int64)
    n_trace = burn // trace_every if trace_every > 0 else 0
    traces = np.zeros((cfg.n_samples, n_trace), dtype=np.int64)
    _ising_chains(nbr, accept, seeds, start == "hot", burn, trace_every, out, bond_sums, traces)
    return ChainRun(
        configs=out,
        energies=-spec.J * bond_sums.astype(np.float64),
        traces=-spec.J * traces.astype(np.float64) if trace_every > 0 else None,
        burn_in_sweeps=burn,
        start=start,
        trace_every=trace_every,
    )


def metropolis_sample_ising(spec: LatticeSpec, cfg: SamplerConfig) -> BitDataset:
    """Ising samples as bits, ``bit = (s + 1) / 2``."""
    run = run_ising_chains(spec, cfg)
    return pack_bits(spins_to_bits(run.configs))


# --- Potts heat bath --------------------------------------------------------------


@njit(cache=True)
def _potts_match_count(colors, nbr):
    total = 0
    for i in range(nbr.shape[0]):
        for k in range(nbr.shape[1]):
            if colors[i] == colors[nbr[i, k]]:
                total += 1
    return total // 2


@njit(parallel=True, cache=True)
def _potts_chains(nbr, q, boltz, seeds, hot, n_sweeps, trace_every, out, matches, traces):
    n_chains = seeds.shape[0]
    N, z = nbr.shape
    for c in prange(n_chains):
        state = seeds[c]
        colors = np.zeros(N, dtype=np.int32)
        if hot:
            for i in range(N):
                state, a = _index(state, q)
                colors[i] = a
        M = _potts_match_count(colors, nbr)
        count = np.zeros(q, dtype=np.int32)
        w = np.empty(q)
        t = 0
        for sweep in range(n_sweeps):
            for _ in range(N):
                state, i, u = _index_and_uniform(state, N)
                for a in range(q):
                    count[a] = 0
                for k in range(z):
                    count[colors[nbr[i, k]]] += 1
                total = 0.0
                for a in range(q):
                    total += boltz[count[a]]
                    w[a] = total
                target = u * total
                new = q - 1
                for a in range(q):
                    if target < w[a]:
                        new = a
                        break
                M += count[new] - count[colors[i]]
                colors[i] = new
            if trace_every > 0 and (sweep + 1) % trace_every == 0:
                traces[c, t] = M
                t += 1
        for i in range(N):
            out[c, i] = colors[i]
        matches[c] = M


def potts_gauge_fix(config) -> np.ndarray:
    """Swap the most frequent color with color 0 (ties go to the lowest index).

    Works on one configuration or a batch along the last axis; energy is
    unchanged because the relabeling is a permutation of colors.
    """
    config = np.asarray(config)
    if config.ndim == 1:
        return potts_gauge_fix(config[None, :])[0]
    out = config.copy()
    for row, src in zip(out, config):
        dominant = int(np.argmax(np.bincount(src)))
        if dominant != 0:
            row[src == dominant] = 0
            row[src == 0] = dominant
    return out


def run_potts_chains(
    q: int, spec: LatticeSpec, cfg: SamplerConfig, trace_every: int = 0
) -> ChainRun:
    """Single-site heat bath: each visited site redraws its color from the local Boltzmann weights."""
    if q < 2:
        raise ValueError(f"q must be >= 2, got {q}")
    burn, start = _resolve(spec, cfg, q)
    nbr = spec.neighbors()
    z = nbr.shape[1]
    boltz = np.exp(cfg.beta * np.arange(z + 1))
    seeds = chain_seeds(cfg.seed, _STREAM_POTTS, cfg.n_samples)
    out = np.empty((cfg.n_samples, spec.n_sites), dtype=np.int16)
    matches = np.empty(cfg.n_samples, dtype=np.int64)
    n_trace = burn // trace_every if trace_every > 0 else 0
    traces = np.zeros((cfg.n_samples, n_trace), dtype=np.int64)
    _potts_chains(nbr, q, boltz, seeds, start == "hot", burn, trace_every, out, matches, traces)
    return ChainRun(
        configs=out,
        energies=-matches.astype(np.float64),
        traces=-traces.astype(np.float64) if trace_every > 0 else None,
        burn_in_sweeps=burn,
        start=start,
        trace_every=trace_every,
    )


def heatbath_local_distribution(colors, site: int, spec: LatticeSpec, q: int, T: float) -> np.ndarray:
    """Conditional color distribution at ``site`` given its neighbors."""
    nbr = spec.neighbors()[site]
    count = np.bincount(np.asarray(colors)[nbr], minlength=q)
    w = np.exp(count / T)
    return w / w.sum()


def heatbath_sample_potts(q: int, spec: LatticeSpec, cfg: SamplerConfig) -> BitDataset:
    """Potts samples, gauge-fixed then written in binary (``ceil(log2 q)`` bits per site)."""
    run = run_potts_chains(q, spec, cfg)
    return potts_encode(potts_gauge_fix(run.configs), q)


# --- 1-D i.i.d. blocks ------------------------------------------------------------


def chain_block_spec(N_block: int, ferro: bool = False) -> LatticeSpec:
    """Periodic chain with energy ``+sum s_i s_{i+1}`` (``J = -1``), or ``J = +1`` if ``ferro``."""
    return LatticeSpec("chain", N_block, J=1.0 if ferro else -1.0)


def sample_iid_blocks(
    B: int, N_block: int, T: float, cfg: SamplerConfig, ferro: bool = False
) -> BitDataset:
    """Concatenate ``B`` independently sampled chain blocks per row.

    ``cfg.temperature`` is ignored in favour of ``T``; each block uses its own
    seeds derived from ``(cfg.seed, block, chain)``.
    """
    if B < 1:
        raise ValueError(f"B must be >= 1, got {B}")
    spec = chain_block_spec(N_block, ferro)
    block_cfg = SamplerConfig(
        temperature=T, n_samples=cfg.n_samples, seed=cfg.seed,
        burn_in_sweeps=cfg.burn_in_sweeps, start=cfg.start,
    )
    parts = []
    for b in range(B):
        run = run_ising_chains(spec, block_cfg, block=b, stream=_STREAM_CHAIN)
        parts.append(pack_bits(spins_to_bits(run.configs)))
    return concat_datasets(parts)


def transfer_matrix_nn_correlation(N: int, T: float, J: float) -> float:
    """Exact ``<s_i s_{i+1}>`` of a periodic Ising ring of ``N`` spins."""
    t = math.tanh(J / T)
    return (t + t ** (N - 1)) / (1.0 + t**N)
