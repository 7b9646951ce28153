"""Monte Carlo experiment engine.

Eigenvalue experiments histogram the nonzero spectrum of Y Y^H / M per
coherence block (so cluster centers sit near N*p_signal and
N*p_interference), while the analytic laws describe the Y^H Y / (M N)
normalization; attached supports are therefore scaled by N before overlay.

Trials are independent work units seeded as (seed, trial_index) streams, so
any execution schedule produces identical results; the optional thread pool
size comes from the MIMOSPECTRA_WORKERS environment variable.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import rmt
from .channel import SystemParams, crandn, realize_channel
from .errors import ConfigError
from .estimation import (
    PilotLayout,
    count_bit_errors,
    estimate_subspace_channel,
    mf_detect,
    pilot_based_detect,
)

NONZERO_EIG_RTOL = 1e-8
SCHEMES = ("subspace", "pilot")


def trial_rng(seed, trial_index) -> np.random.Generator:
    """Independent, schedule-invariant stream for one trial."""
    key = trial_index if isinstance(trial_index, tuple) else (trial_index,)
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("MIMOSPECTRA_WORKERS", "1")))
    except ValueError:
        return 1


def _map_trials(fn, n_trials: int):
    workers = _workers()
    if workers == 1:
        return [fn(t) for t in range(n_trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_trials)))


def worst_case_power_diagonal(num_users: int, num_cells: int,
                              p_signal: float, p_interference: float) -> np.ndarray:
    """Served-cell users at p_signal, all others at p_interference."""
    if p_signal <= 0 or p_interference < 0:
        raise ConfigError("powers must be positive (interference may be zero)")
    return np.concatenate([
        np.full(num_users, float(p_signal)),
        np.full(num_users * (num_cells - 1), float(p_interference)),
    ])


# ---------------------------------------------------------------------------
# eigenvalue experiments
# ---------------------------------------------------------------------------

@dataclass
class EigenExperimentResult:
    params: SystemParams
    trials: int
    seed: int
    terms: str
    samples_per_trial: list[np.ndarray]
    supports: dict[str, rmt.SpectralSupport] = field(default_factory=dict)
    truncation: rmt.TruncationReport | None = None

    def pooled(self) -> np.ndarray:
        return np.concatenate(self.samples_per_trial)

    def histogram(self, bins: int = 60):
        """Normalized density histogram (integrates to one)."""
        pooled = self.pooled()
        density, edges = np.histogram(pooled, bins=bins, density=True)
        centers = 0.5 * (edges[:-1] + edges[1:])
        return centers, density


def _nonzero_block_eigs(composite: np.ndarray, scaled_symbols: np.ndarray,
                        num_antennas: int, noise: np.ndarray | None) -> np.ndarray:
    """Nonzero eigenvalues of Y Y^H / M with Y = composite @ scaled_symbols (+ noise).

    Noiseless blocks with few columns use the small product
    (H^H H / M)(X X^H) whose eigenvalues equal the nonzero spectrum.
    """
    m = num_antennas
    n_cols = composite.shape[1]
    n = scaled_symbols.shape[1]
    if noise is None and n_cols <= min(m, n):
        gram_h = composite.conj().T @ composite / m
        gram_x = scaled_symbols @ scaled_symbols.conj().T
        lam = np.linalg.eigvals(gram_h @ gram_x)
        if np.abs(lam.imag).max(initial=0.0) > 1e-6 * max(np.abs(lam).max(initial=0.0), 1e-300):
            raise ConfigError("product eigenvalues unexpectedly complex")
        lam = np.sort(lam.real)
    else:
        y = composite @ scaled_symbols
        if noise is not None:
            y = y + noise
        sv = np.linalg.svd(y, compute_uv=False)
        lam = np.sort(sv ** 2 / m)
    keep = lam > NONZERO_EIG_RTOL * lam.max(initial=0.0)
    return lam[keep]


def _term_columns(params: SystemParams, terms: str) -> tuple[int, int]:
    k, l = params.users_per_cell, params.num_cells
    if terms == "all":
        return 0, k * l
    if terms == "signal":
        return 0, k
    if terms == "interference":
        if l < 2:
            raise ConfigError("interference term requires at least 2 cells")
        return k, k * l
    raise ConfigError(f"unknown terms selector {terms!r}")


def _attach_supports(params: SystemParams, terms: str):
    """Analytic supports in the Y Y^H / M normalization (N-scaled)."""
    n = params.block_length
    k, l = params.users_per_cell, params.num_cells
    supports: dict[str, rmt.SpectralSupport] = {}
    truncation = None
    want_sig = terms in ("all", "signal")
    want_int = terms in ("all", "interference") and l > 1 and params.interference_power > 0

    def try_attach(name, fn):
        try:
            supports[name] = fn().scaled(n)
        except ConfigError as exc:
            warnings.warn(f"could not attach {name} support: {exc}", stacklevel=3)

    if params.scenario == "iid":
        if want_sig:
            try_attach("iid_signal", lambda: rmt.support_iid(
                params.signal_power, k / params.num_antennas, k / n))
        if want_int:
            try_attach("iid_interference", lambda: rmt.support_iid(
                params.interference_power, k * (l - 1) / params.num_antennas,
                k * (l - 1) / n))
        return supports, truncation

    if params.scenario == "identical_aoas":
        if want_sig:
            try_attach("one_sided_signal",
                       lambda: rmt.support_onesided(rmt.OneSidedParams.signal(params)))
        if want_int:
            try_attach("one_sided_interference",
                       lambda: rmt.support_onesided(rmt.OneSidedParams.interference(params)))
        if terms == "all" and l > 1 and params.interference_power > 0:
            def double():
                nonlocal truncation
                sup, truncation = rmt.support_double_sided(
                    rmt.DoubleSidedParams.from_system(params))
                return sup
            try_attach("double_sided", double)
        return supports, truncation

    # distinct AoAs
    counts = params.aoa_counts
    if want_sig:
        try_attach("one_sided_signal", lambda: rmt.support_onesided(rmt.OneSidedParams(
            scale=params.signal_power, inner_dim=k, m=params.num_antennas,
            n=n, p=counts[0])))
    if want_int and len(set(counts[1:])) == 1:
        try_attach("distinct_interference", lambda: rmt.support_distinct(
            k, l, params.num_antennas, n, counts[1], params.interference_power))
    return supports, truncation


def run_eigen_experiment(params: SystemParams, trials: int, seed: int,
                         terms: str = "all",
                         attach_supports: bool = True) -> EigenExperimentResult:
    """Pool nonzero eigenvalues of Y Y^H / M over independent coherence blocks.

    Blocks are noiseless by default (high-SNR regime) unless the params
    enable noise; inputs are unit-variance Gaussian symbols.
    """
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    lo, hi = _term_columns(params, terms)
    k, l, n = params.users_per_cell, params.num_cells, params.block_length
    powers = worst_case_power_diagonal(k, l, params.signal_power,
                                       params.interference_power)

    def one_trial(t: int) -> np.ndarray:
        rng = trial_rng(seed, t)
        ch = realize_channel(params, rng)
        x = crandn(rng, k * l, n)
        noise = crandn(rng, params.num_antennas, n) if params.noise_enabled else None
        composite = ch.composite[:, lo:hi]
        scaled = np.sqrt(powers[lo:hi])[:, None] * x[lo:hi]
        return _nonzero_block_eigs(composite, scaled, params.num_antennas, noise)

    samples = _map_trials(one_trial, trials)
    supports, truncation = _attach_supports(params, terms) if attach_supports else ({}, None)
    return EigenExperimentResult(params=params, trials=trials, seed=seed, terms=terms,
                                 samples_per_trial=samples, supports=supports,
                                 truncation=truncation)


def run_saturation_experiment(num_aoas: int, m_physical: int, params: SystemParams,
                              trials: int, seed: int
                              ) -> tuple[EigenExperimentResult, EigenExperimentResult]:
    """Paired spectra: physical channel at M = m_physical with P AoAs versus
    the i.d. channel with M = P antennas, same K, L, N, and powers."""
    if m_physical < num_aoas:
        raise ConfigError("m_physical must be >= num_aoas")
    phys = replace(params, scenario="identical_aoas", num_antennas=m_physical,
                   aoa_counts=(num_aoas,))
    iid = replace(params, scenario="iid", num_antennas=num_aoas, aoa_counts=())
    res_phys = run_eigen_experiment(phys, trials, seed, attach_supports=False)
    res_iid = run_eigen_experiment(iid, trials, seed + 1, attach_supports=False)
    return res_phys, res_iid


# ---------------------------------------------------------------------------
# BER experiments
# ---------------------------------------------------------------------------

@dataclass
class BerPoint:
    sweep_value: float
    ber: float
    ci_lo: float
    ci_hi: float
    bits: int


@dataclass
class BerResult:
    scheme: str
    sweep_name: str
    points: list[BerPoint]
    params: SystemParams
    seed: int

    def ber_array(self) -> np.ndarray:
        return np.array([p.ber for p in self.points])


def snr_db_to_signal_power(snr_db: float) -> float:
    """Per-user SNR wired as p_signal = 10^(SNR/10) against unit noise."""
    return 10.0 ** (snr_db / 10.0)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def _ber_point(params: SystemParams, bits_target: int, seed, point_key: tuple
               ) -> dict[str, tuple[float, float, float, int]]:
    """Simulate coherence blocks until bits_target served-cell data bits.

    Both schemes share the same blocks; the 95% CI is computed over
    per-block error rates (blocks are i.i.d.).
    """
    k, l, n = params.users_per_cell, params.num_cells, params.block_length
    layout = PilotLayout(num_users=k, block_length=n)
    bits_per_block = 2 * k * layout.num_data
    n_blocks = max(2, int(np.ceil(bits_target / bits_per_block)))
    rates = {s: np.empty(n_blocks) for s in SCHEMES}

    def one_block(blk: int):
        rng = trial_rng(seed, point_key + (blk,))
        ch = realize_channel(params, rng)
        pilot = layout.pilot_block()
        data = [layout.data_block(rng) for _ in range(l)]
        symbols = [layout.assemble(d) for d in data]
        y = np.zeros((params.num_antennas, n), dtype=complex)
        for i in range(l):
            power = params.signal_power if i == 0 else params.interference_power
            y += np.sqrt(power) * (ch.cell_channel(i) @ symbols[i])
        if params.noise_enabled:
            y += crandn(rng, params.num_antennas, n)
        model = estimate_subspace_channel(y, pilot, k)
        dec_sub = mf_detect(model.projected[:, k:], model.estimate)
        dec_pil = pilot_based_detect(y, pilot)
        out = {}
        for name, dec in (("subspace", dec_sub), ("pilot", dec_pil)):
            out[name] = count_bit_errors(dec, data[0]) / bits_per_block
        return out

    per_block = _map_trials(one_block, n_blocks)
    for i, res in enumerate(per_block):
        for s in SCHEMES:
            rates[s][i] = res[s]
    out = {}
    for s in SCHEMES:
        r = rates[s]
        mean = float(r.mean())
        half = 1.96 * float(r.std(ddof=1)) / np.sqrt(n_blocks)
        out[s] = (mean, max(mean - half, 0.0), mean + half, n_blocks * bits_per_block)
    return out


def run_ber_experiment(params: SystemParams, ratios_db, bits_target: int,
                       seed: int) -> dict[str, BerResult]:
    """BER versus interference-to-signal ratio for both schemes.

    ``params.interference_power`` is overridden per sweep point with
    ratio * p_signal.
    """
    if bits_target < 1:
        raise ConfigError("bits_target must be positive")
    ratios_db = list(ratios_db)
    points: dict[str, list[BerPoint]] = {s: [] for s in SCHEMES}
    for j, ratio_db in enumerate(ratios_db):
        p_i = db_to_linear(ratio_db) * params.signal_power
        point_params = replace(params, interference_power=p_i)
        res = _ber_point(point_params, bits_target, seed, (j,))
        for s in SCHEMES:
            ber, lo, hi, bits = res[s]
            points[s].append(BerPoint(sweep_value=float(ratio_db), ber=ber,
                                      ci_lo=lo, ci_hi=hi, bits=bits))
    return {s: BerResult(scheme=s, sweep_name="ratio_db", points=points[s],
                         params=params, seed=seed) for s in SCHEMES}


def run_distinct_aoa_ber(params: SystemParams, p4_values, ratios_db,
                         bits_target: int, seed: int
                         ) -> dict[int, dict[str, BerResult]]:
    """fig8-preset family: sweep the last cell's AoA count."""
    if params.scenario != "distinct_aoas":
        raise ConfigError("distinct-AoA sweep requires the distinct_aoas scenario")
    out = {}
    for p4 in p4_values:
        counts = params.aoa_counts[:-1] + (int(p4),)
        out[int(p4)] = run_ber_experiment(replace(params, aoa_counts=counts),
                                          ratios_db, bits_target, seed)
    return out


def run_short_coherence_ber(n_values, snr_db: float, ratios_db,
                            bits_target: int, seed: int,
                            num_antennas: int = 400, num_users: int = 15,
                            num_cells: int = 4) -> dict[int, dict[str, BerResult]]:
    """fig9-preset family: i.d. channel with block length comparable to K*L."""
    p_s = snr_db_to_signal_power(snr_db)
    out = {}
    for n in n_values:
        params = SystemParams(num_antennas=num_antennas, users_per_cell=num_users,
                              num_cells=num_cells, block_length=int(n),
                              signal_power=p_s, interference_power=p_s,
                              noise_enabled=True, scenario="iid")
        out[int(n)] = run_ber_experiment(params, ratios_db, bits_target, seed)
    return out
