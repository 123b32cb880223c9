"""Monte Carlo verification of serial-search acquisition at two fidelities.

Metric level draws each cell's decision metric from its exact
per-realization distribution: noise cells are Exp(1), the correct-phase
cell of the bin at signed offset s is |sqrt(L/2) e^{j psi} + n|^2 with
L = L_max sinc^2((df0 - s W) T_per) for the realized residual Doppler df0
(zero beyond the l_max truncation).  Waveform level synthesizes the
received samples (code-modulated carrier plus white noise), downconverts
with each bin's center frequency using a fresh noise realization per bin,
despreads at every code phase, averages, and squares; the metrics then
come out of the arithmetic instead of out of a distribution.

Unit audit (waveform level).  The decision metric must have noise with
per-component variance 1/2 so thresholds mean the same thing in both
fidelities and in the closed forms.  The correlator X = (1/N) sum_n r[n]
c[n] scales noise variance by 1/N, so complex baseband noise is drawn with
per-sample per-component variance N/2.  The noiseless correlator peak is
the baseband amplitude times the Dirichlet kernel D, so amplitude
sqrt(C/2) with C = L_max makes the non-centrality of 2|X|^2 equal
2 (sqrt(C/2) D)^2 = L_max D^2, which is 2 T_per (C/N0) D^2: the defining
relation between C/N0 and L_max.  In the real-IF validation mode the same
audit gives per-sample real noise variance equal to the high-rate sample
count N_high and amplitude sqrt(2 C): downconversion halves the amplitude
and splits the noise between components, averaging by R = N_high/N then
restores the chip-rate figures above.

Determinism.  Trials are processed in fixed-size batches; batch i of run
tag t derives its own counter-based (Philox) substream from
SeedSequence((seed, t)).spawn().  Thresholds are applied post hoc to
recorded per-trial segment maxima, so one pass serves a whole beta grid,
and all aggregation is integer counting: results are identical for any
worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .analytic import DopplerGrid, SearchOrder, SearchPolicy, SignalParams, l_max_param
from .prncode import CODE_LENGTH, generate_ca_code

__all__ = [
    "Fidelity",
    "Classification",
    "WaveformConfig",
    "SimConfig",
    "TrialOutcome",
    "McEstimate",
    "draw_metric",
    "run_metric_trial",
    "run_waveform_trial",
    "monte_carlo",
    "monte_carlo_sweep",
    "wilson_interval",
    "dirichlet_kernel",
    "noiseless_metric",
]

# Fixed batch sizes are part of the algorithm: changing them would reshuffle
# substreams and therefore results for a given seed.
_BATCH_METRIC = 4096
_BATCH_WAVEFORM = 256


class Fidelity(Enum):
    METRIC_LEVEL = "metric"
    WAVEFORM = "waveform"


class Classification(Enum):
    DETECTION = "detection"
    FALSE_STOP = "false-stop"
    NO_STOP = "no-stop"


@dataclass(frozen=True)
class WaveformConfig:
    """Sampling and code selection for the waveform-level chain.

    f_if = 0 selects complex-baseband synthesis at one sample per chip;
    a nonzero f_if selects real-valued IF synthesis at f_s with averaging
    decimation down to chip rate.  prn_search None means: same as
    prn_signal for detection runs, PRN 5 for false-alarm runs.
    """

    f_s: float = 1.023e6
    f_if: float = 0.0
    prn_signal: int = 1
    prn_search: int | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.f_s) and self.f_s > 0.0):
            raise ValueError("f_s must be positive")
        if not (math.isfinite(self.f_if) and self.f_if >= 0.0):
            raise ValueError("f_if must be finite and >= 0")

    def samples_per_period(self, t_per: float) -> int:
        n_high = round(t_per * self.f_s)
        if n_high < CODE_LENGTH or n_high % CODE_LENGTH != 0:
            raise ValueError(
                "t_per * f_s must be an integer multiple of the code length "
                f"(got {t_per * self.f_s!r})")
        return n_high

    def search_prn(self, detection_run: bool) -> int:
        if self.prn_search is not None:
            return self.prn_search
        if detection_run:
            return self.prn_signal
        return 5 if self.prn_signal != 5 else 1


@dataclass(frozen=True)
class SimConfig:
    """One Monte Carlo experiment: sampling plan plus the search definition."""

    trials: int
    seed: int
    fidelity: Fidelity
    params: SignalParams
    grid: DopplerGrid
    policy: SearchPolicy
    l_max: int = 2
    waveform: WaveformConfig = WaveformConfig()

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.policy.accept_half_width >= self.grid.num_bins:
            raise ValueError("accept_half_width must be smaller than num_bins")
        if int(self.l_max) != self.l_max or self.l_max < 0:
            raise ValueError("l_max must be a non-negative integer")


@dataclass(frozen=True)
class TrialOutcome:
    stopped: bool
    stop_bin: int | None
    stop_phase: int | None
    correct_bin: int
    correct_phase: int
    classified: Classification


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimates at one threshold.

    p_det comes from the detection run (search code = signal code); p_fa is
    the stop probability of the signal-free false-alarm run.  Confidence
    intervals are 95% Wilson.  stop_offset_counts histograms the detection
    run's correct-phase stops by stop-bin offset from the correct bin,
    regardless of the acceptance half-width.
    """

    beta: float
    trials: int
    n_detect: int
    n_false_stop: int
    n_no_stop: int
    n_fa_stop: int
    p_det: float
    p_det_ci: tuple[float, float]
    p_fa: float
    p_fa_ci: tuple[float, float]
    stop_offset_counts: dict[int, int]


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    p = successes / trials
    zz = z * z
    denom = 1.0 + zz / trials
    center = (p + zz / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + zz / (4.0 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


# --- elementary draws -----------------------------------------------------------

def draw_metric(l_param: float, rng: np.random.Generator, size=None):
    """One cell decision metric |X|^2 with X = sqrt(L/2) e^{j psi} + n,
    psi uniform and n complex Gaussian with per-component variance 1/2;
    2|X|^2 is then non-central chi-squared with 2 dof and non-centrality L.
    """
    if not (math.isfinite(l_param) and l_param >= 0.0):
        raise ValueError("l_param must be finite and >= 0")
    amp = math.sqrt(0.5 * l_param)
    psi = rng.uniform(0.0, 2.0 * math.pi, size)
    g1 = rng.standard_normal(size)
    g2 = rng.standard_normal(size)
    re = amp * np.cos(psi) + math.sqrt(0.5) * g1
    im = amp * np.sin(psi) + math.sqrt(0.5) * g2
    out = re * re + im * im
    return float(out) if size is None else out


def _exp_block_max(rng: np.random.Generator, counts: np.ndarray) -> np.ndarray:
    """Max of `counts` iid Exp(1) per entry, exactly, via inverse CDF of the
    maximum; empty blocks give -inf."""
    u = rng.random(counts.shape)
    out = np.full(counts.shape, -np.inf)
    pos = counts > 0
    with np.errstate(divide="ignore"):
        out[pos] = -np.log1p(-np.exp(np.log(u[pos]) / counts[pos]))
    return out


def _realized_l(params: SignalParams, grid: DopplerGrid, l_max: int,
                cb: np.ndarray, df0: np.ndarray) -> np.ndarray:
    """Per-bin non-centrality for each trial: rows trials, columns bins."""
    k = grid.num_bins
    offsets = np.arange(k)[None, :] - cb[:, None]
    resid = df0[:, None] - offsets * grid.bin_width_hz
    lvals = l_max_param(params) * np.sinc(resid * grid.t_per) ** 2
    lvals[np.abs(offsets) > l_max] = 0.0
    return lvals


# --- single-trial reference paths ----------------------------------------------

def _serial_search(metrics: np.ndarray, order: SearchOrder,
                   beta: float) -> tuple[int, int] | None:
    """First cell with metric > beta in visiting order, or None."""
    k, n = metrics.shape
    flat = metrics.reshape(-1) if order is SearchOrder.CODE_PHASE_FIRST else metrics.T.reshape(-1)
    hits = flat > beta
    if not hits.any():
        return None
    i = int(np.argmax(hits))
    if order is SearchOrder.CODE_PHASE_FIRST:
        return i // n, i % n
    return i % k, i // k


def _classify(stop: tuple[int, int] | None, cb: int, cp: int, m: int) -> TrialOutcome:
    if stop is None:
        return TrialOutcome(False, None, None, cb, cp, Classification.NO_STOP)
    b, ph = stop
    ok = ph == cp and abs(b - cb) <= m
    cls = Classification.DETECTION if ok else Classification.FALSE_STOP
    return TrialOutcome(True, b, ph, cb, cp, cls)


def run_metric_trial(config: SimConfig, rng: np.random.Generator) -> TrialOutcome:
    """One serial search with every cell metric drawn at metric level."""
    beta = config.policy.require_threshold()
    k, n = config.grid.num_bins, CODE_LENGTH
    cb = int(rng.integers(0, k))
    cp = int(rng.integers(0, n))
    df0 = float(rng.uniform(-config.grid.bin_width_hz / 2.0, config.grid.bin_width_hz / 2.0))
    lvals = _realized_l(config.params, config.grid, config.l_max,
                        np.array([cb]), np.array([df0]))[0]
    metrics = rng.exponential(1.0, (k, n))
    for b in range(k):
        metrics[b, cp] = draw_metric(lvals[b], rng)
    stop = _serial_search(metrics, config.policy.order, beta)
    return _classify(stop, cb, cp, config.policy.accept_half_width)


def dirichlet_kernel(x, n: int = CODE_LENGTH):
    """sin(pi x) / (n sin(pi x / n)): the exact frequency-mismatch loss of an
    n-point average; approaches sinc(x) for large n."""
    xa = np.asarray(x, dtype=np.float64)
    num = np.sin(np.pi * xa)
    den = n * np.sin(np.pi * xa / n)
    small = np.abs(den) < 1e-300
    out = np.where(small, 1.0, num / np.where(small, 1.0, den))
    return float(out) if np.ndim(x) == 0 else out


def _synth_bin(params: SignalParams, wf: WaveformConfig, rng: np.random.Generator | None,
               csig_rows: np.ndarray, f_doppler: np.ndarray, f_local: float,
               theta: np.ndarray) -> np.ndarray:
    """Received samples for one Doppler bin, downconverted and decimated to
    chip rate: rows are trials.  rng None disables noise."""
    nb, n_high = csig_rows.shape
    r = n_high // CODE_LENGTH
    lm = l_max_param(params)
    t = np.arange(n_high) / wf.f_s
    if wf.f_if == 0.0:
        # complex baseband: only the residual Doppler matters
        phase = 2.0 * np.pi * (f_doppler[:, None] - f_local) * t[None, :] + theta[:, None]
        base = math.sqrt(lm / 2.0) * csig_rows * np.exp(1j * phase)
        if rng is not None:
            scale = math.sqrt(n_high / 2.0)
            base = base + scale * (rng.standard_normal((nb, n_high))
                                   + 1j * rng.standard_normal((nb, n_high)))
        if r > 1:
            base = base.reshape(nb, CODE_LENGTH, r).mean(axis=2)
        return base
    # real IF: synthesize the passband samples, multiply down, average by r
    carrier = np.cos(2.0 * np.pi * (wf.f_if + f_doppler[:, None]) * t[None, :] + theta[:, None])
    y = math.sqrt(2.0 * lm) * csig_rows * carrier
    if rng is not None:
        y = y + math.sqrt(float(n_high)) * rng.standard_normal((nb, n_high))
    lo = np.exp(-2j * np.pi * (wf.f_if + f_local) * t)
    baseband = y * lo[None, :]
    return baseband.reshape(nb, CODE_LENGTH, r).mean(axis=2)


def _correlate_all_phases(baseband: np.ndarray, search_fft: np.ndarray) -> np.ndarray:
    """|X|^2 at every code phase: X[m] = (1/N) sum_n r[n] c[n - m]."""
    x = np.fft.ifft(np.fft.fft(baseband, axis=1) * np.conj(search_fft)[None, :], axis=1)
    return np.abs(x / CODE_LENGTH) ** 2


def _code_rows(prn: int, cp: np.ndarray, r: int) -> np.ndarray:
    """Code chips delayed by each trial's phase, sample-and-held r times."""
    chips = generate_ca_code(prn).chips.astype(np.float64)
    idx = (np.arange(CODE_LENGTH)[None, :] - cp[:, None]) % CODE_LENGTH
    rows = chips[idx]
    return np.repeat(rows, r, axis=1) if r > 1 else rows


def noiseless_metric(params: SignalParams, wf: WaveformConfig, delta_f_hz: float,
                     code_phase: int = 0) -> float:
    """Decision metric |X|^2 of the full chain without noise, at the correct
    code phase and a residual Doppler of delta_f_hz from the local frequency."""
    n_high = wf.samples_per_period(params.t_per)
    r = n_high // CODE_LENGTH
    prn = wf.prn_signal
    csig = _code_rows(prn, np.array([code_phase]), r)
    base = _synth_bin(params, wf, None, csig, np.array([float(delta_f_hz)]), 0.0,
                      np.zeros(1))
    search_fft = np.fft.fft(generate_ca_code(prn).chips.astype(np.float64))
    p = _correlate_all_phases(base, search_fft)
    return float(p[0, code_phase])


def _bin_centers(grid: DopplerGrid) -> np.ndarray:
    k = grid.num_bins
    return (np.arange(k) - (k - 1) / 2.0) * grid.bin_width_hz


def run_waveform_trial(config: SimConfig, waveform: WaveformConfig,
                       rng: np.random.Generator) -> TrialOutcome:
    """One serial search with metrics produced by the synthesized chain,
    using a fresh noise realization for every Doppler bin."""
    beta = config.policy.require_threshold()
    k, n = config.grid.num_bins, CODE_LENGTH
    n_high = waveform.samples_per_period(config.params.t_per)
    r = n_high // n
    cb = int(rng.integers(0, k))
    cp = int(rng.integers(0, n))
    df0 = float(rng.uniform(-config.grid.bin_width_hz / 2.0, config.grid.bin_width_hz / 2.0))
    theta = rng.uniform(0.0, 2.0 * math.pi, 1)
    centers = _bin_centers(config.grid)
    fd = np.array([centers[cb] + df0])
    csig = _code_rows(waveform.prn_signal, np.array([cp]), r)
    search_fft = np.fft.fft(generate_ca_code(waveform.search_prn(True)).chips.astype(np.float64))
    metrics = np.empty((k, n))
    for b in range(k):
        base = _synth_bin(config.params, waveform, rng, csig, fd, float(centers[b]), theta)
        metrics[b] = _correlate_all_phases(base, search_fft)[0]
    stop = _serial_search(metrics, config.policy.order, beta)
    return _classify(stop, cb, cp, config.policy.accept_half_width)


# --- batched recording ----------------------------------------------------------

@dataclass
class _Records:
    """Per-trial segment maxima, sufficient to replay the serial search at
    any threshold: correct bins, the correct-phase metric per bin, and the
    maxima over each bin's cells before/after the correct phase."""

    cb: np.ndarray          # (nb,)
    sig: np.ndarray         # (nb, k)
    pre: np.ndarray         # (nb, k)
    post: np.ndarray        # (nb, k)


def _record_metric_batch(rng: np.random.Generator, nb: int,
                         config: SimConfig) -> _Records:
    grid = config.grid
    k, n = grid.num_bins, CODE_LENGTH
    cb = rng.integers(0, k, nb)
    cp = rng.integers(0, n, nb)
    df0 = rng.uniform(-grid.bin_width_hz / 2.0, grid.bin_width_hz / 2.0, nb)
    lvals = _realized_l(config.params, grid, config.l_max, cb, df0)
    psi = rng.uniform(0.0, 2.0 * math.pi, (nb, k))
    g1 = rng.standard_normal((nb, k))
    g2 = rng.standard_normal((nb, k))
    amp = np.sqrt(0.5 * lvals)
    sig = ((amp * np.cos(psi) + math.sqrt(0.5) * g1) ** 2
           + (amp * np.sin(psi) + math.sqrt(0.5) * g2) ** 2)
    pre = _exp_block_max(rng, np.broadcast_to(cp[:, None], (nb, k)))
    post = _exp_block_max(rng, np.broadcast_to((n - 1 - cp)[:, None], (nb, k)))
    return _Records(cb=cb, sig=sig, pre=pre, post=post)


def _record_waveform_batch(rng: np.random.Generator, nb: int,
                           config: SimConfig) -> _Records:
    wf = config.waveform
    grid = config.grid
    k, n = grid.num_bins, CODE_LENGTH
    n_high = wf.samples_per_period(config.params.t_per)
    r = n_high // n
    cb = rng.integers(0, k, nb)
    cp = rng.integers(0, n, nb)
    df0 = rng.uniform(-grid.bin_width_hz / 2.0, grid.bin_width_hz / 2.0, nb)
    theta = rng.uniform(0.0, 2.0 * math.pi, nb)
    centers = _bin_centers(grid)
    fd = centers[cb] + df0
    csig = _code_rows(wf.prn_signal, cp, r)
    search_fft = np.fft.fft(generate_ca_code(wf.search_prn(True)).chips.astype(np.float64))
    phases = np.arange(n)[None, :]
    is_pre = phases < cp[:, None]
    is_post = phases > cp[:, None]
    sig = np.empty((nb, k))
    pre = np.empty((nb, k))
    post = np.empty((nb, k))
    rows = np.arange(nb)
    for b in range(k):
        base = _synth_bin(config.params, wf, rng, csig, fd, float(centers[b]), theta)
        p = _correlate_all_phases(base, search_fft)
        sig[:, b] = p[rows, cp]
        pre[:, b] = np.where(is_pre, p, -np.inf).max(axis=1)
        post[:, b] = np.where(is_post, p, -np.inf).max(axis=1)
    return _Records(cb=cb, sig=sig, pre=pre, post=post)


def _record_fa_batch(rng: np.random.Generator, nb: int,
                     config: SimConfig) -> np.ndarray:
    """Global metric maximum per signal-free trial (search code does not
    match the transmitted one)."""
    grid = config.grid
    k, n = grid.num_bins, CODE_LENGTH
    if config.fidelity is Fidelity.METRIC_LEVEL:
        return _exp_block_max(rng, np.full(nb, k * n))
    wf = config.waveform
    n_high = wf.samples_per_period(config.params.t_per)
    r = n_high // n
    cb = rng.integers(0, k, nb)
    cp = rng.integers(0, n, nb)
    df0 = rng.uniform(-grid.bin_width_hz / 2.0, grid.bin_width_hz / 2.0, nb)
    theta = rng.uniform(0.0, 2.0 * math.pi, nb)
    centers = _bin_centers(grid)
    fd = centers[cb] + df0
    csig = _code_rows(wf.prn_signal, cp, r)
    search_fft = np.fft.fft(generate_ca_code(wf.search_prn(False)).chips.astype(np.float64))
    gmax = np.full(nb, -np.inf)
    for b in range(k):
        base = _synth_bin(config.params, wf, rng, csig, fd, float(centers[b]), theta)
        p = _correlate_all_phases(base, search_fft)
        gmax = np.maximum(gmax, p.max(axis=1))
    return gmax


# --- threshold evaluation --------------------------------------------------------

def _detection_intervals(rec: _Records, order: SearchOrder
                         ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per (trial, bin): the threshold interval [lo, hi) over which the
    serial search stops exactly at that bin's correct-phase cell, plus the
    global metric maximum per trial."""
    neg = np.full((rec.sig.shape[0], 1), -np.inf)
    if order is SearchOrder.CODE_PHASE_FIRST:
        bin_max = np.maximum(np.maximum(rec.pre, rec.post), rec.sig)
        running = np.maximum.accumulate(bin_max, axis=1)
        before = np.concatenate([neg, running[:, :-1]], axis=1)
        lo = np.maximum(before, rec.pre)
        gmax = running[:, -1]
    elif order is SearchOrder.DOPPLER_FIRST:
        pre_all = rec.pre.max(axis=1, keepdims=True)
        running_sig = np.maximum.accumulate(rec.sig, axis=1)
        before = np.concatenate([neg, running_sig[:, :-1]], axis=1)
        lo = np.maximum(pre_all, before)
        gmax = np.maximum(np.maximum(pre_all[:, 0], running_sig[:, -1]),
                          rec.post.max(axis=1))
    else:
        raise ValueError(f"unknown search order {order!r}")
    return lo, rec.sig, gmax


def _count_detection(rec: _Records, order: SearchOrder, betas: np.ndarray,
                     k: int) -> tuple[np.ndarray, np.ndarray]:
    """Difference-array counts: correct-phase stops per (offset, beta index)
    and any-stop counts per beta index."""
    nbeta = betas.size
    hist = np.zeros((2 * k - 1, nbeta + 1), dtype=np.int64)
    stops = np.zeros(nbeta + 1, dtype=np.int64)
    lo, hi, gmax = _detection_intervals(rec, order)
    for b in range(k):
        i_lo = np.searchsorted(betas, lo[:, b], side="left")
        i_hi = np.searchsorted(betas, hi[:, b], side="left")
        valid = i_hi > i_lo
        if not valid.any():
            continue
        off_idx = (b - rec.cb[valid]) + (k - 1)
        np.add.at(hist, (off_idx, i_lo[valid]), 1)
        np.add.at(hist, (off_idx, i_hi[valid]), -1)
    i_g = np.searchsorted(betas, gmax, side="left")
    np.add.at(stops, 0, np.count_nonzero(i_g > 0))
    np.add.at(stops, i_g[i_g > 0], -1)
    return hist, stops


def _count_stops(gmax: np.ndarray, betas: np.ndarray) -> np.ndarray:
    out = np.zeros(betas.size + 1, dtype=np.int64)
    i_g = np.searchsorted(betas, gmax, side="left")
    np.add.at(out, 0, np.count_nonzero(i_g > 0))
    np.add.at(out, i_g[i_g > 0], -1)
    return out


# --- batched execution ------------------------------------------------------------

def _batch_sizes(trials: int, batch: int) -> list[int]:
    sizes = [batch] * (trials // batch)
    if trials % batch:
        sizes.append(trials % batch)
    return sizes


def _run_batches(config: SimConfig, run_tag: int, worker, workers: int):
    """Evaluate `worker(rng, nb)` over deterministic per-batch substreams and
    return the results in batch order."""
    batch = _BATCH_METRIC if config.fidelity is Fidelity.METRIC_LEVEL else _BATCH_WAVEFORM
    sizes = _batch_sizes(config.trials, batch)
    seeds = np.random.SeedSequence(entropy=(int(config.seed), run_tag)).spawn(len(sizes))

    def job(i: int):
        rng = np.random.Generator(np.random.Philox(seeds[i]))
        return worker(rng, sizes[i])

    if workers <= 1:
        return [job(i) for i in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, range(len(sizes))))


def monte_carlo_sweep(config: SimConfig, betas, workers: int = 1) -> list[McEstimate]:
    """Detection and false-alarm estimates at every threshold of an ascending
    grid, from one recording pass per run."""
    betas = np.asarray(betas, dtype=np.float64)
    if betas.size == 0:
        raise ValueError("beta grid must be non-empty")
    if betas.size > 1 and not np.all(np.diff(betas) > 0.0):
        raise ValueError("beta grid must be strictly increasing")
    k = config.grid.num_bins
    m = config.policy.accept_half_width
    order = config.policy.order
    record = (_record_metric_batch if config.fidelity is Fidelity.METRIC_LEVEL
              else _record_waveform_batch)

    def det_worker(rng, nb):
        return _count_detection(record(rng, nb, config), order, betas, k)

    def fa_worker(rng, nb):
        return _count_stops(_record_fa_batch(rng, nb, config), betas)

    hist = np.zeros((2 * k - 1, betas.size + 1), dtype=np.int64)
    stops = np.zeros(betas.size + 1, dtype=np.int64)
    for h, s in _run_batches(config, 0, det_worker, workers):
        hist += h
        stops += s
    fa = np.zeros(betas.size + 1, dtype=np.int64)
    for s in _run_batches(config, 1, fa_worker, workers):
        fa += s
    hist = np.cumsum(hist, axis=1)[:, :-1]
    stops = np.cumsum(stops)[:-1]
    fa = np.cumsum(fa)[:-1]
    offsets = np.arange(-(k - 1), k)
    accepted = np.abs(offsets) <= m
    out = []
    for j, beta in enumerate(betas):
        n_det = int(hist[accepted, j].sum())
        n_stop = int(stops[j])
        n_fa = int(fa[j])
        out.append(McEstimate(
            beta=float(beta),
            trials=config.trials,
            n_detect=n_det,
            n_false_stop=n_stop - n_det,
            n_no_stop=config.trials - n_stop,
            n_fa_stop=n_fa,
            p_det=n_det / config.trials,
            p_det_ci=wilson_interval(n_det, config.trials),
            p_fa=n_fa / config.trials,
            p_fa_ci=wilson_interval(n_fa, config.trials),
            stop_offset_counts={int(o): int(hist[i, j]) for i, o in enumerate(offsets)},
        ))
    return out


def monte_carlo(config: SimConfig, workers: int = 1) -> McEstimate:
    """Estimates at the single threshold carried by config.policy."""
    return monte_carlo_sweep(config, [config.policy.require_threshold()], workers)[0]
