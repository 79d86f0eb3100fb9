"""Frame-loop driver: configuration, single runs, replication, and metrics.

run_once executes warmup_frames (discarded) then measure_frames of the
configured scheme and collects per-frame series; run_replicated aggregates
independent replications into means with 95% normal-approximation intervals.
Per-replication RNG streams are spawned from the master seed, so results are
deterministic and independent of execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytics import c_of
from .channel import RateThreshold
from .mobility import build_geometry
from .protocol import (IDLE, RELAY_TX, SOURCE_TX, BaselineFixed,
                       BaselineMobile, OdwfFixed, OdwfMobile)

FIXED = "fixed"
MOBILE = "mobile"
ODWF = "odwf"
BASELINE = "baseline"

_PHASE_CODE = {SOURCE_TX: 0, RELAY_TX: 1, IDLE: 2}


@dataclass(frozen=True)
class SystemConfig:
    scenario: str
    scheme: str
    K: int
    N: int
    p: float
    beta: float
    alpha: float = 4.0          # mobile only
    M: int = 5                  # mobile only
    q: float = 0.1              # mobile only
    R: float = 1.0              # mobile only
    warmup_frames: int | None = None   # None: scaled to the predicted delay
    measure_frames: int = 10_000
    replications: int = 1
    seed: int = 0
    buffer_cap: int = 100_000

    def __post_init__(self):
        if self.scenario not in (FIXED, MOBILE):
            raise ValueError(f"scenario must be {FIXED!r} or {MOBILE!r}, "
                             f"got {self.scenario!r}")
        if self.scheme not in (ODWF, BASELINE):
            raise ValueError(f"scheme must be {ODWF!r} or {BASELINE!r}, "
                             f"got {self.scheme!r}")
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if self.p <= 0.0:
            raise ValueError(f"p must be > 0, got {self.p}")
        if self.beta < 1.0:
            raise ValueError(f"beta must be >= 1, got {self.beta}")
        if self.M < 2:
            raise ValueError(f"M must be >= 2, got {self.M}")
        if not 0.0 <= self.q <= 0.5:
            raise ValueError(f"q must be in [0, 1/2], got {self.q}")
        if self.scenario == MOBILE:
            if self.alpha <= 0.0:
                raise ValueError(f"alpha must be > 0, got {self.alpha}")
            if self.R <= 0.0:
                raise ValueError(f"R must be > 0, got {self.R}")
        if self.warmup_frames is not None and self.warmup_frames < 0:
            raise ValueError(f"warmup_frames must be >= 0, got {self.warmup_frames}")
        if self.measure_frames < 1:
            raise ValueError(f"measure_frames must be >= 1, got {self.measure_frames}")
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.buffer_cap < 1:
            raise ValueError(f"buffer_cap must be >= 1, got {self.buffer_cap}")


@dataclass
class MetricsTrace:
    """Per-frame series over the measurement window of one run."""

    rate: float                      # bits per delivered packet
    delivered_per_frame: np.ndarray  # packet counts, int64
    per_packet_delay: np.ndarray     # delivery frame - creation frame, int64
    occupancy_fraction: np.ndarray   # (frames, series): per subcarrier for
                                     # fixed relays, one column for mobile
    in_network_per_frame: np.ndarray
    phase_per_frame: np.ndarray      # int8 codes, see _PHASE_CODE
    undelivered_at_end: int

    @property
    def measure_frames(self) -> int:
        return self.delivered_per_frame.size

    @property
    def bits_delivered_per_frame(self) -> np.ndarray:
        return self.delivered_per_frame * self.rate

    @property
    def phase_counts(self) -> dict:
        counts = np.bincount(self.phase_per_frame, minlength=3)
        return {SOURCE_TX: int(counts[0]), RELAY_TX: int(counts[1]),
                IDLE: int(counts[2])}


@dataclass(frozen=True)
class RunSummary:
    """Replication means with 95% half-widths (0 for a single replication).

    mean_delay is None when no replication delivered a packet: an undefined
    delay is reported as absent, never as 0.
    """

    mean_throughput: float
    throughput_ci95: float
    mean_delay: float | None
    delay_ci95: float | None
    occupancy: float
    occupancy_ci95: float
    p_rd_hat: float
    p_rd_ci95: float
    p_sr_hat: float
    p_sr_ci95: float
    undelivered_at_end: float
    replications: int


def default_warmup(cfg: SystemConfig) -> int:
    """Warm-up long enough to reach stationarity: 10x the predicted delay
    scale of the scenario (buffering delay 2*c*beta^2/K for fixed relays,
    max(beta^(4/alpha)/(K*q), 1/q) for mobile), floored at 10^3 frames.
    """
    if cfg.scenario == FIXED:
        delay_scale = 2.0 * c_of(cfg.N) * cfg.beta ** 2 / cfg.K
        return max(10 * math.ceil(delay_scale), 1000)
    terms = [1000]
    if cfg.q > 0.0:
        delay_scale = cfg.beta ** (4.0 / cfg.alpha) / (cfg.K * cfg.q)
        terms.append(10 * math.ceil(delay_scale))
        terms.append(math.ceil(10.0 / cfg.q))
    return max(terms)


def resolve_warmup(cfg: SystemConfig) -> int:
    return cfg.warmup_frames if cfg.warmup_frames is not None else default_warmup(cfg)


def build_protocol(cfg: SystemConfig, rng: np.random.Generator):
    if cfg.scenario == FIXED:
        threshold = RateThreshold.for_fixed(cfg.p, cfg.beta)
        if cfg.scheme == ODWF:
            return OdwfFixed(cfg.K, cfg.N, threshold, rng, cfg.buffer_cap)
        return BaselineFixed(cfg.K, cfg.N, threshold, rng)
    geom = build_geometry(cfg.R, cfg.M)
    threshold = RateThreshold.for_mobile(cfg.N, cfg.beta)
    if cfg.scheme == ODWF:
        return OdwfMobile(cfg.K, geom, threshold, cfg.p, cfg.alpha, cfg.q, rng,
                          cfg.buffer_cap)
    return BaselineMobile(cfg.K, geom, threshold, cfg.p, cfg.alpha, cfg.q, rng)


def run_once(cfg: SystemConfig, rng: np.random.Generator) -> MetricsTrace:
    """One warm-up plus measurement pass. Packets created during warm-up but
    delivered in the window count toward delay with their true creation frame.
    """
    proto = build_protocol(cfg, rng)
    warmup = resolve_warmup(cfg)
    for frame in range(warmup):
        proto.step(frame)
    frames = cfg.measure_frames
    delivered = np.zeros(frames, dtype=np.int64)
    phase = np.empty(frames, dtype=np.int8)
    in_network = np.empty(frames, dtype=np.int64)
    occupancy = np.empty((frames, cfg.N if cfg.scenario == FIXED else 1))
    delays = []
    for i in range(frames):
        out = proto.step(warmup + i)
        if out.delivered:
            delivered[i] = len(out.delivered)
            for pkt in out.delivered:
                delays.append(out.frame - pkt.created_frame)
        phase[i] = _PHASE_CODE[out.kind]
        occupancy[i] = proto.occupied_fraction()
        in_network[i] = proto.in_network()
    return MetricsTrace(
        rate=proto.rate,
        delivered_per_frame=delivered,
        per_packet_delay=np.asarray(delays, dtype=np.int64),
        occupancy_fraction=occupancy,
        in_network_per_frame=in_network,
        phase_per_frame=phase,
        undelivered_at_end=proto.in_network(),
    )


def measure_throughput(trace: MetricsTrace) -> float:
    """Mean delivered bits per frame, exactly rate * count / frames."""
    return trace.rate * int(trace.delivered_per_frame.sum()) / trace.measure_frames


def measure_delay(trace: MetricsTrace) -> float | None:
    """Mean per-packet delay in frames; None when nothing was delivered."""
    if trace.per_packet_delay.size == 0:
        return None
    return float(trace.per_packet_delay.mean())


def _mean_ci(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, 0.0
    return mean, float(1.96 * arr.std(ddof=1) / math.sqrt(arr.size))


def summarize(traces: list) -> RunSummary:
    throughput, throughput_ci = _mean_ci([measure_throughput(t) for t in traces])
    delay_means = [measure_delay(t) for t in traces]
    delay_means = [d for d in delay_means if d is not None]
    if delay_means:
        delay, delay_ci = _mean_ci(delay_means)
    else:
        delay, delay_ci = None, None
    occupancy, occupancy_ci = _mean_ci(
        [float(t.occupancy_fraction.mean()) for t in traces])
    counts = [t.phase_counts for t in traces]
    p_rd, p_rd_ci = _mean_ci(
        [c[RELAY_TX] / t.measure_frames for c, t in zip(counts, traces)])
    p_sr, p_sr_ci = _mean_ci(
        [c[SOURCE_TX] / t.measure_frames for c, t in zip(counts, traces)])
    return RunSummary(
        mean_throughput=throughput,
        throughput_ci95=throughput_ci,
        mean_delay=delay,
        delay_ci95=delay_ci,
        occupancy=occupancy,
        occupancy_ci95=occupancy_ci,
        p_rd_hat=p_rd,
        p_rd_ci95=p_rd_ci,
        p_sr_hat=p_sr,
        p_sr_ci95=p_sr_ci,
        undelivered_at_end=float(np.mean([t.undelivered_at_end for t in traces])),
        replications=len(traces),
    )


def run_replicated(cfg: SystemConfig) -> RunSummary:
    """Deterministic given cfg.seed; one spawned RNG stream per replication."""
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.replications)
    traces = [run_once(cfg, np.random.Generator(np.random.PCG64(s)))
              for s in streams]
    return summarize(traces)
