"""Monte Carlo frame-potential estimation over persisted trace samples.

Sampling draws pairs (U, V) from an ensemble, evaluates
t = Tr(U^dag V) = 2^n * amplitude(trace circuit), and stores the complex
trace. One store serves every k: F^(k) is just the mean of |t|^{2k}.

Reproducibility contract: sample i is a pure function of
(master_seed, i). Its rng stream draws U first, then V, via the ensemble
generators. Aggregation is in sample-index order and work is split into
fixed-size micro-batches, so results are identical for any worker count.

Fixed-topology families (parallel, hardware-efficient) share one network
structure across samples, so micro-batches are contracted as a single
stacked network; the local family redraws its topology per sample and is
contracted one by one.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tensornet
from .circuit import (
    EnsembleSpec,
    Entangler,
    Family,
    HaarMode,
    adjoint,
    build_instance,
    build_trace_circuit,
)
from .tensornet import DEFAULT_WIDTH_CAP, Tensor

STORE_VERSION = 1
# Keep the largest stacked tensor near 2^24 complex doubles (~256 MiB).
_BATCH_BUDGET_LOG2 = 24
_MAX_MICRO_BATCH = 4096


def sample_seed(master_seed: int, index: int) -> int:
    """Stable 64-bit per-sample seed derived from (master_seed, index)."""
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def sample_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(sample_seed(master_seed, index))


@dataclass(frozen=True)
class TraceSample:
    index: int
    seed: int
    trace: complex


@dataclass
class TraceSampleStore:
    spec: EnsembleSpec
    master_seed: int
    samples: list[TraceSample] = field(default_factory=list)
    suspect: bool = False

    def __len__(self):
        return len(self.samples)

    def traces(self) -> np.ndarray:
        return np.array([s.trace for s in self.samples], dtype=complex)

    def append(self, sample: TraceSample):
        if sample.index != len(self.samples):
            raise ValueError("sample indices must be contiguous from 0")
        if abs(sample.trace) > 2**self.spec.n * (1 + 1e-9):
            raise ValueError("|trace| exceeds the 2^n bound")
        self.samples.append(sample)


@dataclass(frozen=True)
class FramePotentialEstimate:
    k: int
    value: float
    std_error: float
    sample_count: int
    rel_dev: float


@dataclass(frozen=True)
class TerminationPolicy:
    """Adaptive stopping for trace sampling.

    Sampling proceeds in batches of ``min_samples``. After each batch it
    stops once the monitored F^(k) sits confidently above k! (by
    ``confidence_multiplier`` standard errors), unless the estimate is
    still below k! or below a lower-depth reference value, in which case
    it keeps sampling to steer away from unphysical results, up to
    ``max_samples`` or the wall-clock budget.
    """

    min_samples: int = 1000
    max_samples: int = 100_000
    confidence_multiplier: float = 3.0
    wall_clock_budget: float | None = None
    reference_estimates: dict[int, float] | None = None
    monitor_k: int = 2

    def __post_init__(self):
        if self.min_samples < 1 or self.min_samples > self.max_samples:
            raise ValueError("need 1 <= min_samples <= max_samples")
        if self.confidence_multiplier <= 0:
            raise ValueError("confidence multiplier must be positive")
        if self.monitor_k < 1:
            raise ValueError("monitor_k must be >= 1")


def frame_potential(store: TraceSampleStore, k: int) -> FramePotentialEstimate:
    """Mean of |t|^{2k} with its standard error, in sample-index order."""
    if len(store) == 0:
        raise ValueError("cannot estimate from an empty store")
    if k < 1:
        raise ValueError("k must be >= 1")
    vals = np.abs(store.traces()) ** (2 * k)
    n = vals.size
    value = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    kfac = float(math.factorial(k))
    return FramePotentialEstimate(
        k=k, value=value, std_error=se, sample_count=n, rel_dev=(value - kfac) / kfac
    )


@dataclass(frozen=True)
class EpsilonBound:
    """epsilon_max certificate; undefined when the estimate sits below k!."""

    epsilon: float | None
    status: str  # "ok" or "statistically_zero"


def epsilon_max(est: FramePotentialEstimate, n: int, q: int = 2) -> EpsilonBound:
    """d^k * sqrt(F - k!) with d = q^n; flags non-positive deviations."""
    deviation = est.value - math.factorial(est.k)
    if deviation < 0:
        return EpsilonBound(None, "statistically_zero")
    return EpsilonBound(float(q**n) ** est.k * math.sqrt(deviation), "ok")


class _FixedTopologyEvaluator:
    """Batched trace evaluation for ensembles with a constant network shape.

    The network structure, elimination order, and the positions of the
    per-sample gate tensors are computed once from a throwaway instance;
    each micro-batch then only fills stacked data arrays and contracts.
    """

    def __init__(self, spec: EnsembleSpec, width_cap: int):
        self.spec = spec
        self.width_cap = width_cap
        probe = np.random.default_rng(0)
        u = build_instance(spec, probe)
        v = build_instance(spec, probe)
        tc = build_trace_circuit(u, v)
        net = tensornet.build_network(tc, dense_rotations=True)
        self.order = tensornet.order_indices(net)
        if self.order.width > width_cap:
            raise tensornet.MemoryBoundError(
                f"memory bound: trace network width {self.order.width} "
                f"exceeds cap {width_cap}"
            )
        n2 = tc.n
        gate_count = len(v.gates) + len(u.gates)
        # build_network appends tensors as: 2n input boundaries, 2n wall
        # gates, the V then adjoint(U) gates, 2n wall gates, 2n output
        # boundaries. Only the middle block varies across samples.
        first = 2 * n2
        self.slot_range = (first, first + gate_count)
        self.template = net
        self.micro_batch = min(
            _MAX_MICRO_BATCH, 2 ** max(0, _BATCH_BUDGET_LOG2 - self.order.width)
        )

    def _sample_gate_data(self, master_seed: int, index: int) -> list[np.ndarray]:
        rng = sample_rng(master_seed, index)
        u = build_instance(self.spec, rng)
        v = build_instance(self.spec, rng)
        gates = list(v.gates) + list(adjoint(u).gates)
        return [tensornet.gate_tensor_data(g, dense_rotations=True) for g in gates]

    def evaluate(self, master_seed: int, start: int, stop: int) -> np.ndarray:
        out = np.empty(stop - start, dtype=complex)
        lo, hi = self.slot_range
        for base in range(start, stop, self.micro_batch):
            top = min(base + self.micro_batch, stop)
            b = top - base
            per_sample = [self._sample_gate_data(master_seed, i) for i in range(base, top)]
            tensors: list[Tensor] = []
            for tid, t in enumerate(self.template.tensors):
                if lo <= tid < hi:
                    stacked = np.stack([per_sample[i][tid - lo] for i in range(b)])
                    tensors.append(Tensor(t.labels, stacked))
                else:
                    tensors.append(t)
            amps = tensornet.contract_amplitudes_batch(
                tensors, self.template.labels, self.order, self.width_cap
            )
            out[base - start : top - start] = amps
        return out * 2.0**self.spec.n


class _PerSampleEvaluator:
    """One network per sample, for topologies that change with the draw."""

    def __init__(self, spec: EnsembleSpec, width_cap: int):
        self.spec = spec
        self.width_cap = width_cap
        self.micro_batch = 256  # bookkeeping granularity only
        # refuse up front if even a representative draw is too wide
        probe_net = self._network(np.random.default_rng(0))
        probe_order = tensornet.order_indices(probe_net)
        if probe_order.width > width_cap:
            raise tensornet.MemoryBoundError(
                f"memory bound: trace network width {probe_order.width} "
                f"exceeds cap {width_cap}"
            )

    def _network(self, rng: np.random.Generator) -> tensornet.TensorNetwork:
        u = build_instance(self.spec, rng)
        v = build_instance(self.spec, rng)
        return tensornet.build_network(build_trace_circuit(u, v))

    def evaluate(self, master_seed: int, start: int, stop: int) -> np.ndarray:
        out = np.empty(stop - start, dtype=complex)
        for i in range(start, stop):
            net = self._network(sample_rng(master_seed, i))
            order = tensornet.order_indices(net)
            out[i - start] = tensornet.contract_amplitude(net, order, self.width_cap)
        return out * 2.0**self.spec.n


def _make_evaluator(spec: EnsembleSpec, width_cap: int):
    if spec.family == Family.LOCAL:
        return _PerSampleEvaluator(spec, width_cap)
    return _FixedTopologyEvaluator(spec, width_cap)


_worker_state: dict = {}


def _worker_init(spec: EnsembleSpec, width_cap: int):
    _worker_state["evaluator"] = _make_evaluator(spec, width_cap)


def _worker_run(args):
    master_seed, start, stop = args
    return start, _worker_state["evaluator"].evaluate(master_seed, start, stop)


def sample_traces(
    spec: EnsembleSpec,
    policy: TerminationPolicy,
    master_seed: int,
    width_cap: int = DEFAULT_WIDTH_CAP,
    workers: int = 1,
    micro_batch: int | None = None,
) -> TraceSampleStore:
    """Sample traces until the termination policy says stop.

    Raises MemoryBoundError before any sampling if the trace network is too
    wide for the cap. The store is flagged suspect when the sampling budget
    runs out while the monitored estimate is still below k!.

    Work is always split at fixed micro-batch boundaries (``micro_batch``
    samples, default chosen from the contraction width), whether it runs
    inline or on a worker pool, so every float in the result is identical
    for any worker count.
    """
    evaluator = _make_evaluator(spec, width_cap)
    mb = micro_batch if micro_batch is not None else evaluator.micro_batch
    if mb < 1:
        raise ValueError("micro_batch must be positive")
    store = TraceSampleStore(spec=spec, master_seed=master_seed)
    kfac = float(math.factorial(policy.monitor_k))
    reference = None
    if policy.reference_estimates:
        reference = policy.reference_estimates.get(policy.monitor_k)
    started = time.monotonic()

    pool = None
    try:
        if workers > 1:
            pool = ProcessPoolExecutor(
                max_workers=workers,
                initializer=_worker_init,
                initargs=(spec, width_cap),
            )
        while True:
            base = len(store)
            batch = min(policy.min_samples, policy.max_samples - base)
            traces = _run_batch(evaluator, pool, master_seed, base, base + batch, mb)
            for j, t in enumerate(traces):
                idx = base + j
                store.append(TraceSample(idx, sample_seed(master_seed, idx), complex(t)))
            est = frame_potential(store, policy.monitor_k)
            out_of_time = (
                policy.wall_clock_budget is not None
                and time.monotonic() - started > policy.wall_clock_budget
            )
            if len(store) >= policy.max_samples or out_of_time:
                store.suspect = est.value < kfac
                break
            if len(store) < policy.min_samples:
                continue
            unphysical = est.value < kfac or (
                reference is not None and est.value < reference
            )
            if not unphysical and est.value > kfac + policy.confidence_multiplier * est.std_error:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return store


def _run_batch(evaluator, pool, master_seed: int, start: int, stop: int, mb: int) -> np.ndarray:
    if start == stop:
        return np.empty(0, dtype=complex)
    # micro-batch edges depend on the sample index alone, never on the
    # worker count, and each edge is evaluated as one contraction stack
    edges = [(b, min(b + mb, stop)) for b in range(start, stop, mb)]
    if pool is None:
        return np.concatenate([evaluator.evaluate(master_seed, a, b) for a, b in edges])
    parts = dict(pool.map(_worker_run, [(master_seed, a, b) for a, b in edges]))
    return np.concatenate([parts[a] for a, _ in edges])


def store_filename(spec: EnsembleSpec) -> str:
    ent = spec.entangler.value if spec.entangler else None
    tail = f"_{ent}" if ent else ""
    return f"traces_{spec.family.value}_n{spec.n}_l{spec.l}{tail}.csv"


def save_store(store: TraceSampleStore, path) -> None:
    spec = store.spec
    ent = spec.entangler.value if spec.entangler else "-"
    lines = [
        f"# ensemble={spec.family.value} n={spec.n} l={spec.l} q={spec.q} "
        f"entangler={ent} haar={spec.haar_mode.value} "
        f"master_seed={store.master_seed} version={STORE_VERSION}"
    ]
    if store.suspect:
        lines.append("# status=suspect")
    lines.append("index,seed,re,im")
    for s in store.samples:
        lines.append(f"{s.index},{s.seed},{s.trace.real!r},{s.trace.imag!r}")
    Path(path).write_text("\n".join(lines) + "\n")


class StoreFormatError(ValueError):
    """Malformed store file; the message names the offending line."""


def load_store(path) -> TraceSampleStore:
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# ensemble="):
        raise StoreFormatError(f"{path}:1: missing '# ensemble=' header")
    meta = {}
    for token in lines[0][2:].split():
        key, _, value = token.partition("=")
        meta[key] = value
    try:
        family = Family(meta["ensemble"])
        ent = None if meta.get("entangler", "-") == "-" else Entangler(meta["entangler"])
        spec = EnsembleSpec(
            family=family,
            n=int(meta["n"]),
            l=int(meta["l"]),
            q=int(meta.get("q", 2)),
            entangler=ent,
            haar_mode=HaarMode(meta.get("haar", "ginibre_qr")),
        )
        master_seed = int(meta["master_seed"])
        version = int(meta.get("version", "0"))
    except (KeyError, ValueError) as exc:
        raise StoreFormatError(f"{path}:1: bad header ({exc})") from exc
    if version != STORE_VERSION:
        raise StoreFormatError(f"{path}:1: unsupported version {version}")
    store = TraceSampleStore(spec=spec, master_seed=master_seed)
    row = 2
    if row <= len(lines) and lines[row - 1] == "# status=suspect":
        store.suspect = True
        row += 1
    if row > len(lines) or lines[row - 1] != "index,seed,re,im":
        raise StoreFormatError(f"{path}:{row}: expected 'index,seed,re,im' column header")
    for ln in lines[row:]:
        row += 1
        if not ln:
            continue
        parts = ln.split(",")
        if len(parts) != 4:
            raise StoreFormatError(f"{path}:{row}: expected 4 comma-separated fields")
        try:
            sample = TraceSample(
                int(parts[0]), int(parts[1]), complex(float(parts[2]), float(parts[3]))
            )
        except ValueError as exc:
            raise StoreFormatError(f"{path}:{row}: {exc}") from exc
        try:
            store.append(sample)
        except ValueError as exc:
            raise StoreFormatError(f"{path}:{row}: {exc}") from exc
    return store


def rederive_trace(store: TraceSampleStore, index: int, width_cap: int = DEFAULT_WIDTH_CAP) -> complex:
    """Recompute one sample's trace from (master_seed, index) alone."""
    evaluator = _make_evaluator(store.spec, width_cap)
    return complex(evaluator.evaluate(store.master_seed, index, index + 1)[0])
