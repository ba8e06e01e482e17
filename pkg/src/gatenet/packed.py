"""Word-parallel execution of Boolean circuits.

Samples are bit-transposed: feature i of W consecutive samples lives in one
W-bit unsigned word, so a single bitwise operation evaluates one gate for W
samples at once. All 16 gates lower to {AND, OR, XOR, NOT} word primitives:

    id  gate            words            id  gate            words
    0   false           0                8   nor             ~(a | b)
    1   and             a & b            9   xnor            ~(a ^ b)
    2   a-and-not-b     a & ~b           10  not-b           ~b
    3   a               a                11  a-or-not-b      a | ~b
    4   not-a-and-b     ~a & b           12  not-a           ~a
    5   b               b                13  not-a-or-b      ~a | b
    6   xor             a ^ b            14  nand            ~(a & b)
    7   or              a | b            15  true            ~0

Strictly layered circuits run with two ping-pong activation planes; general
netlists (pruned or with adder counters appended) are levelized once and run
wave by wave into a full wire plane. Padding bits in the last lane never
influence real samples (bitwise ops are per-bit independent); returned
batches have their padding re-zeroed to keep the layout canonical.
"""

from __future__ import annotations

import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import Circuit, ReadoutConfig

_WORD_DTYPES = {8: np.uint8, 16: np.uint16, 32: np.uint32, 64: np.uint64}

_WORD_OPS = {
    0: lambda a, b: np.zeros_like(a),
    1: lambda a, b: a & b,
    2: lambda a, b: a & ~b,
    3: lambda a, b: a.copy(),
    4: lambda a, b: ~a & b,
    5: lambda a, b: b.copy(),
    6: lambda a, b: a ^ b,
    7: lambda a, b: a | b,
    8: lambda a, b: ~(a | b),
    9: lambda a, b: ~(a ^ b),
    10: lambda a, b: ~b,
    11: lambda a, b: a | ~b,
    12: lambda a, b: ~a,
    13: lambda a, b: ~a | b,
    14: lambda a, b: ~(a & b),
    15: lambda a, b: np.invert(np.zeros_like(a)),
}


def _require_little_endian() -> None:
    if sys.byteorder != "little":
        raise RuntimeError("bit packing requires a little-endian host")


@dataclass
class PackedBatch:
    """Bit-transposed samples: words[i, l] holds feature i of samples l*W .. l*W+W-1.

    Bit j (LSB-first) of that word is sample l*W + j. Bits at or beyond
    sample_count in the last lane are zero.
    """

    words: np.ndarray
    sample_count: int
    word_bits: int

    @property
    def lanes(self) -> int:
        return self.words.shape[1]

    @property
    def feature_count(self) -> int:
        return self.words.shape[0]


def _pad_mask(sample_count: int, lanes: int, word_bits: int) -> np.ndarray:
    """One word per lane with 1s at valid sample bits."""
    dtype = _WORD_DTYPES[word_bits]
    full = np.invert(dtype(0))
    mask = np.full(lanes, full, dtype=dtype)
    tail = sample_count % word_bits
    if tail:
        mask[-1] = dtype((1 << tail) - 1)
    return mask


def pack(samples: np.ndarray, word_bits: int = 64) -> PackedBatch:
    """Bit-transpose a (samples, features) 0/1 matrix."""
    _require_little_endian()
    if word_bits not in _WORD_DTYPES:
        raise ValueError(f"word_bits must be one of {sorted(_WORD_DTYPES)}")
    samples = np.asarray(samples)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise ValueError("need a non-empty 2-d sample matrix")
    bits = np.ascontiguousarray(samples.T, dtype=np.uint8)
    if bits.max(initial=0) > 1:
        raise ValueError("samples must be Boolean (0/1)")
    n, f = samples.shape
    lanes = -(-n // word_bits)
    padded = np.zeros((f, lanes * word_bits), dtype=np.uint8)
    padded[:, :n] = bits
    words = np.packbits(padded, axis=1, bitorder="little").view(_WORD_DTYPES[word_bits])
    return PackedBatch(words=words, sample_count=n, word_bits=word_bits)


def unpack(batch: PackedBatch) -> np.ndarray:
    """Inverse of pack: (samples, features) uint8."""
    _require_little_endian()
    as_bytes = np.ascontiguousarray(batch.words).view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=1, bitorder="little")[:, : batch.sample_count]
    return np.ascontiguousarray(bits.T)


class _ExecPlan:
    """Pre-grouped execution schedule for one circuit (cached on the instance)."""

    def __init__(self, circuit: Circuit):
        self.num_wires = circuit.num_wires
        self.input_width = circuit.input_width
        bands = circuit.layer_slices()
        self.layered = self._try_layered(circuit, bands)
        if self.layered is None:
            self.waves = self._levelize(circuit)

    @staticmethod
    def _try_layered(circuit: Circuit, bands) -> list | None:
        """Per-layer schedule when every band reads only the band before it."""
        base = 0  # wire id where the previous band starts
        width_in = circuit.input_width
        layers = []
        prev_width = width_in
        for li, sl in enumerate(bands):
            src = circuit.sources[sl].astype(np.int64)
            if src.size and (src.min() < base or src.max() >= base + prev_width):
                return None
            local = (src - base).astype(np.int32)
            ops = circuit.opcodes[sl]
            groups = []
            for op in np.unique(ops):
                idx = np.nonzero(ops == op)[0].astype(np.int32)
                groups.append((int(op), idx, local[idx, 0], local[idx, 1]))
            layers.append((sl.stop - sl.start, groups))
            base = width_in if li == 0 else base + prev_width
            prev_width = sl.stop - sl.start
        # outputs must live in the final band for the two-plane fast path
        last_base = base
        out = circuit.output_wires.astype(np.int64)
        if out.min(initial=last_base) < last_base:
            return None
        self_outputs = (out - last_base).astype(np.int32)
        return [layers, self_outputs]

    @staticmethod
    def _levelize(circuit: Circuit) -> list:
        """Group gates into dependency waves, then by opcode inside each wave."""
        if circuit.num_gates == 0:
            return []
        w_in = circuit.input_width
        level = np.zeros(circuit.num_wires, dtype=np.int32)
        src = circuit.sources
        lvl_gate = np.empty(circuit.num_gates, dtype=np.int32)
        for g in range(circuit.num_gates):
            lv = 1 + max(level[src[g, 0]], level[src[g, 1]])
            level[w_in + g] = lv
            lvl_gate[g] = lv
        waves = []
        order = np.argsort(lvl_gate, kind="stable")
        bounds = np.searchsorted(lvl_gate[order], np.arange(1, lvl_gate.max() + 2))
        start = 0
        for stop in bounds:
            wave = order[start:stop]
            start = stop
            if not len(wave):
                continue
            ops = circuit.opcodes[wave]
            for op in np.unique(ops):
                sel = wave[ops == op]
                waves.append(
                    (
                        int(op),
                        (w_in + sel).astype(np.int64),
                        src[sel, 0].astype(np.int64),
                        src[sel, 1].astype(np.int64),
                    )
                )
        return waves


def _plan_for(circuit: Circuit) -> _ExecPlan:
    plan = getattr(circuit, "_exec_plan", None)
    if plan is None:
        plan = _ExecPlan(circuit)
        circuit._exec_plan = plan
    return plan


def _execute_serial(circuit: Circuit, words: np.ndarray) -> np.ndarray:
    """Output-wire rows for one block of word lanes."""
    plan = _plan_for(circuit)
    if plan.layered is not None:
        layers, out_local = plan.layered
        prev = words
        for width, groups in layers:
            out = np.empty((width, words.shape[1]), dtype=words.dtype)
            for op, idx, s1, s2 in groups:
                out[idx] = _WORD_OPS[op](prev[s1], prev[s2])
            prev = out
        return prev[out_local]
    wires = np.empty((plan.num_wires, words.shape[1]), dtype=words.dtype)
    wires[: plan.input_width] = words
    for op, dest, s1, s2 in plan.waves:
        wires[dest] = _WORD_OPS[op](wires[s1], wires[s2])
    return wires[circuit.output_wires.astype(np.int64)]


def execute_packed(circuit: Circuit, batch: PackedBatch, threads: int = 1) -> PackedBatch:
    """Evaluate the circuit; returns the output wires as a PackedBatch.

    Results are identical for any thread count (threads split whole word
    lanes, which are independent).
    """
    if batch.feature_count != circuit.input_width:
        raise ValueError(
            f"batch has {batch.feature_count} features, circuit wants {circuit.input_width}"
        )
    lanes = batch.lanes
    if threads > 1 and lanes > 1:
        chunks = np.array_split(np.arange(lanes), min(threads, lanes))
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(
                pool.map(
                    lambda c: _execute_serial(circuit, np.ascontiguousarray(batch.words[:, c])),
                    chunks,
                )
            )
        out = np.concatenate(parts, axis=1)
    else:
        out = _execute_serial(circuit, batch.words)
    out &= _pad_mask(batch.sample_count, lanes, batch.word_bits)
    return PackedBatch(words=out, sample_count=batch.sample_count, word_bits=batch.word_bits)


def popcount_scores(outputs: PackedBatch, readout: ReadoutConfig) -> np.ndarray:
    """Set-bit counts per contiguous output group: (samples, k) int64."""
    n = outputs.feature_count
    if n % readout.k:
        raise ValueError(f"output width {n} not divisible by k={readout.k}")
    group = n // readout.k
    counts = np.empty((readout.k, outputs.sample_count), dtype=np.int64)
    # unpack in lane chunks to bound the bit matrix at ~32 MB
    step = max(1, (1 << 25) // (outputs.word_bits * max(n, 1)))
    done = 0
    for lo in range(0, outputs.lanes, step):
        block = np.ascontiguousarray(outputs.words[:, lo : lo + step]).view(np.uint8)
        bits = np.unpackbits(block, axis=1, bitorder="little")
        take = min(bits.shape[1], outputs.sample_count - done)
        counts[:, done : done + take] = (
            bits[:, :take].reshape(readout.k, group, take).sum(axis=1, dtype=np.int64)
        )
        done += take
    return counts.T


def _counter_scores(outputs: PackedBatch, circuit: Circuit) -> np.ndarray:
    """Binary-decode per-class counter bits: (samples, k) int64."""
    k = circuit.readout.k
    m = len(circuit.counter_bits[0])
    bits = unpack(outputs)  # (samples, k*m), LSB-first per class
    weights = (1 << np.arange(m, dtype=np.int64))
    return bits.reshape(-1, k, m).astype(np.int64) @ weights


def circuit_scores(
    circuit: Circuit,
    samples,
    threads: int = 1,
    word_bits: int = 64,
) -> np.ndarray:
    """(samples, k) integer class scores for raw 0/1 samples or a PackedBatch."""
    batch = samples if isinstance(samples, PackedBatch) else pack(samples, word_bits)
    outputs = execute_packed(circuit, batch, threads=threads)
    if circuit.counter_bits is not None:
        return _counter_scores(outputs, circuit)
    return popcount_scores(outputs, circuit.readout)


def build_adder_aggregation(circuit: Circuit) -> Circuit:
    """Append XOR/AND counter chains so class counts come out as binary wires.

    Each class group of G output bits feeds a ripple counter of
    ceil(log2(G+1)) bits, built one increment at a time: adding bit b to
    counter (c_t) is c_t' = c_t XOR carry_t, carry_{t+1} = c_t AND carry_t
    with carry_0 = b. A new top bit appears only once the running maximum
    reaches the counter's capacity. The result's output wires are the
    concatenated per-class counter bits (LSB first) and its semantics equal
    popcount readout exactly.
    """
    if circuit.counter_bits is not None:
        return circuit
    gsz = circuit.group_size
    if gsz == 0:
        raise ValueError("circuit has no output wires to aggregate")
    new_src: list[tuple[int, int]] = []
    new_ops: list[int] = []
    next_wire = circuit.num_wires

    def add_gate(op: int, s1: int, s2: int) -> int:
        nonlocal next_wire
        new_src.append((s1, s2))
        new_ops.append(op)
        wire = next_wire
        next_wire += 1
        return wire

    xor, and_ = 6, 1
    counters = []
    for c in range(circuit.readout.k):
        group = circuit.output_wires[c * gsz : (c + 1) * gsz]
        counter = [int(group[0])]
        for i in range(2, gsz + 1):
            carry = int(group[i - 1])
            grown = i >= (1 << len(counter))
            nxt = []
            for t, cw in enumerate(counter):
                nxt.append(add_gate(xor, cw, carry))
                if t < len(counter) - 1 or grown:
                    carry = add_gate(and_, cw, carry)
            if grown:
                nxt.append(carry)
            counter = nxt
        counters.append(np.array(counter, dtype=np.uint32))
    max_probs = circuit.max_probs
    if max_probs is not None:
        max_probs = np.concatenate([max_probs, np.ones(len(new_ops))])
    return Circuit(
        input_width=circuit.input_width,
        layer_sizes=circuit.layer_sizes + (len(new_ops),),
        sources=np.concatenate(
            [circuit.sources, np.array(new_src, dtype=np.uint32).reshape(-1, 2)]
        ),
        opcodes=np.concatenate([circuit.opcodes, np.array(new_ops, dtype=np.uint8)]),
        output_wires=np.concatenate(counters),
        readout=circuit.readout,
        seed=circuit.seed,
        max_probs=max_probs,
        counter_bits=tuple(counters),
    )


def _cpu_model() -> str:
    try:
        with open("/proc/cpuinfo") as fh:
            for line in fh:
                if line.lower().startswith("model name"):
                    return line.split(":", 1)[1].strip()
    except OSError:
        pass
    import platform

    return platform.processor() or platform.machine()


def benchmark(
    circuit: Circuit,
    batch: PackedBatch,
    repetitions: int = 5,
    threads_list: tuple[int, ...] = (1,),
    cpu_ghz: float | None = None,
) -> dict:
    """Median-of-repetitions inference throughput (execution plus readout)."""
    report = {
        "samples": batch.sample_count,
        "lanes": batch.lanes,
        "word_bits": batch.word_bits,
        "gates": circuit.num_gates,
        "cpu": _cpu_model(),
        "per_thread": {},
    }
    for threads in threads_list:
        circuit_scores(circuit, batch, threads=threads)  # warmup + plan build
        times = []
        for _ in range(repetitions):
            t0 = time.perf_counter()
            circuit_scores(circuit, batch, threads=threads)
            times.append(time.perf_counter() - t0)
        med = float(np.median(times))
        samples_per_sec = batch.sample_count / med
        entry = {
            "seconds_median": med,
            "samples_per_sec": samples_per_sec,
            "gate_ops_per_sec": samples_per_sec * circuit.num_gates,
        }
        if cpu_ghz:
            word_ops = circuit.num_gates * batch.lanes
            entry["word_ops_per_cycle"] = word_ops / (med * cpu_ghz * 1e9)
        report["per_thread"][threads] = entry
    return report
