"""Noisy statevector simulation by stochastic trajectories.

Each shot evolves its own pure state: after every gate, depolarizing noise
may insert a random Pauli, and each participating qubit may undergo an
amplitude-damping jump (probability proportional to its excited-state
population, the standard Monte-Carlo wavefunction rule, so the trajectory
ensemble reproduces the analytic channel) followed by a pure-dephasing Z
flip.  Shots are batched per 256-shot block into a (rows, 2^n) array and
all randomness comes from counter-keyed substreams, so results are
byte-identical regardless of thread count or shot budget.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from math import exp, sqrt
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .circuit import BoundCircuit, Gate
from .errors import InvalidConfig, ParseError, TooManyQubits
from .pboly import BoolPoly, Var

# Shots per random-stream block; compatibility constant, do not change.
SHOT_BLOCK = 256

# Max amplitudes simulated at once (~128 MB of complex128).
_AMP_BUDGET = 1 << 23

_MAX_QUBITS = 24

Seed = Union[int, Sequence[int]]

_SQRT_HALF = 1.0 / np.sqrt(2.0)


def _seed_tuple(seed: Seed) -> Tuple[int, ...]:
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(s) for s in seed)


class NoiseModel:
    """Homogeneous-qubit noise description.

    `p1`/`p2` are depolarizing probabilities per single-qubit gate / CNOT;
    `t1_us`, `t2_us` are relaxation and dephasing times in microseconds
    (t2 <= 2*t1); `dur1_ns`, `dur2_ns` are gate durations in nanoseconds.
    `scale` multiplies every noise probability, so scale 0 is the ideal
    device.  `gate_noise_on` and `decoherence_on` mask the two families
    independently.  Defaults are artifact calibration, order-of-magnitude
    typical for a small transmon device.
    """

    __slots__ = ("p1", "p2", "t1_us", "t2_us", "dur1_ns", "dur2_ns",
                 "scale", "gate_noise_on", "decoherence_on")

    def __init__(self, p1: float = 0.002, p2: float = 0.025,
                 t1_us: float = 50.0, t2_us: float = 60.0,
                 dur1_ns: float = 100.0, dur2_ns: float = 300.0,
                 scale: float = 1.0, gate_noise_on: bool = True,
                 decoherence_on: bool = True):
        if not 0.0 <= p1 <= 1.0 or not 0.0 <= p2 <= 1.0:
            raise InvalidConfig(f"depolarizing probabilities out of [0,1]: {p1}, {p2}")
        if not 0.0 <= scale <= 1.0:
            raise InvalidConfig(f"noise scale must lie in [0,1], got {scale}")
        if t1_us <= 0 or t2_us <= 0 or dur1_ns < 0 or dur2_ns < 0:
            raise InvalidConfig("times must be positive and durations nonnegative")
        if t2_us > 2.0 * t1_us:
            raise InvalidConfig(f"t2 = {t2_us}us exceeds 2*t1 = {2 * t1_us}us")
        object.__setattr__(self, "p1", float(p1))
        object.__setattr__(self, "p2", float(p2))
        object.__setattr__(self, "t1_us", float(t1_us))
        object.__setattr__(self, "t2_us", float(t2_us))
        object.__setattr__(self, "dur1_ns", float(dur1_ns))
        object.__setattr__(self, "dur2_ns", float(dur2_ns))
        object.__setattr__(self, "scale", float(scale))
        object.__setattr__(self, "gate_noise_on", bool(gate_noise_on))
        object.__setattr__(self, "decoherence_on", bool(decoherence_on))

    def __setattr__(self, key, value):
        raise AttributeError("NoiseModel is immutable")

    def replace(self, **kw) -> "NoiseModel":
        fields = {k: getattr(self, k) for k in self.__slots__}
        fields.update(kw)
        return NoiseModel(**fields)

    def with_scale(self, i: float) -> "NoiseModel":
        return self.replace(scale=i)

    def damp_gamma(self, dur_ns: float) -> float:
        """Relaxation jump probability for one gate of the given duration."""
        return 1.0 - exp(-dur_ns / (self.t1_us * 1000.0))

    def dephase_prob(self, dur_ns: float) -> float:
        """Z-flip probability; pure-dephasing rate is 1/t2 - 1/(2*t1)."""
        rate = 1.0 / self.t2_us - 1.0 / (2.0 * self.t1_us)
        if rate <= 0.0:
            return 0.0
        return (1.0 - exp(-dur_ns / 1000.0 * rate)) / 2.0

    def to_json(self) -> str:
        doc = {k: getattr(self, k) for k in self.__slots__}
        return json.dumps(doc, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "NoiseModel":
        try:
            doc = json.loads(text)
            return NoiseModel(**doc)
        except (TypeError, ValueError, json.JSONDecodeError) as exc:
            raise ParseError(f"bad noise model JSON: {exc}") from exc

    def __repr__(self):
        flags = []
        if not self.gate_noise_on:
            flags.append("gate_noise off")
        if not self.decoherence_on:
            flags.append("decoherence off")
        tail = f" [{', '.join(flags)}]" if flags else ""
        return (f"NoiseModel(p1={self.p1}, p2={self.p2}, t1={self.t1_us}us, "
                f"t2={self.t2_us}us, scale={self.scale}{tail})")


class SampleSet:
    """Measurement outcomes: bitstring -> count, with total shot count M.

    Bit k of a bitstring is the measured value of qubit k.
    """

    __slots__ = ("counts", "total")

    def __init__(self, counts: Mapping[str, int], total: int):
        counts = {str(b): int(c) for b, c in counts.items() if c}
        if sum(counts.values()) != total:
            raise InvalidConfig(f"counts sum to {sum(counts.values())}, not M={total}")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total", int(total))

    def __setattr__(self, key, value):
        raise AttributeError("SampleSet is immutable")

    def frequency(self, bitstring: str) -> float:
        return self.counts.get(bitstring, 0) / self.total

    def to_csv(self) -> str:
        lines = ["bitstring,count"]
        lines.extend(f"{b},{c}" for b, c in sorted(self.counts.items()))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_csv(text: str) -> "SampleSet":
        counts: Dict[str, int] = {}
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "bitstring,count":
            raise ParseError("sample CSV must start with 'bitstring,count'")
        for lineno, line in enumerate(lines[1:], start=2):
            try:
                bits, count = line.split(",")
                counts[bits.strip()] = counts.get(bits.strip(), 0) + int(count)
            except ValueError as exc:
                raise ParseError(f"line {lineno}: bad sample row {line!r}") from exc
        return SampleSet(counts, sum(counts.values()))

    def __repr__(self):
        return f"SampleSet(total={self.total}, distinct={len(self.counts)})"


def _view(states: np.ndarray, n: int, k: int) -> np.ndarray:
    """Expose qubit k as the middle axis: (rows, high, 2, low)."""
    rows = states.shape[0]
    return states.reshape(rows, 1 << (n - k - 1), 2, 1 << k)


def _apply_cnot(states: np.ndarray, n: int, c: int, t: int) -> None:
    """Swap the target-bit slices of the control=1 subspace (no gather)."""
    rows = states.shape[0]
    hi, lo = (c, t) if c > t else (t, c)
    v = states.reshape(rows, 1 << (n - 1 - hi), 2, 1 << (hi - lo - 1), 2, 1 << lo)
    if c > t:
        a = v[:, :, 1, :, 0, :].copy()
        v[:, :, 1, :, 0, :] = v[:, :, 1, :, 1, :]
        v[:, :, 1, :, 1, :] = a
    else:
        a = v[:, :, 0, :, 1, :].copy()
        v[:, :, 0, :, 1, :] = v[:, :, 1, :, 1, :]
        v[:, :, 1, :, 1, :] = a


def _apply_unitary(states: np.ndarray, n: int, g: Gate) -> None:
    if g.kind == "CNOT":
        _apply_cnot(states, n, g.qubits[0], g.qubits[1])
        return
    k = g.qubits[0]
    v = _view(states, n, k)
    s0 = v[:, :, 0, :]
    s1 = v[:, :, 1, :]
    if g.kind == "H":
        tmp = s0.copy()
        s0 += s1
        s0 *= _SQRT_HALF
        s1 *= -1.0
        s1 += tmp
        s1 *= _SQRT_HALF
    elif g.kind == "RZ":
        half = 0.5 * g.angle
        s0 *= complex(np.cos(half), -np.sin(half))
        s1 *= complex(np.cos(half), np.sin(half))
    else:  # RX
        half = 0.5 * g.angle
        cos, msin = np.cos(half), -1j * np.sin(half)
        tmp = s0.copy()
        s0 *= cos
        s0 += msin * s1
        s1 *= cos
        s1 += msin * tmp


def _apply_pauli_rows(states: np.ndarray, n: int, rows: np.ndarray,
                      which: int, k: int) -> None:
    """Pauli (1=X, 2=Y, 3=Z) on qubit k of the selected rows."""
    sub = states[rows]
    v = _view(sub, n, k)
    if which == 1:
        tmp = v[:, :, 0, :].copy()
        v[:, :, 0, :] = v[:, :, 1, :]
        v[:, :, 1, :] = tmp
    elif which == 2:
        tmp = v[:, :, 0, :].copy()
        v[:, :, 0, :] = -1j * v[:, :, 1, :]
        v[:, :, 1, :] = 1j * tmp
    else:
        v[:, :, 1, :] *= -1.0
    states[rows] = sub


def _depolarize(states: np.ndarray, n: int, g: Gate, prob: float,
                u_event: np.ndarray, u_choice: np.ndarray) -> None:
    hit = np.flatnonzero(u_event < prob)
    if hit.size == 0:
        return
    if g.kind == "CNOT":
        # uniformly one of the 15 nontrivial two-qubit Paulis, control-major
        pick = np.minimum((u_choice[hit] * 15).astype(np.int64), 14) + 1
        for code in np.unique(pick):
            rows = hit[pick == code]
            pc, pt = int(code) // 4, int(code) % 4
            if pc:
                _apply_pauli_rows(states, n, rows, pc, g.qubits[0])
            if pt:
                _apply_pauli_rows(states, n, rows, pt, g.qubits[1])
    else:
        pick = np.minimum((u_choice[hit] * 3).astype(np.int64), 2) + 1
        for code in (1, 2, 3):
            rows = hit[pick == code]
            if rows.size:
                _apply_pauli_rows(states, n, rows, code, g.qubits[0])


def _damp(states: np.ndarray, n: int, k: int, gamma_s: float,
          u: np.ndarray, mass: np.ndarray) -> None:
    """Amplitude damping on qubit k, one stochastic jump decision per row.

    Renormalization is deferred: `mass` tracks each row's squared norm and
    jump probabilities and measurement thresholds divide by it, which
    reproduces the normalize-every-step trajectory exactly.
    """
    v = _view(states, n, k)
    s1 = v[:, :, 1, :]
    pop1 = (s1.real ** 2 + s1.imag ** 2).sum(axis=(1, 2))
    jump = u * mass < gamma_s * pop1
    hit = np.flatnonzero(jump)
    if hit.size:
        excited = v[hit, :, 1, :]
        v[hit, :, 0, :] = excited
        v[hit, :, 1, :] = 0.0
    s1 *= sqrt(1.0 - gamma_s)
    mass -= gamma_s * pop1
    if hit.size:
        mass[hit] = pop1[hit]


def _dephase(states: np.ndarray, n: int, k: int, prob: float,
             u: np.ndarray) -> None:
    hit = np.flatnonzero(u < prob)
    if hit.size:
        _apply_pauli_rows(states, n, hit, 3, k)


class _DrawPlan:
    """Fixed column layout of per-shot gate-noise draws for one circuit.

    Columns per gate: [depol event, depol choice] then [damp, dephase] per
    participating qubit, always reserved whether or not a noise source is
    enabled, so masked runs consume aligned streams.
    """

    __slots__ = ("offsets", "total")

    def __init__(self, circuit: BoundCircuit):
        self.offsets: List[int] = []
        col = 0
        for g in circuit.gates:
            self.offsets.append(col)
            col += 2 + 2 * len(g.qubits)
        self.total = col


def _noise_active(nm: NoiseModel) -> Tuple[bool, bool]:
    gate = nm.gate_noise_on and nm.scale > 0 and (nm.p1 > 0 or nm.p2 > 0)
    deco = nm.decoherence_on and nm.scale > 0 and (
        nm.damp_gamma(nm.dur1_ns) > 0 or nm.damp_gamma(nm.dur2_ns) > 0
        or nm.dephase_prob(nm.dur1_ns) > 0 or nm.dephase_prob(nm.dur2_ns) > 0)
    return gate, deco


def _evolve_block(circuit: BoundCircuit, nm: NoiseModel, draws: np.ndarray,
                  plan: _DrawPlan) -> np.ndarray:
    """Run `draws.shape[0]` trajectories; returns (rows, 2^n) states.

    Rows are left unnormalized; `mass` carries each row's squared norm so
    jump decisions stay exact probabilities.
    """
    n = circuit.n_qubits
    rows = draws.shape[0]
    states = np.zeros((rows, 1 << n), dtype=np.complex128)
    states[:, 0] = 1.0
    mass = np.ones(rows)
    gate_on, deco_on = _noise_active(nm)
    s = nm.scale
    probs = {False: s * nm.p1, True: s * nm.p2}
    gammas = {False: s * nm.damp_gamma(nm.dur1_ns), True: s * nm.damp_gamma(nm.dur2_ns)}
    flips = {False: s * nm.dephase_prob(nm.dur1_ns), True: s * nm.dephase_prob(nm.dur2_ns)}
    for g, base in zip(circuit.gates, plan.offsets):
        _apply_unitary(states, n, g)
        two = g.kind == "CNOT"
        if gate_on and probs[two] > 0:
            _depolarize(states, n, g, probs[two],
                        draws[:, base], draws[:, base + 1])
        if deco_on:
            gamma_s, pz = gammas[two], flips[two]
            col = base + 2
            for k in g.qubits:
                if gamma_s > 0:
                    _damp(states, n, k, gamma_s, draws[:, col], mass)
                if pz > 0:
                    _dephase(states, n, k, pz, draws[:, col + 1])
                col += 2
    return states


def _measure_rows(states: np.ndarray, u: np.ndarray) -> np.ndarray:
    probs = states.real ** 2 + states.imag ** 2
    cum = np.cumsum(probs, axis=1)
    # per-row searchsorted(cum, u * norm^2, "right"); rows self-normalize
    out = (cum <= (u * cum[:, -1])[:, None]).sum(axis=1)
    return np.minimum(out, states.shape[1] - 1)


def _check_size(circuit: BoundCircuit) -> None:
    if circuit.n_qubits > _MAX_QUBITS:
        raise TooManyQubits(
            f"{circuit.n_qubits} qubits exceeds the {_MAX_QUBITS}-qubit simulator cap")


def simulate_statevector(circuit: BoundCircuit) -> np.ndarray:
    """Exact noiseless final state (2^n complex amplitudes)."""
    _check_size(circuit)
    n = circuit.n_qubits
    states = np.zeros((1, 1 << n), dtype=np.complex128)
    states[0, 0] = 1.0
    for g in circuit.gates:
        _apply_unitary(states, n, g)
    return states[0]


def run_trajectory(circuit: BoundCircuit, nm: NoiseModel, seed: Seed) -> np.ndarray:
    """One stochastic trajectory; equals shot 0 of `sample` at this seed."""
    _check_size(circuit)
    seed_t = _seed_tuple(seed)
    plan = _DrawPlan(circuit)
    gate_on, deco_on = _noise_active(nm)
    if not (gate_on or deco_on):
        return simulate_statevector(circuit)
    rng = np.random.default_rng([*seed_t, 0, 0])
    draws = rng.random((1, plan.total))
    state = _evolve_block(circuit, nm, draws, plan)[0]
    return state / np.linalg.norm(state)


def _block_rows(block: int, m: int) -> int:
    return min(SHOT_BLOCK, m - block * SHOT_BLOCK)


def _sample_chunk_noisy(circuit: BoundCircuit, nm: NoiseModel, plan: _DrawPlan,
                        seed_t: Tuple[int, ...],
                        blocks: Sequence[Tuple[int, int]]) -> np.ndarray:
    """Evolve several whole blocks as one batch; streams stay per-block."""
    draws = np.concatenate([
        np.random.default_rng([*seed_t, b, 0]).random((rows, plan.total))
        for b, rows in blocks])
    u = np.concatenate([
        np.random.default_rng([*seed_t, b, 1]).random(rows)
        for b, rows in blocks])
    states = _evolve_block(circuit, nm, draws, plan)
    return _measure_rows(states, u)


def _chunk_blocks(n_blocks: int, m: int, n_qubits: int,
                  threads: int) -> List[List[Tuple[int, int]]]:
    """Split blocks into contiguous groups bounded by the amplitude budget."""
    max_rows = max(SHOT_BLOCK, _AMP_BUDGET >> n_qubits)
    want = max((m + max_rows - 1) // max_rows, min(threads, n_blocks))
    per = (n_blocks + want - 1) // want
    groups = []
    for lo in range(0, n_blocks, per):
        groups.append([(b, _block_rows(b, m))
                       for b in range(lo, min(lo + per, n_blocks))])
    return groups


def sample(circuit: BoundCircuit, nm: NoiseModel, m: int, seed: Seed) -> SampleSet:
    """M shots, one fresh trajectory per shot, measured once each.

    Shot j draws from substreams keyed (seed, j // 256); the result is a
    deterministic function of (circuit, nm, m, seed) independent of thread
    count (VQF_THREADS) and chunking.
    """
    _check_size(circuit)
    if m < 1:
        raise InvalidConfig(f"shot count must be >= 1, got {m}")
    seed_t = _seed_tuple(seed)
    n = circuit.n_qubits
    n_blocks = (m + SHOT_BLOCK - 1) // SHOT_BLOCK
    gate_on, deco_on = _noise_active(nm)
    if not (gate_on or deco_on):
        # one exact state; per-shot randomness is only the measurement draw
        state = simulate_statevector(circuit)
        cum = np.cumsum(state.real ** 2 + state.imag ** 2)
        u = np.concatenate([
            np.random.default_rng([*seed_t, block, 1]).random(_block_rows(block, m))
            for block in range(n_blocks)])
        idx = np.minimum(np.searchsorted(cum, u * cum[-1], side="right"),
                         (1 << n) - 1)
    else:
        plan = _DrawPlan(circuit)
        threads = _thread_count()
        groups = _chunk_blocks(n_blocks, m, n, threads)
        if threads > 1 and len(groups) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = [pool.submit(_sample_chunk_noisy, circuit, nm, plan,
                                       seed_t, grp) for grp in groups]
                idx = np.concatenate([f.result() for f in futures])
        else:
            idx = np.concatenate([
                _sample_chunk_noisy(circuit, nm, plan, seed_t, grp)
                for grp in groups])
    values, counts = np.unique(idx, return_counts=True)
    counts_map = {format(int(v), f"0{n}b")[::-1]: int(c)
                  for v, c in zip(values, counts)}
    return SampleSet(counts_map, m)


def _thread_count() -> int:
    raw = os.environ.get("VQF_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidConfig(f"VQF_THREADS must be an integer, got {raw!r}")


def estimate_expectation(samples: SampleSet, f: BoolPoly,
                         var_map: Mapping[Var, int]) -> float:
    """Shot-averaged cost: mean of f over the sampled bitstrings."""
    total = Fraction(0)
    for bits, count in samples.counts.items():
        assignment = {v: int(bits[q]) for v, q in var_map.items()}
        total += f.evaluate(assignment) * count
    return float(total / samples.total)


def success_probability(samples: SampleSet, solutions: Set[str]) -> float:
    """Fraction of shots landing in the solution set."""
    if not solutions:
        raise InvalidConfig("empty solution set")
    hits = sum(c for b, c in samples.counts.items() if b in solutions)
    return hits / samples.total
