"""Monte Carlo engines for distillation protocols.

Two engines share the same noise draws:

* ``frame``: with noiseless local operations the residual on every output
  pair is a fixed function of Bob's input error, so it is evaluated directly
  on bit masks, vectorised over trials.
* ``tableau``: the full stabilizer simulation, one trial at a time.

For any trial both engines give identical results; the tests check this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .blockcode import (
    StabilizerCode,
    SyndromeDecoder,
    decoding_schedule,
    integrated_recovery,
    logical_operators,
    parity_code,
    phase_corrections,
    syndrome,
    syndrome_table,
    z_type_code,
)
from .gf2 import PauliString, gf2_rank
from .rng import CHUNK, run_chunks, stream
from .tableau import BellRegister, PackedPauli, new_bell_register, pair_residual

LABELS = ("I", "X", "Y", "Z")
_CLASS = {"I": 0, "X": 1, "Y": 2, "Z": 3}


# ----------------------------------------------------------------------
# noise


@dataclass(frozen=True)
class NoiseSpec:
    """Pauli noise on Bob's qubits.

    ``p`` is the total error probability, split evenly over X, Y, Z unless
    ``px, py, pz`` are given.  ``bilateral`` puts an independent copy of the
    channel on Alice's qubits as well.  ``meas_flip`` is the flip probability
    of single-qubit decoding measurements, used only where a protocol opts in.
    """

    p: float = 0.0
    meas_flip: float = 0.0
    bilateral: bool = False
    px: float | None = None
    py: float | None = None
    pz: float | None = None

    def __post_init__(self):
        given = [v for v in (self.px, self.py, self.pz) if v is not None]
        if given:
            if len(given) != 3:
                raise ValueError("give all of px, py, pz or none")
            if any(v < 0 for v in given) or sum(given) > 1:
                raise ValueError("per-Pauli probabilities must be >= 0 and sum to <= 1")
            object.__setattr__(self, "p", float(sum(given)))
        elif not 0 <= self.p <= 0.75:
            raise ValueError(f"p={self.p} outside [0, 3/4]")
        if not 0 <= self.meas_flip <= 0.5:
            raise ValueError(f"meas_flip={self.meas_flip} outside [0, 1/2]")

    @classmethod
    def from_fidelity(cls, F: float, **kw) -> "NoiseSpec":
        return cls(p=1.0 - F, **kw)

    @property
    def probs(self) -> tuple[float, float, float]:
        if self.px is not None:
            return (self.px, self.py, self.pz)
        return (self.p / 3, self.p / 3, self.p / 3)

    @property
    def fidelity(self) -> float:
        return 1.0 - self.p


def single_lateral_equivalent(p: float) -> float:
    """Bob-only error rate equivalent to depolarizing noise ``p`` on both sides."""
    if not 0 <= p <= 0.75:
        raise ValueError(f"p={p} outside [0, 3/4]")
    return 2 * p - 4 * p * p / 3


def sample_paulis(u: np.ndarray, probs: tuple[float, float, float]) -> tuple[np.ndarray, np.ndarray]:
    """Inverse-CDF map of uniforms to Pauli bits (order I, X, Y, Z)."""
    px, py, pz = probs
    t0 = 1.0 - (px + py + pz)
    t1 = t0 + px
    t2 = t1 + py
    x = ((u >= t0) & (u < t2)).astype(np.uint8)
    z = (u >= t1).astype(np.uint8)
    return x, z


def draw_errors(rng: np.random.Generator, trials: int, pairs: int,
                spec: NoiseSpec) -> tuple[np.ndarray, np.ndarray]:
    """Effective Bob-side error bits for a chunk, shape ``(trials, pairs)``."""
    u = rng.random((trials, pairs))
    ex, ez = sample_paulis(u, spec.probs)
    if spec.bilateral:
        ua = rng.random((trials, pairs))
        ax, az = sample_paulis(ua, spec.probs)
        # (E_A (x) E_B)|Phi+> = (I (x) E_B E_A^T)|Phi+>
        ex ^= ax
        ez ^= az
    return ex, ez


def inject_noise(reg: BellRegister, spec: NoiseSpec, rng: np.random.Generator | None = None) -> list[str]:
    """Apply the channel to every pair of a register; returns the Paulis applied to Bob."""
    rng = rng if rng is not None else reg.tableau.rng
    ex, ez = draw_errors(rng, 1, reg.n, spec)
    labels = []
    for i in range(reg.n):
        lab = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}[(int(ex[0, i]), int(ez[0, i]))]
        labels.append(lab)
        if lab != "I":
            reg.tableau.apply_pauli(PauliString.single(2 * reg.n, reg.bob(i), lab))
    return labels


# ----------------------------------------------------------------------
# results


def _ci95(p: float, n: int) -> float:
    if n <= 0 or not math.isfinite(p):
        return float("nan")
    return 1.96 * math.sqrt(max(p * (1 - p), 0.0) / n)


@dataclass
class ProtocolResult:
    """Counters of a protocol run; addition merges independent runs."""

    protocol: str
    n: int
    k: int
    mode: str
    trials: int = 0
    successes: int = 0
    residual_counts: np.ndarray = field(default_factory=lambda: np.zeros((0, 4), dtype=np.int64))
    p_in: float = 0.0
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.residual_counts.shape != (self.k, 4):
            self.residual_counts = np.zeros((self.k, 4), dtype=np.int64)

    def __add__(self, other: "ProtocolResult") -> "ProtocolResult":
        if (self.protocol, self.n, self.k, self.mode) != (other.protocol, other.n, other.k, other.mode):
            raise ValueError("cannot merge results of different protocols")
        return ProtocolResult(self.protocol, self.n, self.k, self.mode,
                              self.trials + other.trials, self.successes + other.successes,
                              self.residual_counts + other.residual_counts, self.p_in, self.seed,
                              {**self.extra, **other.extra})

    @property
    def success_prob(self) -> float:
        return self.successes / self.trials if self.trials else float("nan")

    @property
    def success_ci95(self) -> float:
        return _ci95(self.success_prob, self.trials)

    @property
    def fidelity_out(self) -> float:
        """Marginal probability that a kept pair is exact, given success."""
        tot = self.successes * self.k
        return float(self.residual_counts[:, 0].sum()) / tot if tot else float("nan")

    @property
    def fidelity_ci95(self) -> float:
        return _ci95(self.fidelity_out, self.successes * self.k)

    @property
    def yield_(self) -> float:
        return self.k * self.success_prob / self.n

    @property
    def residual_probs(self) -> np.ndarray:
        """Per-pair class frequencies (I, X, Y, Z) among successful trials."""
        if not self.successes:
            return np.full((self.k, 4), np.nan)
        return self.residual_counts / self.successes

    def to_row(self) -> dict:
        return {
            "protocol": self.protocol,
            "n": self.n,
            "k": self.k,
            "mode": self.mode,
            "p_in": self.p_in,
            "F_in": 1.0 - self.p_in,
            "trials": self.trials,
            "successes": self.successes,
            "F_out": self.fidelity_out,
            "F_out_ci95": self.fidelity_ci95,
            "yield": self.yield_,
            "seed": self.seed,
        }


# ----------------------------------------------------------------------
# protocol description


@dataclass(frozen=True)
class Protocol:
    """Tree of block stages; level ``l`` acts along tensor axis ``l``.

    Inputs are laid out as a tensor of shape ``(n_1, ..., n_L)``.  Level ``l``
    runs one block of code ``l`` for every fixed value of the other axes and
    replaces axis ``l`` by its ``k_l`` outputs, so each block of a later level
    takes one output from each of several different earlier blocks.
    """

    name: str
    codes: tuple[StabilizerCode, ...]
    modes: tuple[str, ...]
    hadamard: bool = False

    def __post_init__(self):
        if len(self.codes) != len(self.modes) or not self.codes:
            raise ValueError("one mode per level is required")
        for m in self.modes:
            if m not in ("correct", "detect"):
                raise ValueError(f"unknown mode {m!r}")

    @property
    def n_in(self) -> int:
        return math.prod(c.n for c in self.codes)

    @property
    def k_out(self) -> int:
        return math.prod(c.k for c in self.codes)

    @property
    def mode_label(self) -> str:
        return self.modes[0] if len(set(self.modes)) == 1 else "+".join(self.modes)

    def empty_result(self, spec: NoiseSpec, seed) -> ProtocolResult:
        return ProtocolResult(self.name, self.n_in, self.k_out, self.mode_label, p_in=spec.p, seed=seed)


def block_protocol(code: StabilizerCode, mode: str) -> Protocol:
    return Protocol(f"block:{code.name}", (code,), (mode,), False)


def recurrence_protocol(n: int, iterations: int) -> Protocol:
    if n < 2 or iterations < 1:
        raise ValueError("need n >= 2 and iterations >= 1")
    code = parity_code(n)
    return Protocol(f"recurrence{n}x{iterations}", (code,) * iterations, ("detect",) * iterations, True)


def _check_full_rank(h: np.ndarray, label: str) -> np.ndarray:
    h = np.atleast_2d(np.asarray(h, dtype=np.uint8)) & 1
    rows = [sum(int(b) << j for j, b in enumerate(r)) for r in h]
    if gf2_rank(rows) != h.shape[0]:
        raise ValueError(f"{label} parity-check matrix is rank deficient")
    return h


def classical_protocol(h_bitflip, h_phaseflip, mode="correct") -> Protocol:
    h1 = _check_full_rank(h_bitflip, "bit-flip")
    h2 = _check_full_rank(h_phaseflip, "phase-flip")
    modes = (mode, mode) if isinstance(mode, str) else tuple(mode)
    c1 = z_type_code(h1, name="h_bitflip")
    c2 = z_type_code(h2, name="h_phaseflip")
    return Protocol(f"classical[{c1.n},{c1.k}]x[{c2.n},{c2.k}]", (c1, c2), modes, True)


# ----------------------------------------------------------------------
# frame engine


def _pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack the last axis (<= 64 bits) into uint64 integers."""
    n = bits.shape[-1]
    w = np.uint64(1) << np.arange(n, dtype=np.uint64)
    return (bits.astype(np.uint64) * w).sum(axis=-1, dtype=np.uint64)


def _parity(v: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(v) & 1).astype(np.uint8)


class FrameStage:
    """One code block evaluated on packed error masks."""

    def __init__(self, code: StabilizerCode, mode: str):
        if code.n > 64:
            raise ValueError("the frame engine packs one block into a 64-bit word")
        self.code, self.mode = code, mode
        self.gx = np.array([g.x for g in code.rows], dtype=np.uint64)
        self.gz = np.array([g.z for g in code.rows], dtype=np.uint64)
        lx, lz = logical_operators(code).original()
        self.lxx = np.array([p.x for p in lx], dtype=np.uint64)
        self.lxz = np.array([p.z for p in lx], dtype=np.uint64)
        self.lzx = np.array([p.x for p in lz], dtype=np.uint64)
        self.lzz = np.array([p.z for p in lz], dtype=np.uint64)
        if mode == "correct":
            table = syndrome_table(code)
            size = 1 << len(code.rows)
            self.rx = np.zeros(size, dtype=np.uint64)
            self.rz = np.zeros(size, dtype=np.uint64)
            for s, e in table.items():
                self.rx[s] = e.x
                self.rz[s] = e.z

    def syndromes(self, ex: np.ndarray, ez: np.ndarray) -> np.ndarray:
        c = np.zeros(ex.shape, dtype=np.int64)
        for i in range(len(self.gx)):
            c |= _parity((ex & self.gz[i]) ^ (ez & self.gx[i])).astype(np.int64) << i
        return c

    def apply(self, ex: np.ndarray, ez: np.ndarray):
        """Returns ``(accepted, out_x, out_z)`` with outputs of shape ``(..., k)``."""
        c = self.syndromes(ex, ez)
        if self.mode == "detect":
            acc = c == 0
        else:
            acc = np.ones(c.shape, dtype=bool)
            ex = ex ^ self.rx[c]
            ez = ez ^ self.rz[c]
        k = len(self.lxx)
        ox = np.empty(ex.shape + (k,), dtype=np.uint8)
        oz = np.empty(ex.shape + (k,), dtype=np.uint8)
        for i in range(k):
            ox[..., i] = _parity((ex & self.lzz[i]) ^ (ez & self.lzx[i]))
            oz[..., i] = _parity((ex & self.lxz[i]) ^ (ez & self.lxx[i]))
        return acc, ox, oz


class FrameEngine:
    def __init__(self, protocol: Protocol):
        self.protocol = protocol
        self.stages = [FrameStage(c, m) for c, m in zip(protocol.codes, protocol.modes)]

    def run(self, ex: np.ndarray, ez: np.ndarray):
        """Map input error bits ``(T, N)`` to ``(ok, out_x, out_z)``."""
        T = ex.shape[0]
        shape = (T,) + tuple(c.n for c in self.protocol.codes)
        X = ex.reshape(shape)
        Z = ez.reshape(shape)
        ok = np.ones(T, dtype=bool)
        for lvl, st in enumerate(self.stages):
            ax = lvl + 1
            Xm = np.moveaxis(X, ax, -1)
            Zm = np.moveaxis(Z, ax, -1)
            acc, ox, oz = st.apply(_pack_rows(Xm), _pack_rows(Zm))
            ok &= acc.reshape(T, -1).all(axis=1)
            X = np.moveaxis(ox, -1, ax)
            Z = np.moveaxis(oz, -1, ax)
            if self.protocol.hadamard:
                X, Z = Z, X
        return ok, X.reshape(T, -1), Z.reshape(T, -1)


def classes(ox: np.ndarray, oz: np.ndarray) -> np.ndarray:
    """Residual class index in (I, X, Y, Z) order."""
    return np.where(ox == 1, np.where(oz == 1, 2, 1), np.where(oz == 1, 3, 0)).astype(np.int64)


def tally(protocol: Protocol, spec: NoiseSpec, seed, ok, ox, oz) -> ProtocolResult:
    res = protocol.empty_result(spec, seed)
    res.trials = int(ok.shape[0])
    res.successes = int(ok.sum())
    cl = classes(ox[ok], oz[ok])
    for i in range(protocol.k_out):
        res.residual_counts[i] = np.bincount(cl[:, i], minlength=4)
    return res


def _frame_chunk(protocol: Protocol, spec: NoiseSpec, seed: int, chunk: int, size: int) -> ProtocolResult:
    rng = stream(seed, chunk)
    ex, ez = draw_errors(rng, size, protocol.n_in, spec)
    ok, ox, oz = FrameEngine(protocol).run(ex, ez)
    return tally(protocol, spec, seed, ok, ox, oz)


# ----------------------------------------------------------------------
# tableau engine


class TableauEngine:
    """Full stabilizer simulation of a protocol tree, one trial at a time."""

    def __init__(self, protocol: Protocol):
        self.protocol = protocol
        self.scheds = [decoding_schedule(c) for c in protocol.codes]
        self.decoders = [SyndromeDecoder(c, max_weight=None) for c in protocol.codes]
        self._cache: dict = {}

    def _gen_ops(self, lvl: int, qubits: tuple[int, ...], N2: int):
        key = (lvl, qubits)
        ops = self._cache.get(key)
        if ops is None:
            code = self.protocol.codes[lvl]
            sched = self.scheds[lvl]
            gens = [PackedPauli.from_pauli(g.embed(N2, qubits)) for g in code.rows]
            meas = []
            for j, pos in enumerate(sched.measured):
                q = qubits[sched.qubit(pos)]
                meas.append(PackedPauli.from_pauli(PauliString.single(N2, q, sched.basis(j))))
            ops = (gens, meas)
            self._cache[key] = ops
        return ops

    def _block(self, t, lvl: int, pair_ids: Sequence[int], N: int):
        code = self.protocol.codes[lvl]
        mode = self.protocol.modes[lvl]
        sched = self.scheds[lvl]
        A = tuple(int(i) for i in pair_ids)
        B = tuple(N + int(i) for i in pair_ids)
        gens_a, meas_a = self._gen_ops(lvl, A, 2 * N)
        gens_b, meas_b = self._gen_ops(lvl, B, 2 * N)
        s_a = [t.measure_pauli(g)[0] for g in gens_a]
        a = [t.measure_pauli(m)[0] for m in meas_a]
        ax, az = phase_corrections(sched, a)
        for i, pos in enumerate(sched.kept):
            q = A[sched.qubit(pos)]
            if az[i]:
                t.x(q)
            if ax[i]:
                t.z(q)
        s_b = [t.measure_pauli(g)[0] for g in gens_b]
        c = syndrome(code, s_a, s_b)
        if mode == "detect" and c.any():
            return False, None
        b = [t.measure_pauli(m)[0] for m in meas_b]
        _, finals = integrated_recovery(code, b, c, mode, self.decoders[lvl], sched)
        for i, pos in enumerate(sched.kept):
            q = B[sched.qubit(pos)]
            lab = finals[i]
            if lab != "I":
                t.apply_gate(lab, q)
        return True, [A[sched.qubit(pos)] for pos in sched.kept]

    def run_trial(self, ex_row, ez_row, seed: int, trial: int, bits=None):
        """Returns ``(ok, residual labels)``; labels are None on failure."""
        P = self.protocol
        N = P.n_in
        reg = new_bell_register(N, seed, trial, bits)
        t = reg.tableau
        ex_row = np.asarray(ex_row)
        ez_row = np.asarray(ez_row)
        if ex_row.any() or ez_row.any():
            xs = sum(int(b) << (N + i) for i, b in enumerate(ex_row))
            zs = sum(int(b) << (N + i) for i, b in enumerate(ez_row))
            t.apply_pauli(PauliString(2 * N, xs, zs))
        idx = np.arange(N).reshape(tuple(c.n for c in P.codes))
        for lvl, code in enumerate(P.codes):
            moved = np.moveaxis(idx, lvl, -1)
            rest = moved.shape[:-1]
            flat = moved.reshape(-1, code.n)
            new = np.empty((flat.shape[0], code.k), dtype=np.int64)
            for bi, row in enumerate(flat):
                ok, kept = self._block(t, lvl, row, N)
                if not ok:
                    return False, None
                new[bi] = kept
            idx = np.moveaxis(new.reshape(rest + (code.k,)), -1, lvl)
            if P.hadamard:
                for i in idx.ravel():
                    t.h(int(i))
                    t.h(N + int(i))
        return True, [pair_residual(t, int(i), N + int(i)) for i in idx.ravel()]


def _tableau_chunk(protocol: Protocol, spec: NoiseSpec, seed: int, chunk: int, size: int,
                   chunk_len: int = CHUNK) -> ProtocolResult:
    rng = stream(seed, chunk)
    ex, ez = draw_errors(rng, size, protocol.n_in, spec)
    eng = TableauEngine(protocol)
    res = protocol.empty_result(spec, seed)
    res.trials = size
    for j in range(size):
        ok, labels = eng.run_trial(ex[j], ez[j], seed, chunk * chunk_len + j)
        if ok:
            res.successes += 1
            for i, lab in enumerate(labels):
                res.residual_counts[i, _CLASS[lab]] += 1
    return res


def run_protocol(protocol: Protocol, spec: NoiseSpec, trials: int, seed: int,
                 engine: str = "frame", workers: int = 1) -> ProtocolResult:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if seed is None:
        raise ValueError("an explicit seed is required")
    if engine == "frame":
        fn = partial(_frame_chunk, protocol, spec, seed)
    elif engine == "tableau":
        fn = partial(_tableau_chunk, protocol, spec, seed)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    parts = run_chunks(fn, trials, workers)
    out = parts[0]
    for p in parts[1:]:
        out = out + p
    return out


def run_block_protocol(code: StabilizerCode, mode: str, spec: NoiseSpec, trials: int, seed: int,
                       engine: str = "frame", workers: int = 1) -> ProtocolResult:
    return run_protocol(block_protocol(code, mode), spec, trials, seed, engine, workers)


def run_recurrence(n: int, iterations: int, spec: NoiseSpec, trials: int, seed: int,
                   engine: str = "frame", workers: int = 1) -> ProtocolResult:
    return run_protocol(recurrence_protocol(n, iterations), spec, trials, seed, engine, workers)


def classical_code_protocol(h_bitflip, h_phaseflip, spec: NoiseSpec, trials: int, seed: int,
                            mode="correct", engine: str = "frame", workers: int = 1) -> ProtocolResult:
    """Two iterations: Z-type checks of ``h_bitflip``, Hadamards, then ``h_phaseflip``.

    ``mode`` is one string for both iterations or a pair.  A code such as
    ``[1 1]`` cannot correct anything and needs ``"detect"``.
    """
    return run_protocol(classical_protocol(h_bitflip, h_phaseflip, mode), spec, trials, seed,
                        engine, workers)


# ----------------------------------------------------------------------
# adaptive block-size schedule


@dataclass(frozen=True)
class AdaptiveRound:
    n_real: float
    block: int
    r: float
    p: float
    P: float


@dataclass(frozen=True)
class AdaptiveSchedule:
    p0: float
    a_exp: float
    rounds: tuple[AdaptiveRound, ...]
    c_bound: float

    @property
    def yield_product(self) -> float:
        return math.prod(rd.r * rd.P for rd in self.rounds)

    def closed_form(self, k: int) -> tuple[float, float, float, float]:
        """``(n_k, r_k, p_k, P_k)`` from the solved recursion (``k`` is 1-based)."""
        p0, a = self.p0, self.a_exp
        g = 2 - 2 * a
        n = math.sqrt(2) * p0 ** (-a * g ** (k - 1))
        r = 1 - math.sqrt(2) / 2 * p0 ** (a * g ** (k - 1))
        p = p0 ** (g ** k)
        P = 1 - math.sqrt(2) * p0 ** (0.5 * g ** k)
        return n, r, p, P


def adaptive_schedule(p0: float, a_exp: float, rounds: int = 8) -> AdaptiveSchedule:
    """Iterate the first-order recursion for growing ``[n, n-1, 2]`` blocks.

    ``n_real`` keeps the unrounded block size the recursion is defined with;
    ``block`` is the usable integer size (floor, at least 2).
    """
    if not 0 < p0 <= 0.1:
        raise ValueError("p0 must lie in (0, 0.1]")
    if not 0 < a_exp < 0.5:
        raise ValueError("a_exp must lie in (0, 1/2)")
    out = []
    p = p0
    for _ in range(rounds):
        n = math.sqrt(2) * p ** (-a_exp)
        r = (n - 1) / n
        P = 1 - n * p
        p_next = 0.5 * n * n * p * p
        out.append(AdaptiveRound(n, max(2, int(math.floor(n))), r, p_next, P))
        p = p_next
    c = math.sqrt(2 * p0) / (1 - math.sqrt(p0)) + math.sqrt(2) / (2 * (1 - p0 ** a_exp))
    return AdaptiveSchedule(p0, a_exp, tuple(out), c)


# ----------------------------------------------------------------------
# crossings


def bisect_sign_change(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-4) -> float:
    """Root of ``f`` on ``[lo, hi]`` by bisection; ``f(lo)`` and ``f(hi)`` must differ in sign."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fidelity_threshold(n: int, iterations: int, trials: int, seed: int, lo: float = 0.3,
                       hi: float = 0.95, tol: float = 1e-3, workers: int = 1) -> float:
    """Input fidelity where the recurrence output fidelity equals the input.

    Every evaluation reuses ``seed`` so the noisy objective stays monotone
    enough for bisection.
    """
    def gain(F):
        r = run_recurrence(n, iterations, NoiseSpec.from_fidelity(F), trials, seed, workers=workers)
        return r.fidelity_out - F
    return bisect_sign_change(gain, lo, hi, tol)


def yield_crossover(n_a: int, n_b: int, iterations: int, trials: int, seed: int, lo: float = 0.6,
                    hi: float = 0.99, tol: float = 1e-3, workers: int = 1) -> float:
    """Input fidelity where two recurrence sizes give the same yield."""
    def diff(F):
        spec = NoiseSpec.from_fidelity(F)
        ya = run_recurrence(n_a, iterations, spec, trials, seed, workers=workers).yield_
        yb = run_recurrence(n_b, iterations, spec, trials, seed, workers=workers).yield_
        return ya - yb
    return bisect_sign_change(diff, lo, hi, tol)
