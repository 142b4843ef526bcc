"""A small circuit IR for measurement-based distillation circuits.

Gates act on integer qubit labels.  Measurements write named classical
bits; a ``ClassicalPauli`` gate evaluates a function of classical bits and
applies the returned single-qubit Paulis to its targets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Callable, Sequence

import numpy as np

from .blockcode import (StabilizerCode, SyndromeDecoder, decoding_schedule, integrated_recovery,
                        phase_corrections, y_parity)
from .convcode import ConvCode, ConvStream, SlidingDecoder, frame_phases
from .gf2 import PauliString
from .tableau import Tableau

ONE_QUBIT = frozenset({"H", "S", "SDG", "PauliX", "PauliY", "PauliZ", "MeasX", "MeasZ", "ClassicalPauli"})
TWO_QUBIT = frozenset({"CNOT", "CY", "CZ"})
KINDS = ONE_QUBIT | TWO_QUBIT


@dataclass
class Gate:
    kind: str
    targets: tuple[int, ...]
    frame: int = 0
    cbit: str | None = None
    deps: tuple[str, ...] = ()
    fn: Callable[[dict], str] | None = None
    flip: int = 0  # measurement outcome is xor-ed with this

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        want = 2 if self.kind in TWO_QUBIT else None
        if want and len(self.targets) != want:
            raise ValueError(f"{self.kind} needs {want} targets")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("repeated target")

    @property
    def two_qubit(self) -> bool:
        return self.kind in TWO_QUBIT


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)
    schedule: list[int] | None = None
    qubit_frame: dict[int, int] = field(default_factory=dict)

    def add(self, kind: str, *targets: int, **kw) -> Gate:
        for q in targets:
            if not 0 <= q < self.n_qubits:
                raise IndexError(f"qubit {q} out of range")
        g = Gate(kind, tuple(targets), **kw)
        self.gates.append(g)
        self.schedule = None
        return g

    def to_netlist(self) -> str:
        """One gate per line: ``kind targets time``."""
        sched = self.schedule if self.schedule is not None else [-1] * len(self.gates)
        lines = []
        for g, t in zip(self.gates, sched):
            tg = ",".join(map(str, g.targets))
            extra = f" -> {g.cbit}" if g.cbit else ""
            lines.append(f"{g.kind} {tg} {t}{extra}")
        return "\n".join(lines) + ("\n" if lines else "")


def schedule_greedy(c: Circuit) -> Circuit:
    """Earliest-slot scheduling in gate-list order; classical gates wait for their sources."""
    busy: dict[int, int] = {}
    ready: dict[str, int] = {}
    out = []
    for g in c.gates:
        t = max((busy.get(q, -1) for q in g.targets), default=-1) + 1
        for d in g.deps:
            if d in ready:
                t = max(t, ready[d] + 1)
        for q in g.targets:
            busy[q] = t
        if g.cbit is not None:
            ready[g.cbit] = t
        out.append(t)
    c.schedule = out
    return c


@dataclass(frozen=True)
class CircuitMetrics:
    depth2q: int
    gates2q_per_frame: float
    span_frames: int
    data_layers: int = 0

    def to_row(self) -> dict:
        return {"depth2q": self.depth2q, "gates2q_per_frame": self.gates2q_per_frame,
                "span_frames": self.span_frames}


# Unitary-encoder comparison row; fixed reference data, not synthesized.
UNITARY_REFERENCE = CircuitMetrics(depth2q=11, gates2q_per_frame=14, span_frames=3)


class UnscheduledError(ValueError):
    pass


def metrics(c: Circuit, data_qubits: Sequence[int] | None = None) -> CircuitMetrics:
    """Two-qubit depth, two-qubit gates per gadget frame and frame span.

    The span counts frames touched by one two-qubit gate, inclusively.
    ``data_layers`` is the largest number of two-qubit gates on any single
    data qubit when ``data_qubits`` is given.
    """
    if c.schedule is None:
        raise UnscheduledError("schedule the circuit first")
    two = [(g, t) for g, t in zip(c.gates, c.schedule) if g.two_qubit]
    if not two:
        return CircuitMetrics(0, 0, 0, 0)
    depth = len({t for _, t in two})
    frames = {g.frame for g, _ in two}
    per_frame = len(two) / len(frames)
    if per_frame.is_integer():
        per_frame = int(per_frame)
    span = 0
    for g, _ in two:
        fs = [c.qubit_frame.get(q, g.frame) for q in g.targets]
        span = max(span, max(fs) - min(fs) + 1)
    layers = 0
    if data_qubits is not None:
        dq = set(data_qubits)
        load: dict[int, int] = {}
        for g, _ in two:
            for q in g.targets:
                if q in dq:
                    load[q] = load.get(q, 0) + 1
        layers = max(load.values(), default=0)
    return CircuitMetrics(depth, per_frame, span, layers)


# ----------------------------------------------------------------------
# gadgets


_CTRL = {"X": "CNOT", "Y": "CY", "Z": "CZ"}


def _gadget(c: Circuit, anc: int, terms: Sequence[tuple[int, str]], cbit: str, frame: int,
            sign: int = 1, prep: bool = True, finish: bool = True) -> None:
    if prep:
        c.add("H", anc, frame=frame)
    for q, lab in terms:
        c.add(_CTRL[lab], anc, q, frame=frame)
    if finish:
        c.add("MeasX", anc, frame=frame, cbit=cbit, flip=0 if sign > 0 else 1)


@dataclass
class MeasurementCircuit:
    """One party's circuit plus its qubit layout."""

    circuit: Circuit
    data: tuple[int, ...]
    ancillas: tuple[int, ...]
    syndrome_bits: tuple[str, ...]
    outcome_bits: tuple[str, ...]
    kept: tuple[int, ...]

    @property
    def metrics(self) -> CircuitMetrics:
        return metrics(self.circuit, self.data)


def _block_circuit(code: StabilizerCode, role: str, mode: str) -> MeasurementCircuit:
    n = code.n
    m = len(code.rows)
    c = Circuit(n + m)
    for q in range(n + m):
        c.qubit_frame[q] = 0
    sbits = []
    for i, g in enumerate(code.rows):
        terms = [(q, g[q]) for q in range(n) if g[q] != "I"]
        sbits.append(f"s{i}")
        _gadget(c, n + i, terms, f"s{i}", 0, g.sign)
    sched = decoding_schedule(code)
    obits = []
    for j, pos in enumerate(sched.measured):
        q = sched.qubit(pos)
        obits.append(f"m{j}")
        c.add("Meas" + sched.basis(j), q, cbit=f"m{j}")
    kept = tuple(sched.qubit(pos) for pos in sched.kept)
    own = tuple(obits)
    if role == "alice":
        def fn(bits, _sched=sched, _own=own):
            ax, az = phase_corrections(_sched, [bits[b] for b in _own])
            return "".join(_pauli_label(int(z), int(x)) for x, z in zip(ax, az))
        c.add("ClassicalPauli", *kept, deps=own, fn=fn)
    else:
        decoder = SyndromeDecoder(code, max_weight=None)
        oddy = y_parity(code)

        def fn(bits, _sched=sched, _own=own, _code=code, _dec=decoder, _mode=mode):
            sa = np.array([bits[f"alice:s{i}"] for i in range(m)], dtype=np.uint8)
            sb = np.array([bits[f"s{i}"] for i in range(m)], dtype=np.uint8)
            cc = sa ^ sb ^ oddy
            if _mode == "detect" and cc.any():
                raise Rejected()
            _, finals = integrated_recovery(_code, [bits[b] for b in _own], cc, _mode, _dec, _sched)
            return "".join(finals)
        c.add("ClassicalPauli", *kept, deps=own + tuple(sbits), fn=fn)
    schedule_greedy(c)
    return MeasurementCircuit(c, tuple(range(n)), tuple(range(n, n + m)), tuple(sbits), own, kept)


def _pauli_label(x: int, z: int) -> str:
    return {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}[(x, z)]


class Rejected(Exception):
    """Raised by a detection-mode recovery on a non-trivial syndrome."""


# ----------------------------------------------------------------------
# constant-depth gadget ordering for shift-invariant codes


def _pieces(code: ConvCode) -> list[list[tuple[int, int, str]]]:
    """Per generator: (frame offset, position, Pauli label) pieces."""
    out = []
    for i in range(len(code.gens)):
        ps = []
        for f, p in code.frame_paulis(i):
            for q in range(code.n):
                if p[q] != "I":
                    ps.append((f, q, p[q]))
        out.append(ps)
    return out


def _anti(a: str, b: str) -> bool:
    return a != b


def _valid(pieces, slots) -> bool:
    """Interleaved gadgets measure the right operators.

    For gadgets A (generator i, shift 0) and B (generator j, shift d), the
    number of shared anticommuting qubits on which A acts first must be even.
    """
    G = len(pieces)
    span = max(f for ps in pieces for f, _, _ in ps) + 1
    for i in range(G):
        for j in range(G):
            for d in range(0, span):
                if d == 0 and j <= i:
                    continue
                cnt = 0
                for a, (fa, pa, la) in enumerate(pieces[i]):
                    for b, (fb, pb, lb) in enumerate(pieces[j]):
                        if pa == pb and fa == fb + d and _anti(la, lb) and slots[i][a] < slots[j][b]:
                            cnt += 1
                if cnt % 2:
                    return False
    return True


def constant_depth_slots(code: ConvCode, max_depth: int | None = None):
    """Smallest-depth shift-invariant slot assignment of the gadget gates.

    Returns ``(depth, slots)`` with ``slots[i][a]`` the time slot of piece
    ``a`` of generator ``i``, or None when nothing is found up to ``max_depth``.
    """
    pieces = _pieces(code)
    G = len(pieces)
    per_pos: dict[int, int] = {}
    for ps in pieces:
        for _, p, _ in ps:
            per_pos[p] = per_pos.get(p, 0) + 1
    lo = max([len(ps) for ps in pieces] + list(per_pos.values()))
    hi = max_depth if max_depth is not None else lo + 3
    for D in range(lo, hi + 1):
        found = _search(pieces, D, G)
        if found is not None:
            return D, found
    return None


def _search(pieces, D: int, G: int):
    chosen: list[tuple[int, ...]] = []

    def ok_partial(perm, i) -> bool:
        for a, (f, p, _) in enumerate(pieces[i]):
            for j in range(i):
                for b, (f2, p2, _) in enumerate(pieces[j]):
                    if p == p2 and chosen[j][b] == perm[a]:
                        return False
        return True

    def rec(i):
        if i == G:
            return _valid(pieces, chosen)
        for perm in permutations(range(D), len(pieces[i])):
            if not ok_partial(perm, i):
                continue
            chosen.append(perm)
            if rec(i + 1):
                return True
            chosen.pop()
        return False

    return [list(c) for c in chosen] if rec(0) else None


def _conv_circuit(code: ConvCode, frames: int, role: str, mode: str) -> MeasurementCircuit:
    st = ConvStream(code, frames)
    n = code.n
    G = len(code.gens)
    found = constant_depth_slots(code)
    if found is None:
        raise ValueError("no constant-depth gadget ordering found")
    D, slots = found
    pieces = _pieces(code)
    N = n * frames
    n_anc = G * st.shifts
    c = Circuit(N + n_anc)
    for q in range(N):
        c.qubit_frame[q] = q // n
    gad = []
    for t in range(st.shifts):
        for i in range(G):
            anc = N + t * G + i
            c.qubit_frame[anc] = t
            gad.append((t, i, anc))
            c.add("H", anc, frame=t)
    for s in range(D):
        for t, i, anc in gad:
            for a, (f, p, lab) in enumerate(pieces[i]):
                if slots[i][a] == s:
                    c.add(_CTRL[lab], anc, n * (t + f) + p, frame=t)
    sbits = []
    for t, i, anc in gad:
        sbits.append(f"s{t}_{i}")
        c.add("MeasX", anc, frame=t, cbit=f"s{t}_{i}")
    perm = st.std.column_perm
    bases = st.dec.bases
    obits = []
    for f in range(frames):
        for j, b in enumerate(bases):
            obits.append(f"m{f}_{j}")
            c.add("Meas" + b, n * f + perm[j], frame=f, cbit=f"m{f}_{j}")
    k = code.k
    m_meas = st.std.m
    kept = tuple(n * f + perm[m_meas + i] for f in st.decodable for i in range(k))
    own = tuple(obits)

    def outcomes(bits, prefix=""):
        return np.array([[bits[f"{prefix}m{f}_{j}"] for j in range(len(bases))] for f in range(frames)],
                        dtype=np.uint8)

    if role == "alice":
        def fn(bits):
            a = outcomes(bits)
            out = []
            for f in st.decodable:
                for i in range(k):
                    px, pz = frame_phases(st.dec, f, a, i)
                    out.append(_pauli_label(pz, px))
            return "".join(out)
        c.add("ClassicalPauli", *kept, deps=own, fn=fn)
    else:
        dec = SlidingDecoder(st)
        oddy = {(t, i): st.generator(i, t).y_count & 1 for t in range(st.shifts) for i in range(G)}

        def fn(bits):
            synd = np.zeros((1, st.shifts), dtype=np.int64)
            for t in range(st.shifts):
                for i in range(G):
                    cb = bits[f"alice:s{t}_{i}"] ^ bits[f"s{t}_{i}"] ^ oddy[(t, i)]
                    synd[0, t] |= cb << i
            if mode == "detect":
                if synd.any():
                    raise Rejected()
                rx = np.zeros((1, frames), dtype=np.int64)
                rz = rx.copy()
            else:
                rx, rz = dec.decode(synd)
            b = outcomes(bits)
            for f in range(frames):
                for j, basis in enumerate(bases):
                    q = perm[j]
                    b[f, j] ^= (int(rx[0, f]) >> q) & 1 if basis == "Z" else (int(rz[0, f]) >> q) & 1
            out = []
            for f in st.decodable:
                for i in range(k):
                    px, pz = frame_phases(st.dec, f, b, i)
                    qq = perm[m_meas + i]
                    out.append(_pauli_label(((int(rx[0, f]) >> qq) & 1) ^ pz, ((int(rz[0, f]) >> qq) & 1) ^ px))
            return "".join(out)
        c.add("ClassicalPauli", *kept, deps=own + tuple(sbits), fn=fn)
    schedule_greedy(c)
    return MeasurementCircuit(c, tuple(range(N)), tuple(range(N, N + n_anc)), tuple(sbits), own, kept)


def synthesize_measurement_circuit(code, role: str = "bob", mode: str = "correct",
                                   frames: int = 12) -> MeasurementCircuit:
    """Ancilla gadgets, single-qubit decoding measurements and one classical recovery.

    Later uses of a measured qubit are replaced by its classical outcome, so
    the recovery and the phase fix act together on the kept qubits only.
    """
    if role not in ("alice", "bob"):
        raise ValueError("role must be 'alice' or 'bob'")
    if isinstance(code, ConvCode):
        return _conv_circuit(code, frames, role, mode)
    return _block_circuit(code, role, mode)


# ----------------------------------------------------------------------
# execution


def execute(c: Circuit, t: Tableau, qubit_map: Sequence[int], bits: dict | None = None,
            prefix: str = "") -> dict:
    """Run ``c`` on tableau qubits ``qubit_map`` (in schedule order).

    Measurement results go into ``bits`` under ``prefix + name``; classical
    gates read the same dictionary with the prefix stripped for own bits.
    """
    bits = {} if bits is None else bits
    order = range(len(c.gates))
    if c.schedule is not None:
        order = sorted(order, key=lambda i: (c.schedule[i], i))
    view = _PrefixView(bits, prefix)
    for gi in order:
        g = c.gates[gi]
        q = [qubit_map[x] for x in g.targets]
        k = g.kind
        if k == "H":
            t.h(q[0])
        elif k == "S":
            t.s(q[0])
        elif k == "SDG":
            t.sdg(q[0])
        elif k == "PauliX":
            t.x(q[0])
        elif k == "PauliY":
            t.y(q[0])
        elif k == "PauliZ":
            t.z(q[0])
        elif k == "CNOT":
            t.cnot(q[0], q[1])
        elif k == "CZ":
            t.cz(q[0], q[1])
        elif k == "CY":
            t.sdg(q[1])
            t.cnot(q[0], q[1])
            t.s(q[1])
        elif k in ("MeasX", "MeasZ"):
            p = PauliString.single(t.n, q[0], k[-1])
            bits[prefix + g.cbit] = t.measure_pauli(p)[0] ^ g.flip
        elif k == "ClassicalPauli":
            labels = g.fn(view)
            for qq, lab in zip(q, labels):
                if lab != "I":
                    t.apply_gate(lab, qq)
    return bits


class _PrefixView(dict):
    """Read access to own bits (prefixed) and other parties' bits (full names)."""

    def __init__(self, store: dict, prefix: str):
        super().__init__()
        self.store, self.prefix = store, prefix

    def __getitem__(self, key):
        if self.prefix and (self.prefix + key) in self.store:
            return self.store[self.prefix + key]
        return self.store[key]


def run_circuit_trial(code, ex_row, ez_row, seed: int, trial: int, mode: str = "correct",
                      frames: int = 12, circuits=None):
    """Both parties execute their synthesized circuits on noisy Bell pairs.

    Returns ``(ok, residual labels of the output pairs)``; the same seed and
    error rows give the same residuals as the direct protocol engines.
    """
    from .tableau import new_bell_register, pair_residual

    alice, bob = circuits or (synthesize_measurement_circuit(code, "alice", mode, frames),
                              synthesize_measurement_circuit(code, "bob", mode, frames))
    nd = len(alice.data)
    na = len(alice.ancillas)
    reg = new_bell_register(nd, seed, trial)
    t = reg.tableau
    xs = sum(int(b) << (nd + i) for i, b in enumerate(ex_row))
    zs = sum(int(b) << (nd + i) for i, b in enumerate(ez_row))
    if xs or zs:
        t.apply_pauli(PauliString(2 * nd, xs, zs))
    t2 = t.extend(2 * na)
    t2.rng = t.rng
    a_map = list(range(nd)) + [2 * nd + i for i in range(na)]
    b_map = [nd + i for i in range(nd)] + [2 * nd + na + i for i in range(na)]
    bits: dict = {}
    execute(alice.circuit, t2, a_map, bits, prefix="alice:")
    try:
        execute(bob.circuit, t2, b_map, bits, prefix="")
    except Rejected:
        return False, None
    if isinstance(code, ConvCode):
        st = ConvStream(code, frames)
        perm = st.std.column_perm
        out_q = [code.n * f + perm[st.std.m + i] for f in st.interior for i in range(code.k)]
    else:
        out_q = list(alice.kept)
    return True, [pair_residual(t2, q, nd + q) for q in out_q]
