"""Stabilizer tableau simulator with arbitrary Pauli measurements.

Rows ``0..n-1`` hold destabilizers and rows ``n..2n-1`` stabilizers, packed
64 qubits per ``uint64`` word.  Row kernels come from :mod:`.kernels`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import kernels
from .gf2 import PauliString, gf2_rank, multiply, symplectic_vector
from .rng import trial_stream

_M64 = (1 << 64) - 1


class ContractError(RuntimeError):
    """An operation's precondition on the quantum state does not hold."""


def _to_words(v: int, W: int) -> np.ndarray:
    return np.array([(v >> (64 * w)) & _M64 for w in range(W)], dtype=np.uint64)


def _from_words(a: np.ndarray) -> int:
    out = 0
    for w, val in enumerate(a.tolist()):
        out |= int(val) << (64 * w)
    return out


@dataclass(frozen=True)
class PackedPauli:
    """Word-packed Pauli ready for the measurement kernels."""

    n: int
    x: np.ndarray
    z: np.ndarray
    sign: int  # 0 for +, 1 for -

    @classmethod
    def from_pauli(cls, p: PauliString) -> "PackedPauli":
        W = (p.n + 63) // 64
        return cls(p.n, _to_words(p.x, W), _to_words(p.z, W), 0 if p.sign > 0 else 1)


class Tableau:
    """``n``-qubit stabilizer state, initialised to ``|0...0>``."""

    GATES = ("H", "S", "SDG", "CNOT", "CZ", "X", "Y", "Z")

    def __init__(self, n: int, rng: np.random.Generator | None = None,
                 bits: Iterator[int] | None = None):
        if n < 1:
            raise ValueError("a tableau needs at least one qubit")
        self.n = n
        self.W = (n + 63) // 64
        self.xs = np.zeros((2 * n, self.W), dtype=np.uint64)
        self.zs = np.zeros((2 * n, self.W), dtype=np.uint64)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        for q in range(n):
            w, b = divmod(q, 64)
            self.xs[q, w] = np.uint64(1 << b)
            self.zs[n + q, w] = np.uint64(1 << b)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.bits = bits
        self._buf = np.zeros(0, dtype=np.uint8)
        self._ptr = 0
        self._pending = None

    # ------------------------------------------------------------------
    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n, t.W = self.n, self.W
        t.xs, t.zs, t.r = self.xs.copy(), self.zs.copy(), self.r.copy()
        t.rng, t.bits = self.rng, self.bits
        t._buf, t._ptr, t._pending = self._buf.copy(), self._ptr, self._pending
        return t

    def _peek_bit(self) -> int:
        if self.bits is not None:
            if self._pending is None:
                self._pending = int(next(self.bits)) & 1
            return self._pending
        if self._ptr >= len(self._buf):
            self._buf = self.rng.integers(0, 2, size=1024, dtype=np.uint8)
            self._ptr = 0
        return int(self._buf[self._ptr])

    def _consume_bit(self) -> None:
        if self.bits is not None:
            self._pending = None
        else:
            self._ptr += 1

    def _check(self, q: int) -> None:
        if not 0 <= q < self.n:
            raise IndexError(f"qubit {q} out of range for {self.n} qubits")

    def _col(self, arr: np.ndarray, q: int) -> np.ndarray:
        w, b = divmod(q, 64)
        return ((arr[:, w] >> np.uint64(b)) & np.uint64(1)).astype(np.uint8)

    def _flip(self, arr: np.ndarray, q: int, mask: np.ndarray) -> None:
        w, b = divmod(q, 64)
        arr[:, w] ^= mask.astype(np.uint64) << np.uint64(b)

    # ------------------------------------------------------------------
    # Clifford gates
    def h(self, q: int) -> None:
        self._check(q)
        x, z = self._col(self.xs, q), self._col(self.zs, q)
        self.r ^= x & z
        d = x ^ z
        self._flip(self.xs, q, d)
        self._flip(self.zs, q, d)

    def s(self, q: int) -> None:
        self._check(q)
        x, z = self._col(self.xs, q), self._col(self.zs, q)
        self.r ^= x & z
        self._flip(self.zs, q, x)

    def sdg(self, q: int) -> None:
        self.s(q)
        self.z(q)

    def cnot(self, c: int, t: int) -> None:
        self._check(c)
        self._check(t)
        if c == t:
            raise ValueError("CNOT control and target must differ")
        xc, zc = self._col(self.xs, c), self._col(self.zs, c)
        xt, zt = self._col(self.xs, t), self._col(self.zs, t)
        self.r ^= xc & zt & (xt ^ zc ^ 1)
        self._flip(self.xs, t, xc)
        self._flip(self.zs, c, zt)

    def cz(self, a: int, b: int) -> None:
        self.h(b)
        self.cnot(a, b)
        self.h(b)

    def x(self, q: int) -> None:
        self._check(q)
        self.r ^= self._col(self.zs, q)

    def z(self, q: int) -> None:
        self._check(q)
        self.r ^= self._col(self.xs, q)

    def y(self, q: int) -> None:
        self._check(q)
        self.r ^= self._col(self.xs, q) ^ self._col(self.zs, q)

    def apply_gate(self, gate: str, *targets: int) -> None:
        name = gate.upper()
        fn = {"H": self.h, "S": self.s, "SDG": self.sdg, "CNOT": self.cnot, "CX": self.cnot,
              "CZ": self.cz, "X": self.x, "Y": self.y, "Z": self.z}.get(name)
        if fn is None:
            raise ValueError(f"unknown gate {gate!r}")
        need = 2 if name in ("CNOT", "CX", "CZ") else 1
        if len(targets) != need:
            raise ValueError(f"{name} takes {need} target(s)")
        fn(*targets)

    def apply_pauli(self, p: PauliString) -> None:
        """Conjugate by the Pauli ``p``: flips every row anticommuting with it."""
        pk = PackedPauli.from_pauli(p) if isinstance(p, PauliString) else p
        anti = np.bitwise_count((self.xs & pk.z) ^ (self.zs & pk.x)).sum(axis=1) & 1
        self.r ^= anti.astype(np.uint8)

    # ------------------------------------------------------------------
    # measurements
    def _packed(self, p) -> PackedPauli:
        if isinstance(p, PackedPauli):
            pk = p
        else:
            if p.n != self.n:
                raise ValueError(f"Pauli acts on {p.n} qubits, tableau has {self.n}")
            pk = PackedPauli.from_pauli(p)
        if not pk.x.any() and not pk.z.any():
            raise ValueError("cannot measure the identity")
        return pk

    def measure_pauli(self, p, forced: int | None = None) -> tuple[int, bool]:
        """Measure ``p``; returns ``(outcome bit, deterministic)``.

        A random bit is consumed only when the outcome is random.  ``forced``
        overrides that bit.
        """
        pk = self._packed(p)
        rbit = self._peek_bit() if forced is None else forced & 1
        out, det = kernels.measure(self.xs, self.zs, self.r, self.n, pk.x, pk.z, pk.sign, rbit)
        if not det and forced is None:
            self._consume_bit()
        return int(out), bool(det)

    def peek_pauli(self, p) -> int | None:
        """Deterministic outcome of ``p`` or None, without touching the state."""
        pk = self._packed(p)
        v = kernels.peek(self.xs, self.zs, self.r, self.n, pk.x, pk.z, pk.sign)
        return None if v < 0 else int(v)

    def measure_z(self, q: int) -> int:
        return self.measure_pauli(PauliString.single(self.n, q, "Z"))[0]

    def measure_x(self, q: int) -> int:
        return self.measure_pauli(PauliString.single(self.n, q, "X"))[0]

    # ------------------------------------------------------------------
    def _row(self, i: int) -> PauliString:
        return PauliString(self.n, _from_words(self.xs[i]), _from_words(self.zs[i]),
                           -1 if self.r[i] else 1)

    def stabilizers(self) -> list[PauliString]:
        return [self._row(i) for i in range(self.n, 2 * self.n)]

    def destabilizers(self) -> list[PauliString]:
        return [self._row(i) for i in range(self.n)]

    def extend(self, m: int) -> "Tableau":
        """New tableau with ``m`` extra qubits in ``|0>`` appended."""
        n2 = self.n + m
        t = Tableau(n2, self.rng, self.bits)
        for i in range(self.n):
            for dst, src in ((i, i), (n2 + i, self.n + i)):
                t.xs[dst, :self.W] = self.xs[src]
                t.zs[dst, :self.W] = self.zs[src]
                t.r[dst] = self.r[src]
        return t


def canonical_generators(gens: Sequence[PauliString]) -> tuple[PauliString, ...]:
    """Signed reduced echelon form of a commuting generator set.

    Two sets describe the same stabilizer group (signs included) exactly
    when their canonical forms are equal.
    """
    rows = list(gens)
    if not rows:
        return ()
    n = rows[0].n
    out: list[PauliString] = []
    for col in range(2 * n):
        bit_of = (lambda p, c=col: (p.x >> c) & 1) if col < n else (lambda p, c=col - n: (p.z >> c) & 1)
        idx = next((i for i, p in enumerate(rows) if bit_of(p)), None)
        if idx is None:
            continue
        piv = rows.pop(idx)
        rows = [multiply(p, piv) if bit_of(p) else p for p in rows]
        out = [multiply(p, piv) if bit_of(p) else p for p in out]
        out.append(piv)
    if any(not p.is_identity for p in rows):
        raise AssertionError("unreachable: leftover non-identity row")
    if any(p.sign < 0 for p in rows):
        raise ValueError("generator set contains -I")
    return tuple(out)


def same_state(a: Sequence[PauliString], b: Sequence[PauliString]) -> bool:
    return canonical_generators(a) == canonical_generators(b)


# ----------------------------------------------------------------------
# Bell-pair registers


@dataclass
class BellRegister:
    """``n`` Bell pairs; Alice holds qubits ``0..n-1``, Bob ``n..2n-1``."""

    n: int
    tableau: Tableau
    pairs: tuple[tuple[int, int], ...] = field(default=())

    def alice(self, i: int) -> int:
        return self.pairs[i][0]

    def bob(self, i: int) -> int:
        return self.pairs[i][1]

    def alice_pauli(self, p: PauliString) -> PauliString:
        """Embed an ``n``-qubit string on Alice's half."""
        return p.embed(2 * self.n, [a for a, _ in self.pairs])

    def bob_pauli(self, p: PauliString) -> PauliString:
        return p.embed(2 * self.n, [b for _, b in self.pairs])


def new_bell_register(n: int, seed: int | None = None, trial: int = 0,
                      bits: Iterator[int] | None = None) -> BellRegister:
    """``n`` fresh ``|Phi+>`` pairs (stabilized by ``+XX`` and ``+ZZ``)."""
    if n < 1:
        raise ValueError("need at least one Bell pair")
    rng = trial_stream(seed if seed is not None else 0, trial)
    t = Tableau(2 * n, rng, bits)
    # write the Bell tableau directly: stabilizers XX, ZZ; destabilizers Z_a, X_b
    t.xs[:] = 0
    t.zs[:] = 0
    N = 2 * n
    for i in range(n):
        a, b = i, n + i
        wa, ba = divmod(a, 64)
        wb, bb = divmod(b, 64)
        t.zs[a, wa] |= np.uint64(1 << ba)
        t.xs[n + i, wb] |= np.uint64(1 << bb)
        t.xs[N + a, wa] |= np.uint64(1 << ba)
        t.xs[N + a, wb] |= np.uint64(1 << bb)
        t.zs[N + n + i, wa] |= np.uint64(1 << ba)
        t.zs[N + n + i, wb] |= np.uint64(1 << bb)
    return BellRegister(n, t, tuple((i, n + i) for i in range(n)))


_RESIDUAL = {(0, 0): "I", (0, 1): "X", (1, 0): "Z", (1, 1): "Y"}


def pair_residual(t: Tableau, a: int, b: int) -> str:
    """Pauli ``E`` with ``(I (x) E)|Phi+>`` equal to the state of qubits ``a, b``."""
    xx = PauliString(t.n, (1 << a) | (1 << b), 0)
    zz = PauliString(t.n, 0, (1 << a) | (1 << b))
    sx = t.peek_pauli(xx)
    sz = t.peek_pauli(zz)
    if sx is None or sz is None:
        raise ContractError(f"qubits ({a}, {b}) are entangled with the rest of the register")
    return _RESIDUAL[(sx, sz)]


def bell_residual(reg: BellRegister, pair: int) -> str:
    a, b = reg.pairs[pair]
    return pair_residual(reg.tableau, a, b)


def group_rank(gens: Sequence[PauliString]) -> int:
    return gf2_rank(symplectic_vector(p) for p in gens)
