"""Block stabilizer codes turned into measurement-based distillation recipes.

Given a code, this module derives logical operators from the standard form,
the single-qubit decoding schedule with its classical phase masks, syndrome
handling and the combined recovery that folds Bob's correction into his
decoding outcomes.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from typing import Sequence

import numpy as np

from .gf2 import (
    CheckMatrix,
    PauliString,
    StandardForm,
    format_pauli,
    parse_code_text,
    standard_form,
    symplectic_product,
)


class UncorrectableSyndrome(ValueError):
    """The syndrome is not in the bounded-weight lookup table."""


class StabilizerCode:
    """An ``[[n, k, d]]`` code; ``d`` is declared metadata and never checked."""

    def __init__(self, generators: CheckMatrix, d: int = 1, name: str = ""):
        if d < 1:
            raise ValueError("declared distance must be >= 1")
        self.generators = generators
        self.n = generators.n
        self.k = self.n - len(generators)
        if self.k < 0:
            raise ValueError("more generators than qubits")
        self.d = d
        self.name = name or f"[[{self.n},{self.k},{d}]]"

    @classmethod
    def from_strings(cls, rows: Sequence[str], d: int = 1, name: str = "") -> "StabilizerCode":
        return cls(CheckMatrix.from_strings(rows), d, name)

    @classmethod
    def from_text(cls, text: str, d: int | None = None, name: str = "") -> "StabilizerCode":
        """Parse the code text format; a ``# d = 3`` comment sets the distance."""
        if d is None:
            d = 1
            for line in text.splitlines():
                s = line.strip().lstrip("#").strip().replace(" ", "")
                if s.startswith("d="):
                    d = int(s[2:])
        return cls(parse_code_text(text), d, name)

    @cached_property
    def std(self) -> StandardForm:
        return standard_form(self.generators)

    @property
    def rows(self) -> tuple[PauliString, ...]:
        return self.generators.rows

    def __repr__(self) -> str:
        return f"StabilizerCode({self.name})"


# ----------------------------------------------------------------------
# builtin codes

_BUILTIN = {
    "five_one_three": ("five_one_three.txt", 3),
    "nine_four_two": ("nine_four_two.txt", 2),
}


def builtin_code(name: str) -> StabilizerCode:
    key = name.replace("-", "_").removesuffix(".txt")
    if key not in _BUILTIN:
        raise KeyError(f"unknown builtin code {name!r}; choose from {sorted(_BUILTIN)}")
    fname, d = _BUILTIN[key]
    text = resources.files("stabdistill.codes").joinpath(fname).read_text()
    return StabilizerCode.from_text(text, d=d, name=key)


def load_code(spec: str) -> StabilizerCode:
    """A builtin name or a path to a code file."""
    key = spec.replace("-", "_").removesuffix(".txt")
    if key in _BUILTIN:
        return builtin_code(key)
    with open(spec, encoding="utf-8") as fh:
        return StabilizerCode.from_text(fh.read(), name=spec)


def parity_code(n: int) -> StabilizerCode:
    """``X_1 X_2 ... X_n``: the ``[[n, n-1, 2]]`` recurrence block."""
    if n < 2:
        raise ValueError("parity code needs n >= 2")
    return StabilizerCode.from_strings(["X" * n], d=2, name=f"parity{n}")


def z_type_code(h: np.ndarray, d: int = 1, name: str = "") -> StabilizerCode:
    """Z-type stabilizers from the rows of a binary parity-check matrix."""
    h = np.atleast_2d(np.asarray(h, dtype=np.uint8)) & 1
    rows = ["".join("Z" if b else "I" for b in row) for row in h]
    return StabilizerCode.from_strings(rows, d=d, name=name)


# ----------------------------------------------------------------------
# logical operators and decoding schedule


@dataclass(frozen=True)
class LogicalOperators:
    """Logical X and Z strings, in the permuted qubit order of the standard form."""

    lx: tuple[PauliString, ...]
    lz: tuple[PauliString, ...]
    column_perm: tuple[int, ...]

    def original(self) -> tuple[tuple[PauliString, ...], tuple[PauliString, ...]]:
        """The same operators on the code's own qubit labels."""
        n = len(self.column_perm)
        return (tuple(p.embed(n, self.column_perm) for p in self.lx),
                tuple(p.embed(n, self.column_perm) for p in self.lz))


def _bits_to_int(bits) -> int:
    return sum(int(b) << j for j, b in enumerate(bits))


def logical_operators(code: StabilizerCode) -> LogicalOperators:
    std = code.std
    n, r, m, k = std.n, std.r, std.m, std.k
    b = std.blocks
    A2T, CT, ET = b["A2"].T, b["C"].T, b["E"].T
    lx, lz = [], []
    for i in range(k):
        xbits = [0] * n
        zbits = [0] * n
        for j in range(m - r):
            xbits[r + j] = int(ET[i, j])
        xbits[m + i] = 1
        for j in range(r):
            zbits[j] = int(CT[i, j])
        lx.append(PauliString(n, _bits_to_int(xbits), _bits_to_int(zbits)))
        zb = [0] * n
        for j in range(r):
            zb[j] = int(A2T[i, j])
        zb[m + i] = 1
        lz.append(PauliString(n, 0, _bits_to_int(zb)))
    return LogicalOperators(tuple(lx), tuple(lz), std.column_perm)


@dataclass(frozen=True)
class DecodingSchedule:
    """Single-qubit measurements that turn the ``k`` logical qubits into physical ones.

    Indices are positions in the standard form's permuted order; ``qubit``
    maps them back to code labels.  Each mask is an integer over the ``n-k``
    measured positions (bit ``j`` is the ``j``-th measurement).
    """

    z_measured: tuple[int, ...]
    x_measured: tuple[int, ...]
    kept: tuple[int, ...]
    x_phase_masks: tuple[int, ...]
    z_phase_masks: tuple[int, ...]
    column_perm: tuple[int, ...]

    @property
    def measured(self) -> tuple[int, ...]:
        return self.z_measured + self.x_measured

    def qubit(self, position: int) -> int:
        return self.column_perm[position]

    def basis(self, j: int) -> str:
        """Basis of the ``j``-th measurement."""
        return "Z" if j < len(self.z_measured) else "X"


def decoding_schedule(code: StabilizerCode) -> DecodingSchedule:
    std = code.std
    r, m, n = std.r, std.m, std.n
    b = std.blocks
    A2T, CT, ET = b["A2"].T, b["C"].T, b["E"].T
    xm, zm = [], []
    for i in range(std.k):
        mx = 0
        for j in range(r):
            if CT[i, j]:
                mx |= 1 << j
        for j in range(m - r):
            if ET[i, j]:
                mx |= 1 << (r + j)
        mz = 0
        for j in range(r):
            if A2T[i, j]:
                mz |= 1 << j
        xm.append(mx)
        zm.append(mz)
    return DecodingSchedule(tuple(range(r)), tuple(range(r, m)), tuple(range(m, n)),
                            tuple(xm), tuple(zm), std.column_perm)


def phase_corrections(sched: DecodingSchedule, outcomes: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Phase bits ``(alpha_x, alpha_z)`` of every logical qubit."""
    m = len(sched.measured)
    if len(outcomes) != m:
        raise ValueError(f"expected {m} outcomes, got {len(outcomes)}")
    v = _bits_to_int(outcomes)
    ax = np.array([(mk & v).bit_count() & 1 for mk in sched.x_phase_masks], dtype=np.uint8)
    az = np.array([(mk & v).bit_count() & 1 for mk in sched.z_phase_masks], dtype=np.uint8)
    return ax, az


# ----------------------------------------------------------------------
# syndromes


def y_parity(code: StabilizerCode) -> np.ndarray:
    return np.array([g.y_count & 1 for g in code.rows], dtype=np.uint8)


def syndrome(code: StabilizerCode, s_a: Sequence[int], s_b: Sequence[int]) -> np.ndarray:
    """``c_i = s_A,i xor s_B,i xor [g_i has an odd number of Y]``."""
    m = len(code.rows)
    if len(s_a) != m or len(s_b) != m:
        raise ValueError(f"syndrome vectors must have length {m}")
    return (np.asarray(s_a, dtype=np.uint8) ^ np.asarray(s_b, dtype=np.uint8) ^ y_parity(code)) & 1


def error_syndrome(code: StabilizerCode, e: PauliString) -> int:
    """Syndrome of an error packed as an integer (bit ``i`` for generator ``i``)."""
    return sum(symplectic_product(g, e) << i for i, g in enumerate(code.rows))


def _syndrome_int(c) -> int:
    if isinstance(c, (int, np.integer)):
        return int(c)
    return _bits_to_int(np.asarray(c).astype(int).tolist())


def _single_qubit_moves(n: int):
    for q in range(n):
        for lab in "XYZ":
            yield PauliString.single(n, q, lab)


def syndrome_table(code: StabilizerCode, max_weight: int | None = None) -> dict[int, PauliString]:
    """Minimum-weight representative for each reachable syndrome.

    Breadth-first search over products of single-qubit Paulis; each BFS layer
    is one more unit of Pauli weight, so the first hit is a minimum-weight
    coset leader.  Ties go to the first error in (qubit, X/Y/Z) order.
    ``max_weight=None`` explores until every syndrome is reached.
    """
    n = code.n
    moves = [(p, error_syndrome(code, p)) for p in _single_qubit_moves(n)]
    table = {0: PauliString.identity(n)}
    frontier = deque([(0, PauliString.identity(n), 0)])
    full = 1 << len(code.rows)
    while frontier and len(table) < full:
        s, e, w = frontier.popleft()
        if max_weight is not None and w >= max_weight:
            continue
        for p, ps in moves:
            t = s ^ ps
            if t not in table:
                ne = PauliString(n, e.x ^ p.x, e.z ^ p.z)
                table[t] = ne
                frontier.append((t, ne, w + 1))
    return table


class SyndromeDecoder:
    """Lookup decoder bounded to weight ``t = floor((d-1)/2)`` by default."""

    def __init__(self, code: StabilizerCode, max_weight: int | None = -1):
        self.code = code
        if max_weight == -1:
            max_weight = (code.d - 1) // 2
        self.max_weight = max_weight
        self.table = syndrome_table(code, max_weight)

    def __call__(self, c, mode: str = "correct"):
        s = _syndrome_int(c)
        if mode == "detect":
            return s == 0
        if mode != "correct":
            raise ValueError(f"unknown mode {mode!r}")
        try:
            return self.table[s]
        except KeyError:
            raise UncorrectableSyndrome(f"syndrome {s:0{len(self.code.rows)}b} exceeds the lookup table") from None


def decode_syndrome(code: StabilizerCode, c, mode: str = "correct"):
    """Recovery for syndrome ``c`` (correct mode) or an accept flag (detect mode)."""
    return SyndromeDecoder(code)(c, mode)


# ----------------------------------------------------------------------
# combined recovery


def _label(x: int, z: int) -> str:
    return {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}[(x & 1, z & 1)]


def adjust_outcomes(sched: DecodingSchedule, b: Sequence[int], recovery: PauliString) -> np.ndarray:
    """Flip each outcome whose basis operator anticommutes with ``recovery``."""
    out = np.asarray(b, dtype=np.uint8).copy()
    for j, pos in enumerate(sched.measured):
        q = sched.qubit(pos)
        if sched.basis(j) == "Z":
            flip = (recovery.x >> q) & 1
        else:
            flip = (recovery.z >> q) & 1
        out[j] ^= flip
    return out


def integrated_recovery(code: StabilizerCode, b: Sequence[int], c, mode: str = "correct",
                        decoder: SyndromeDecoder | None = None,
                        sched: DecodingSchedule | None = None) -> tuple[np.ndarray, list[str]]:
    """Bob's recovery folded into his decoding outcomes.

    Returns ``(adjusted outcomes, final single-qubit Pauli per kept qubit)``;
    the final Pauli composes the phase fix with the recovery's own action on
    that kept qubit.
    """
    sched = sched or decoding_schedule(code)
    decoder = decoder or SyndromeDecoder(code)
    rec = decoder(c, "correct") if mode == "correct" else PauliString.identity(code.n)
    b2 = adjust_outcomes(sched, b, rec)
    ax, az = phase_corrections(sched, b2)
    finals = []
    for i, pos in enumerate(sched.kept):
        q = sched.qubit(pos)
        fx = ((rec.x >> q) & 1) ^ int(az[i])
        fz = ((rec.z >> q) & 1) ^ int(ax[i])
        finals.append(_label(fx, fz))
    return b2, finals


def standard_form_listing(code: StabilizerCode) -> str:
    """Text dump of the standard form and logical operators (permuted order)."""
    lo = logical_operators(code)
    out = [code.std.to_text().rstrip("\n")]
    for i, (x, z) in enumerate(zip(lo.lx, lo.lz)):
        out.append(f"X_L{i + 1} = {format_pauli(x)}")
        out.append(f"Z_L{i + 1} = {format_pauli(z)}")
    return "\n".join(out) + "\n"
