"""Quantum convolutional codes over GF(2) Laurent polynomials.

A code is a list of shift-invariant generators, each a row of ``2n``
Laurent polynomials ``(X part | Z part)``; the term ``D^e`` places the Pauli
``e`` frames later.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from itertools import product
from typing import Sequence

import numpy as np

from .distillation import NoiseSpec, ProtocolResult, draw_errors
from .gf2 import PauliString
from .rng import CHUNK, run_chunks, stream
from .tableau import PackedPauli, new_bell_register, pair_residual


# ----------------------------------------------------------------------
# Laurent polynomials


@dataclass(frozen=True)
class LaurentPoly:
    """``D^low * (b_0 + b_1 D + ...)`` with ``bits = sum b_i 2^i``.

    Canonical: ``bits`` is odd, or zero with ``low == 0``.
    """

    low: int = 0
    bits: int = 0

    def __post_init__(self):
        if self.bits < 0:
            raise ValueError("bits must be non-negative")
        if self.bits == 0:
            object.__setattr__(self, "low", 0)
            return
        tz = (self.bits & -self.bits).bit_length() - 1
        if tz:
            object.__setattr__(self, "bits", self.bits >> tz)
            object.__setattr__(self, "low", self.low + tz)

    # construction -----------------------------------------------------
    @classmethod
    def zero(cls) -> "LaurentPoly":
        return cls()

    @classmethod
    def one(cls) -> "LaurentPoly":
        return cls(0, 1)

    @classmethod
    def monomial(cls, e: int) -> "LaurentPoly":
        return cls(e, 1)

    @classmethod
    def from_terms(cls, exps) -> "LaurentPoly":
        exps = [int(e) for e in exps]
        if not exps:
            return cls()
        lo = min(exps)
        bits = 0
        for e in exps:
            bits ^= 1 << (e - lo)
        return cls(lo, bits)

    @classmethod
    def parse(cls, text: str) -> "LaurentPoly":
        s = text.replace(" ", "").replace("{", "").replace("}", "").replace("(", "").replace(")", "")
        if s in ("", "0"):
            return cls()
        exps = []
        for tok in s.split("+"):
            if tok == "1":
                exps.append(0)
            elif tok == "D":
                exps.append(1)
            elif tok.startswith("D^"):
                try:
                    exps.append(int(tok[2:]))
                except ValueError:
                    raise ValueError(f"bad exponent in {text!r}") from None
            else:
                raise ValueError(f"cannot parse term {tok!r} of {text!r}")
        return cls.from_terms(exps)

    # queries ----------------------------------------------------------
    def terms(self) -> list[int]:
        out = []
        b, i = self.bits, 0
        while b:
            if b & 1:
                out.append(self.low + i)
            b >>= 1
            i += 1
        return out

    @property
    def is_zero(self) -> bool:
        return self.bits == 0

    def __bool__(self) -> bool:
        return self.bits != 0

    @property
    def is_monomial(self) -> bool:
        return self.bits == 1

    @property
    def high(self) -> int:
        return self.low + self.bits.bit_length() - 1 if self.bits else 0

    @property
    def span(self) -> int:
        return self.high - self.low if self.bits else 0

    # arithmetic -------------------------------------------------------
    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        if not self.bits:
            return other
        if not other.bits:
            return self
        lo = min(self.low, other.low)
        return LaurentPoly(lo, (self.bits << (self.low - lo)) ^ (other.bits << (other.low - lo)))

    __sub__ = __add__

    def __mul__(self, other: "LaurentPoly") -> "LaurentPoly":
        a, b = self.bits, other.bits
        if not a or not b:
            return LaurentPoly()
        if a.bit_count() > b.bit_count():
            a, b = b, a
        acc, i = 0, 0
        while a:
            if a & 1:
                acc ^= b << i
            a >>= 1
            i += 1
        return LaurentPoly(self.low + other.low, acc)

    def shift(self, k: int) -> "LaurentPoly":
        return LaurentPoly(self.low + k, self.bits) if self.bits else self

    def reverse(self) -> "LaurentPoly":
        """``f(D) -> f(D^-1)``."""
        return LaurentPoly.from_terms(-e for e in self.terms())

    def __str__(self) -> str:
        if not self.bits:
            return "0"
        parts = []
        for e in self.terms():
            parts.append("1" if e == 0 else "D" if e == 1 else f"D^{e}")
        return "+".join(parts)

    def __repr__(self) -> str:
        return f"LaurentPoly({self})"


def add(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    return a + b


def mul(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    return a * b


def reverse(a: LaurentPoly) -> LaurentPoly:
    return a.reverse()


Row = tuple[LaurentPoly, ...]


def format_matrix(rows: Sequence[Row]) -> str:
    """Rows in the text syntax ``a, b, c | d, e, f``."""
    out = []
    for row in rows:
        n = len(row) // 2
        out.append(", ".join(map(str, row[:n])) + " | " + ", ".join(map(str, row[n:])))
    return "\n".join(out) + "\n"


def parse_matrix(text: str) -> list[Row]:
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.count("|") != 1:
            raise ValueError(f"row {line!r} needs exactly one '|'")
        left, right = line.split("|")
        xs = [LaurentPoly.parse(t) for t in left.split(",")]
        zs = [LaurentPoly.parse(t) for t in right.split(",")]
        if len(xs) != len(zs):
            raise ValueError(f"row {line!r} has unequal X and Z widths")
        rows.append(tuple(xs + zs))
    if not rows:
        raise ValueError("no rows found")
    if len({len(r) for r in rows}) != 1:
        raise ValueError("rows have different widths")
    return rows


def conv_commute(gi: Row, gj: Row) -> LaurentPoly:
    """``x_i(D) z_j(D^-1)^T + z_i(D) x_j(D^-1)^T``; zero iff they commute at every shift."""
    if len(gi) != len(gj) or len(gi) % 2:
        raise ValueError("generators must have the same frame width")
    n = len(gi) // 2
    acc = LaurentPoly()
    for q in range(n):
        acc = acc + gi[q] * gj[n + q].reverse() + gi[n + q] * gj[q].reverse()
    return acc


# ----------------------------------------------------------------------
# codes


@dataclass(frozen=True)
class ConvCode:
    n: int
    gens: tuple[Row, ...]

    def __post_init__(self):
        for g in self.gens:
            if len(g) != 2 * self.n:
                raise ValueError("every generator needs 2n entries")
        for i, a in enumerate(self.gens):
            for j in range(i, len(self.gens)):
                if conv_commute(a, self.gens[j]):
                    raise ValueError(f"generators {i} and {j} do not commute at every shift")

    @classmethod
    def from_text(cls, text: str) -> "ConvCode":
        rows = parse_matrix(text)
        return cls(len(rows[0]) // 2, tuple(rows))

    @property
    def k(self) -> int:
        return self.n - len(self.gens)

    @property
    def low(self) -> int:
        return min((e.low for g in self.gens for e in g if e), default=0)

    @property
    def high(self) -> int:
        return max((e.high for g in self.gens for e in g if e), default=0)

    @property
    def constraint_len(self) -> int:
        return self.high - self.low

    def to_text(self) -> str:
        return format_matrix(self.gens)

    def frame_paulis(self, i: int) -> list[tuple[int, PauliString]]:
        """Generator ``i`` as (frame offset, n-qubit Pauli) pieces, offsets from ``low``."""
        g = self.gens[i]
        out = {}
        for q in range(self.n):
            for e in g[q].terms():
                out.setdefault(e - self.low, [0, 0])[0] |= 1 << q
            for e in g[self.n + q].terms():
                out.setdefault(e - self.low, [0, 0])[1] |= 1 << q
        return sorted((f, PauliString(self.n, x, z)) for f, (x, z) in out.items())

    def __str__(self) -> str:
        return self.to_text()


def rate_one_third_code() -> ConvCode:
    """The rate-1/3 code with generators ``XXX ZYX`` and ``ZZZ YXZ``."""
    from importlib import resources

    return ConvCode.from_text(resources.files("stabdistill.codes").joinpath("rate_one_third.txt").read_text())


# ----------------------------------------------------------------------
# standard form


@dataclass(frozen=True)
class EliminationStep:
    label: str
    matrix: tuple[Row, ...]

    def to_text(self) -> str:
        return f"# {self.label}\n" + format_matrix(self.matrix)


@dataclass(frozen=True)
class SeriesReport:
    """Polynomial-only elimination stopped: no monomial pivot is available.

    ``entries`` are the remaining non-zero candidates of the pivot column
    block; finishing would need a series multiplier (e.g. ``1/(1+D)``).
    """

    stage: str
    pivot: int
    entries: tuple[LaurentPoly, ...]
    steps: tuple[EliminationStep, ...]
    ok: bool = False

    @property
    def message(self) -> str:
        ent = ", ".join(map(str, self.entries))
        return (f"{self.stage}-part pivot {self.pivot + 1}: no monomial entry among [{ent}]; "
                "finite elimination needs series entries")


@dataclass(frozen=True)
class ConvStandardForm:
    source: ConvCode
    r: int
    column_perm: tuple[int, ...]
    matrix: tuple[Row, ...]
    steps: tuple[EliminationStep, ...]
    ok: bool = True

    @property
    def n(self) -> int:
        return self.source.n

    @property
    def m(self) -> int:
        return len(self.matrix)

    @property
    def k(self) -> int:
        return self.n - self.m

    @property
    def code(self) -> ConvCode:
        return ConvCode(self.n, self.matrix)

    def block(self, name: str) -> list[list[LaurentPoly]]:
        r, m, n = self.r, self.m, self.n
        X = [list(row[:n]) for row in self.matrix]
        Z = [list(row[n:]) for row in self.matrix]
        sl = {
            "A1": (X, slice(0, r), slice(r, m)),
            "A2": (X, slice(0, r), slice(m, n)),
            "B": (Z, slice(0, r), slice(0, r)),
            "C": (Z, slice(0, r), slice(m, n)),
            "D": (Z, slice(r, m), slice(0, r)),
            "E": (Z, slice(r, m), slice(m, n)),
        }[name]
        M, rs, cs = sl
        return [row[cs] for row in M[rs]]

    def to_text(self) -> str:
        return format_matrix(self.matrix)


def _row_add(a: Row, b: Row, f: LaurentPoly | None = None) -> Row:
    if f is None:
        return tuple(x + y for x, y in zip(a, b))
    return tuple(x + f * y for x, y in zip(a, b))


def _row_scale(a: Row, f: LaurentPoly) -> Row:
    return tuple(f * x for x in a)


def _paren(p: LaurentPoly) -> str:
    s = str(p)
    return f"({s})" if "+" in s else s


def conv_standard_form(code: ConvCode) -> ConvStandardForm | SeriesReport:
    """Eliminate to ``[I A1 A2 | B 0 C; 0 0 0 | D I E]`` with finite multipliers.

    Pivot search scans rows from the pivot index, then columns, for a
    monomial entry.  A monomial entry ``D^k`` below the pivot is cleared by
    ``row -> D^-k row + pivot row``; every other entry ``e`` by
    ``row -> row + e pivot row``.  Each operation is recorded as a step.
    """
    n = code.n
    M = [tuple(r) for r in code.gens]
    rows = len(M)
    perm = list(range(n))
    steps: list[EliminationStep] = []

    def record(label: str) -> None:
        steps.append(EliminationStep(label, tuple(M)))

    def swap_cols(a: int, b: int) -> None:
        perm[a], perm[b] = perm[b], perm[a]
        order = list(range(n))
        order[a], order[b] = b, a
        for i in range(rows):
            row = M[i]
            M[i] = tuple(row[order[j]] for j in range(n)) + tuple(row[n + order[j]] for j in range(n))
        record("Permute columns (" + ",".join(str(j + 1) for j in range(n)) + ") -> ("
               + ",".join(str(order[j] + 1) for j in range(n)) + ")")

    def eliminate(i: int, col: int, targets) -> None:
        e = M[i][col]
        if e.low != 0:
            M[i] = _row_scale(M[i], LaurentPoly.monomial(-e.low))
            record(f"Row {i + 1} -> D^{-e.low} x Row {i + 1}")
        for l in targets:
            if l == i or not M[l][col]:
                continue
            ent = M[l][col]
            if l > i and ent.is_monomial:
                k = ent.low
                if k:
                    M[l] = _row_add(_row_scale(M[l], LaurentPoly.monomial(-k)), M[i])
                    record(f"Row {l + 1} -> D^{-k} x Row {l + 1} + Row {i + 1}")
                else:
                    M[l] = _row_add(M[l], M[i])
                    record(f"Row {l + 1} -> Row {l + 1} + Row {i + 1}")
            else:
                M[l] = _row_add(M[l], M[i], ent)
                lab = f"Row {i + 1}" if ent.is_monomial and ent.low == 0 else f"{_paren(ent)} x Row {i + 1}"
                record(f"Row {l + 1} -> Row {l + 1} + {lab}")

    def find(start: int, offset: int):
        for row in range(start, rows):
            for col in range(start, n):
                if M[row][offset + col].is_monomial:
                    return row, col
        return None

    def leftovers(start: int, offset: int) -> tuple[LaurentPoly, ...]:
        return tuple(M[row][offset + col] for row in range(start, rows) for col in range(start, n)
                     if M[row][offset + col])

    r = 0
    for i in range(rows):
        hit = find(i, 0)
        if hit is None:
            rest = leftovers(i, 0)
            if rest:
                return SeriesReport("X", i, rest, tuple(steps))
            break
        row, col = hit
        if col != i:
            swap_cols(i, col)
        if row != i:
            M[i], M[row] = M[row], M[i]
            record(f"Swap rows {i + 1} and {row + 1}")
        eliminate(i, i, range(rows))
        r = i + 1

    for i in range(r, rows):
        hit = find(i, n)
        if hit is None:
            rest = leftovers(i, n)
            return SeriesReport("Z", i, rest, tuple(steps))
        row, col = hit
        if col != i:
            swap_cols(i, col)
        if row != i:
            M[i], M[row] = M[row], M[i]
            record(f"Swap rows {i + 1} and {row + 1}")
        eliminate(i, n + i, range(rows))

    return ConvStandardForm(code, r, tuple(perm), tuple(M), tuple(steps))


# ----------------------------------------------------------------------
# logical operators and frame decoding


def conv_logical_operators(std: ConvStandardForm) -> tuple[list[Row], list[Row]]:
    """Rows ``L_X = [0 E' I | C' 0 0]`` and ``L_Z = [0 0 0 | A' 0 I]`` (permuted order)."""
    n, r, m, k = std.n, std.r, std.m, std.k
    A2, C, E = std.block("A2"), std.block("C"), std.block("E")
    zero, one = LaurentPoly(), LaurentPoly.one()
    lx, lz = [], []
    for i in range(k):
        x = [zero] * n
        z = [zero] * n
        for j in range(m - r):
            x[r + j] = E[j][i].reverse()
        x[m + i] = one
        for j in range(r):
            z[j] = C[j][i].reverse()
        lx.append(tuple(x + z))
        z2 = [zero] * n
        for j in range(r):
            z2[j] = A2[j][i].reverse()
        z2[m + i] = one
        lz.append(tuple([zero] * n + z2))
    return lx, lz


class SpanError(ValueError):
    """The outcome window does not cover the phase dependencies."""


@dataclass(frozen=True)
class FrameDecoder:
    """Per-frame measurement bases and phase dependency lists.

    Positions are in permuted order: ``0..r-1`` measured in Z, ``r..m-1``
    in X, ``m..n-1`` kept.  ``x_deps[i]`` lists ``(frame offset, measured
    position)`` pairs whose outcomes add to the X phase of kept qubit ``i``.
    """

    std: ConvStandardForm
    lx: tuple[Row, ...]
    lz: tuple[Row, ...]
    x_deps: tuple[tuple[tuple[int, int], ...], ...]
    z_deps: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def bases(self) -> tuple[str, ...]:
        return tuple("Z" if j < self.std.r else "X" for j in range(self.std.m))

    @property
    def span(self) -> int:
        offs = [o for d in self.x_deps + self.z_deps for o, _ in d]
        return (max(offs) - min(offs)) if offs else 0

    @property
    def offsets(self) -> tuple[int, int]:
        offs = [o for d in self.x_deps + self.z_deps for o, _ in d] or [0]
        return min(offs), max(offs)


def frame_decoder(std: ConvStandardForm) -> FrameDecoder:
    lx, lz = conv_logical_operators(std)
    n, r, m = std.n, std.r, std.m
    xd, zd = [], []
    for i in range(std.k):
        deps = []
        for j in range(r):  # Z-measured: Z part of L_X
            deps += [(e, j) for e in lx[i][n + j].terms()]
        for j in range(r, m):  # X-measured: X part of L_X
            deps += [(e, j) for e in lx[i][j].terms()]
        xd.append(tuple(sorted(deps)))
        deps = [(e, j) for j in range(r) for e in lz[i][n + j].terms()]
        zd.append(tuple(sorted(deps)))
    return FrameDecoder(std, tuple(lx), tuple(lz), tuple(xd), tuple(zd))


def frame_phases(dec: FrameDecoder, k: int, outcomes, kept: int = 0) -> tuple[int, int]:
    """``(x_phase, z_phase)`` of kept qubit ``kept`` in frame ``k``.

    ``outcomes[f][j]`` is the outcome of measured position ``j`` in frame ``f``.
    """
    out = np.asarray(outcomes)
    lo, hi = dec.offsets
    if k + lo < 0 or k + hi >= out.shape[0]:
        raise SpanError(f"frame {k} needs outcomes from frames {k + lo}..{k + hi}")
    x = sum(int(out[k + o, j]) for o, j in dec.x_deps[kept]) & 1
    z = sum(int(out[k + o, j]) for o, j in dec.z_deps[kept]) & 1
    return x, z


# ----------------------------------------------------------------------
# truncated streams


def _row_frame_masks(row: Row, n: int, perm: Sequence[int] | None = None) -> dict[int, tuple[int, int]]:
    """Frame offset -> (x mask, z mask) over the code's own qubit labels."""
    perm = list(perm) if perm is not None else list(range(n))
    out: dict[int, list[int]] = {}
    for j in range(n):
        q = perm[j]
        for e in row[j].terms():
            out.setdefault(e, [0, 0])[0] |= 1 << q
        for e in row[n + j].terms():
            out.setdefault(e, [0, 0])[1] |= 1 << q
    return {f: (v[0], v[1]) for f, v in out.items()}


class ConvStream:
    """The code instantiated on ``frames`` frames with open boundaries."""

    def __init__(self, code: ConvCode, frames: int):
        self.code, self.frames, self.n = code, frames, code.n
        std = conv_standard_form(code)
        if not isinstance(std, ConvStandardForm):
            raise ValueError(std.message)
        self.std = std
        self.dec = frame_decoder(std)
        self.m = code.constraint_len
        lo = code.low
        # generator pieces as {offset: (x, z)} relative to the shift origin
        self.pieces = [{f - lo: v for f, v in _row_frame_masks(g, code.n).items()} for g in code.gens]
        self.shifts = frames - self.m
        if self.shifts < 1:
            raise ValueError("not enough frames for one generator shift")
        perm = std.column_perm
        self.lx_pieces = [_row_frame_masks(r, code.n, perm) for r in self.dec.lx]
        self.lz_pieces = [_row_frame_masks(r, code.n, perm) for r in self.dec.lz]
        plo, phi = self.dec.offsets
        self.phase_lo, self.phase_hi = plo, phi
        # frames whose logical operators and phase windows fit the stream
        self.decodable = [f for f in range(frames)
                          if f + min(plo, 0) >= 0 and f + max(phi, 0) < frames
                          and all(f + o >= 0 and f + o < frames for p in self.lx_pieces + self.lz_pieces for o in p)]
        self.interior = [f for f in self.decodable if self.m <= f < frames - self.m]

    def generator(self, i: int, t: int) -> PauliString:
        """Generator ``i`` shifted to start at frame ``t`` (``n * frames`` qubits)."""
        N = self.n * self.frames
        x = z = 0
        for f, (px, pz) in self.pieces[i].items():
            x |= px << (self.n * (t + f))
            z |= pz << (self.n * (t + f))
        return PauliString(N, x, z)

    def logical(self, kind: str, frame: int, i: int = 0) -> PauliString:
        pieces = (self.lx_pieces if kind == "X" else self.lz_pieces)[i]
        N = self.n * self.frames
        x = z = 0
        for f, (px, pz) in pieces.items():
            x |= px << (self.n * (frame + f))
            z |= pz << (self.n * (frame + f))
        return PauliString(N, x, z)


# ----------------------------------------------------------------------
# sliding-window syndrome decoder


def _symp_small(ax: int, az: int, bx: int, bz: int) -> int:
    return ((ax & bz) ^ (az & bx)).bit_count() & 1


class SlidingDecoder:
    """Minimum-weight window decoder over one constraint length.

    Shifts are processed in order.  At shift ``t`` the residual syndrome is
    cleared with a single-frame Pauli on the last frame the shift touches
    (at the first shift, on any of its frames), choosing the candidate
    that leaves the fewest residual syndrome bits on shifts ``t..t+m``,
    then the lowest weight.
    """

    def __init__(self, stream: ConvStream):
        self.s = stream
        n, m = stream.n, stream.m
        self.ng = len(stream.pieces)
        self.paulis = [(x, z) for x in range(1 << n) for z in range(1 << n)]
        self._tables: dict = {}

    def effect(self, frame_off: int, px: int, pz: int, shift_off: int) -> int:
        """Syndrome bits on shift ``t + shift_off`` of a Pauli on frame ``t + frame_off``."""
        d = frame_off - shift_off
        bits = 0
        for i, pieces in enumerate(self.s.pieces):
            if d in pieces:
                gx, gz = pieces[d]
                bits |= _symp_small(px, pz, gx, gz) << i
        return bits

    def table(self, first: bool, visible: int):
        key = (first, visible)
        if key in self._tables:
            return self._tables[key]
        m, ng = self.s.m, self.ng
        frame_offs = list(range(m + 1)) if first else [m]
        cands = []
        for fo in frame_offs:
            for px, pz in self.paulis:
                if px == 0 and pz == 0:
                    continue
                eff = tuple(self.effect(fo, px, pz, so) for so in range(visible))
                cands.append((fo, px, pz, eff, (px | pz).bit_count()))
        size = 1 << (ng * visible)
        choice = np.full(size, -1, dtype=np.int64)
        for key_i in range(size):
            res = tuple((key_i >> (ng * so)) & ((1 << ng) - 1) for so in range(visible))
            if res[0] == 0:
                continue
            best = None
            for ci, (fo, px, pz, eff, w) in enumerate(cands):
                if eff[0] != res[0]:
                    continue
                left = sum((a ^ b).bit_count() for a, b in zip(res, eff))
                score = (left, w, ci)
                if best is None or score < best:
                    best = score
            if best is not None:
                choice[key_i] = best[2]
        self._tables[key] = (cands, choice)
        return cands, choice

    def decode(self, synd: np.ndarray):
        """``synd`` shape ``(T, shifts)`` of generator-bit integers.

        Returns per-frame recovery masks ``(rx, rz)`` of shape ``(T, frames)``.
        """
        T, S = synd.shape
        m, ng = self.s.m, self.ng
        res = synd.astype(np.int64).copy()
        rx = np.zeros((T, self.s.frames), dtype=np.int64)
        rz = np.zeros((T, self.s.frames), dtype=np.int64)
        for t in range(S):
            visible = min(m + 1, S - t)
            cands, choice = self.table(t == 0, visible)
            key = np.zeros(T, dtype=np.int64)
            for so in range(visible):
                key |= res[:, t + so] << (ng * so)
            pick = choice[key]
            for ci in np.unique(pick[pick >= 0]):
                sel = pick == ci
                fo, px, pz, eff, _ = cands[ci]
                rx[sel, t + fo] ^= px
                rz[sel, t + fo] ^= pz
                for so in range(visible):
                    if eff[so]:
                        res[sel, t + so] ^= eff[so]
        return rx, rz


# ----------------------------------------------------------------------
# Monte Carlo


def _stream_syndromes(st: ConvStream, ex: np.ndarray, ez: np.ndarray) -> np.ndarray:
    """``ex, ez`` shape ``(T, frames)`` of per-frame masks -> ``(T, shifts)``."""
    T = ex.shape[0]
    out = np.zeros((T, st.shifts), dtype=np.int64)
    for i, pieces in enumerate(st.pieces):
        for t in range(st.shifts):
            acc = np.zeros(T, dtype=np.int64)
            for f, (gx, gz) in pieces.items():
                acc ^= np.bitwise_count((ex[:, t + f] & gz) ^ (ez[:, t + f] & gx)).astype(np.int64)
            out[:, t] |= (acc & 1) << i
    return out


def _logical_bits(st: ConvStream, pieces: dict, frame: int, ex, ez) -> np.ndarray:
    acc = np.zeros(ex.shape[0], dtype=np.int64)
    for f, (lx, lz) in pieces.items():
        acc ^= np.bitwise_count((ex[:, frame + f] & lz) ^ (ez[:, frame + f] & lx)).astype(np.int64)
    return (acc & 1).astype(np.uint8)


def conv_frame_residuals(st: ConvStream, ex: np.ndarray, ez: np.ndarray, mode: str = "correct"):
    """Residual bits ``(ok, out_x, out_z)`` on interior frames for packed frame errors."""
    synd = _stream_syndromes(st, ex, ez)
    if mode == "detect":
        ok = (synd == 0).all(axis=1)
        fx, fz = ex, ez
    else:
        ok = np.ones(ex.shape[0], dtype=bool)
        rx, rz = SlidingDecoder(st).decode(synd)
        fx, fz = ex ^ rx, ez ^ rz
    k = st.code.k
    ox = np.zeros((ex.shape[0], len(st.interior) * k), dtype=np.uint8)
    oz = np.zeros_like(ox)
    for a, f in enumerate(st.interior):
        for i in range(k):
            ox[:, a * k + i] = _logical_bits(st, st.lz_pieces[i], f, fx, fz)
            oz[:, a * k + i] = _logical_bits(st, st.lx_pieces[i], f, fx, fz)
    return ok, ox, oz


def _pack_frames(bits: np.ndarray, n: int) -> np.ndarray:
    T, N = bits.shape
    b = bits.reshape(T, N // n, n).astype(np.int64)
    return (b << np.arange(n, dtype=np.int64)).sum(axis=2)


def _conv_result(st: ConvStream, spec: NoiseSpec, seed, mode: str) -> ProtocolResult:
    return ProtocolResult(f"conv{st.n}x{st.frames}", st.n * st.frames, len(st.interior) * st.code.k,
                          mode, p_in=spec.p, seed=seed)


def _conv_frame_chunk(code: ConvCode, frames: int, mode: str, spec: NoiseSpec, seed: int,
                      chunk: int, size: int) -> ProtocolResult:
    from .distillation import classes

    st = ConvStream(code, frames)
    rng = stream(seed, chunk)
    ex, ez = draw_errors(rng, size, st.n * frames, spec)
    ok, ox, oz = conv_frame_residuals(st, _pack_frames(ex, st.n), _pack_frames(ez, st.n), mode)
    res = _conv_result(st, spec, seed, mode)
    res.trials = size
    res.successes = int(ok.sum())
    cl = classes(ox[ok], oz[ok])
    for i in range(res.k):
        res.residual_counts[i] = np.bincount(cl[:, i], minlength=4)
    return res


class ConvTableauEngine:
    """Full stabilizer simulation of the streamed protocol."""

    def __init__(self, code: ConvCode, frames: int, mode: str = "correct"):
        self.st = ConvStream(code, frames)
        self.mode = mode
        st = self.st
        self.N = st.n * frames
        self.gens = [(i, t) for t in range(st.shifts) for i in range(len(st.pieces))]
        self._ops: dict = {}
        self.decoder = SlidingDecoder(st)

    def _ops_for(self, side: int):
        if side in self._ops:
            return self._ops[side]
        st, N = self.st, self.N
        off = side * N
        qubits = list(range(off, off + N))
        gens = [PackedPauli.from_pauli(st.generator(i, t).embed(2 * N, qubits)) for i, t in self.gens]
        perm = st.std.column_perm
        meas = []
        for f in range(st.frames):
            for j, basis in enumerate(st.dec.bases):
                q = off + st.n * f + perm[j]
                meas.append(PackedPauli.from_pauli(PauliString.single(2 * N, q, basis)))
        self._ops[side] = (gens, meas)
        return self._ops[side]

    def _phases(self, outcomes: np.ndarray, f: int, i: int) -> tuple[int, int]:
        return frame_phases(self.st.dec, f, outcomes, i)

    def run_trial(self, ex_row, ez_row, seed: int, trial: int, bits=None):
        st, N = self.st, self.N
        n, k, m_meas = st.n, st.code.k, st.std.m
        perm = st.std.column_perm
        reg = new_bell_register(N, seed, trial, bits)
        t = reg.tableau
        ex_row, ez_row = np.asarray(ex_row), np.asarray(ez_row)
        if ex_row.any() or ez_row.any():
            xs = sum(int(b) << (N + i) for i, b in enumerate(ex_row))
            zs = sum(int(b) << (N + i) for i, b in enumerate(ez_row))
            t.apply_pauli(PauliString(2 * N, xs, zs))
        ga, ma = self._ops_for(0)
        gb, mb = self._ops_for(1)
        s_a = np.array([t.measure_pauli(g)[0] for g in ga], dtype=np.int64)
        a = np.array([t.measure_pauli(mm)[0] for mm in ma], dtype=np.uint8).reshape(st.frames, m_meas)
        for f in st.decodable:
            for i in range(k):
                px, pz = self._phases(a, f, i)
                q = n * f + perm[m_meas + i]
                if pz:
                    t.x(q)
                if px:
                    t.z(q)
        s_b = np.array([t.measure_pauli(g)[0] for g in gb], dtype=np.int64)
        c = s_a ^ s_b ^ np.array([st.generator(i, tt).y_count & 1 for i, tt in self.gens])
        ng = len(st.pieces)
        synd = np.zeros((1, st.shifts), dtype=np.int64)
        for idx, (i, tt) in enumerate(self.gens):
            synd[0, tt] |= int(c[idx]) << i
        if self.mode == "detect":
            if synd.any():
                return False, None
            rx = np.zeros((1, st.frames), dtype=np.int64)
            rz = rx.copy()
        else:
            rx, rz = self.decoder.decode(synd)
        b = np.array([t.measure_pauli(mm)[0] for mm in mb], dtype=np.uint8).reshape(st.frames, m_meas)
        # fold the recovery into Bob's outcomes, then apply its kept-qubit part
        for f in range(st.frames):
            for j, basis in enumerate(st.dec.bases):
                q = perm[j]
                bit = (int(rx[0, f]) >> q) & 1 if basis == "Z" else (int(rz[0, f]) >> q) & 1
                b[f, j] ^= bit
        for f in st.decodable:
            for i in range(k):
                px, pz = self._phases(b, f, i)
                qq = perm[m_meas + i]
                fx = ((int(rx[0, f]) >> qq) & 1) ^ pz
                fz = ((int(rz[0, f]) >> qq) & 1) ^ px
                q = N + n * f + qq
                if fx:
                    t.x(q)
                if fz:
                    t.z(q)
        labels = []
        for f in st.interior:
            for i in range(k):
                qq = n * f + perm[m_meas + i]
                labels.append(pair_residual(t, qq, N + qq))
        return True, labels


def _conv_tableau_chunk(code: ConvCode, frames: int, mode: str, spec: NoiseSpec, seed: int,
                        chunk: int, size: int) -> ProtocolResult:
    eng = ConvTableauEngine(code, frames, mode)
    st = eng.st
    rng = stream(seed, chunk)
    ex, ez = draw_errors(rng, size, st.n * frames, spec)
    res = _conv_result(st, spec, seed, mode)
    res.trials = size
    idx = {"I": 0, "X": 1, "Y": 2, "Z": 3}
    for j in range(size):
        ok, labels = eng.run_trial(ex[j], ez[j], seed, chunk * CHUNK + j)
        if ok:
            res.successes += 1
            for i, lab in enumerate(labels):
                res.residual_counts[i, idx[lab]] += 1
    return res


def run_conv_distillation(code: ConvCode, frames: int, spec: NoiseSpec, trials: int, seed: int,
                          mode: str = "correct", engine: str = "frame", workers: int = 1) -> ProtocolResult:
    """Stream ``frames`` frames of Bell pairs through the code; metrics on interior frames."""
    m = code.constraint_len
    if frames < m + 3:
        raise ValueError(f"need at least {m + 3} frames")
    if engine == "frame":
        fn = partial(_conv_frame_chunk, code, frames, mode, spec, seed)
    elif engine == "tableau":
        fn = partial(_conv_tableau_chunk, code, frames, mode, spec, seed)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    parts = run_chunks(fn, trials, workers)
    out = parts[0]
    for p in parts[1:]:
        out = out + p
    return out


def phase_perturbation(code: ConvCode, frames: int, frame: int, position: int) -> list[int]:
    """Frames whose decoded phases change when one decoding outcome flips."""
    st = ConvStream(code, frames)
    out = np.zeros((frames, st.std.m), dtype=np.uint8)
    flipped = out.copy()
    flipped[frame, position] = 1
    hit = []
    for f in st.decodable:
        for i in range(st.code.k):
            if frame_phases(st.dec, f, out, i) != frame_phases(st.dec, f, flipped, i):
                hit.append(f)
                break
    return hit


# ----------------------------------------------------------------------
# entanglement-assisted decoding for Laurent-series logical operators


@dataclass
class EAResult:
    result: ProtocolResult
    overhead: float
    block_errors: np.ndarray = field(default_factory=lambda: np.zeros(0))


def ea_overhead(m: int, N: int) -> float:
    if N <= m:
        raise ValueError("block length must exceed the degree of Q(D)")
    return 2 * m / (N - m)


def ea_decode_bits(q_poly: LaurentPoly, N: int, ex: np.ndarray, ez: np.ndarray,
                   flips_x: np.ndarray | None = None, flips_z: np.ndarray | None = None):
    """Residual bits of one block of ``N`` chained pairs.

    ``ex, ez`` (shape ``(T, N)``) are Bob's error bits on the chain; the
    first ``m`` pairs are joined to pre-shared pairs by parity
    measurements whose combined outcome flips are ``flips_x, flips_z``
    (shape ``(T, m)``).  Returns ``(res_x, res_z)`` for pairs ``m..N-1``.
    """
    if q_poly.is_zero:
        raise ValueError("Q(D) must be non-zero")
    q = q_poly.shift(-q_poly.low)
    m = q.span
    if N <= m:
        raise ValueError("block length must exceed the degree of Q(D)")
    coeffs = [e for e in q.terms() if e != m]
    T = ex.shape[0]
    fx = np.zeros((T, m), dtype=np.uint8) if flips_x is None else flips_x
    fz = np.zeros((T, m), dtype=np.uint8) if flips_z is None else flips_z
    # v_x[j]: inferred sign bit of X_j (x) X_j (flipped by Z errors), likewise v_z
    vx = np.zeros((T, N), dtype=np.uint8)
    vz = np.zeros((T, N), dtype=np.uint8)
    vx[:, :m] = ez[:, :m] ^ fx
    vz[:, :m] = ex[:, :m] ^ fz
    for j in range(m, N):
        base = j - m
        for e in coeffs:
            vx[:, j] ^= vx[:, base + e]
            vz[:, j] ^= vz[:, base + e]
    return ex[:, m:] ^ vz[:, m:], ez[:, m:] ^ vx[:, m:]


def gauge_errors(q_poly: LaurentPoly, N: int, rng: np.random.Generator, T: int):
    """Unknown-parity errors: random on the first ``m`` pairs, continued so that
    every window ``Q(D)`` shifted inside the block has even parity."""
    q = q_poly.shift(-q_poly.low)
    m = q.span
    coeffs = [e for e in q.terms() if e != m]
    gx = np.zeros((T, N), dtype=np.uint8)
    gz = np.zeros((T, N), dtype=np.uint8)
    if m:
        gx[:, :m] = rng.integers(0, 2, (T, m), dtype=np.uint8)
        gz[:, :m] = rng.integers(0, 2, (T, m), dtype=np.uint8)
    for j in range(m, N):
        for e in coeffs:
            gx[:, j] ^= gx[:, j - m + e]
            gz[:, j] ^= gz[:, j - m + e]
    return gx, gz


def _ea_chunk(q_poly: LaurentPoly, N: int, blocks: int, spec: NoiseSpec, seed: int,
              chunk: int, size: int):
    from .distillation import classes

    q = q_poly.shift(-q_poly.low)
    m = q.span
    rng = stream(seed, chunk)
    ex, ez = draw_errors(rng, size, N * blocks, spec)
    fl = rng.random((size, 2 * m * blocks)) < spec.meas_flip
    res = ProtocolResult(f"ea[{q}]", (N + m) * blocks, (N - m) * blocks, "assist", p_in=spec.p, seed=seed)
    res.trials = size
    res.successes = size
    outs = []
    berr = np.zeros((size, blocks), dtype=bool)
    for b in range(blocks):
        gx, gz = gauge_errors(q, N, rng, size)
        sl = slice(b * N, (b + 1) * N)
        fxb = fl[:, 2 * m * b: 2 * m * b + m].astype(np.uint8)
        fzb = fl[:, 2 * m * b + m: 2 * m * (b + 1)].astype(np.uint8)
        rx, rz = ea_decode_bits(q, N, ex[:, sl] ^ gx, ez[:, sl] ^ gz, fxb, fzb)
        outs.append((rx, rz))
        berr[:, b] = (rx | rz).any(axis=1)
    ox = np.concatenate([o[0] for o in outs], axis=1)
    oz = np.concatenate([o[1] for o in outs], axis=1)
    cl = classes(ox, oz)
    for i in range(res.k):
        res.residual_counts[i] = np.bincount(cl[:, i], minlength=4)
    return res, berr.sum(axis=0)


def ea_decode(q_poly: LaurentPoly, block_frames: int | None, spec: NoiseSpec, trials: int, seed: int,
              blocks: int = 2, workers: int = 1) -> EAResult:
    """Entanglement-assisted decoding of the chain ``Q(D)`` in blocks of ``N`` frames.

    ``block_frames=None`` uses ``N = 10 m``.  ``meas_flip`` in ``spec``
    flips the parity-measurement outcomes.
    """
    q = q_poly.shift(-q_poly.low)
    m = q.span
    N = block_frames if block_frames is not None else max(10 * m, 1)
    overhead = ea_overhead(m, N)
    parts = run_chunks(partial(_ea_chunk, q, N, blocks, spec, seed), trials, workers)
    res = parts[0][0]
    berr = parts[0][1].copy()
    for r2, b2 in parts[1:]:
        res = res + r2
        berr += b2
    res.extra["overhead"] = overhead
    return EAResult(res, overhead, berr)
