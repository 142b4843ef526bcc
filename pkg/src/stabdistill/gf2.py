"""Binary symplectic machinery: Pauli strings, check matrices and the standard form.

Pauli strings are stored as a pair of Python integers used as bit sets
(bit ``j`` is qubit ``j``), so row operations are word-wise XORs on
arbitrary-length integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

_CHARS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_LABELS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


class RankDeficiencyError(ValueError):
    """A generator set is not GF(2)-independent."""

    def __init__(self, row: int, message: str | None = None):
        self.row = row
        super().__init__(message or f"generator {row} is dependent on the preceding generators")


def _popcount(v: int) -> int:
    return v.bit_count()


def _mask(n: int) -> int:
    return (1 << n) - 1


def product_log_i(x1: int, z1: int, x2: int, z2: int) -> int:
    """Exponent of ``i`` (mod 4) picked up by the product ``P1 * P2``.

    Both factors are Hermitian Paulis written with ``Y = iXZ``.
    """
    y1 = x1 & z1
    xo = x1 & ~z1
    zo = ~x1 & z1
    pos = (y1 & z2 & ~x2) | (xo & z2 & x2) | (zo & x2 & ~z2)
    neg = (y1 & x2 & ~z2) | (xo & z2 & ~x2) | (zo & x2 & z2)
    return (_popcount(pos) - _popcount(neg)) & 3


@dataclass(frozen=True)
class PauliString:
    """An ``n``-qubit Pauli operator ``sign * P_0 P_1 ... P_{n-1}``."""

    n: int
    x: int = 0
    z: int = 0
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        m = _mask(self.n)
        if self.x & ~m or self.z & ~m or self.x < 0 or self.z < 0:
            raise DimensionError("x/z bits outside the qubit range")

    @classmethod
    def from_str(cls, text: str) -> "PauliString":
        text = text.strip()
        sign = 1
        if text[:1] in "+-" and text:
            sign = -1 if text[0] == "-" else 1
            text = text[1:]
        x = z = 0
        for j, ch in enumerate(text):
            try:
                xb, zb = _CHARS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli character {ch!r} in {text!r}") from None
            x |= xb << j
            z |= zb << j
        return cls(len(text), x, z, sign)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def single(cls, n: int, qubit: int, label: str) -> "PauliString":
        if not 0 <= qubit < n:
            raise IndexError(f"qubit {qubit} out of range for n={n}")
        xb, zb = _CHARS[label]
        return cls(n, xb << qubit, zb << qubit)

    @classmethod
    def from_bits(cls, x: Sequence[int], z: Sequence[int], sign: int = 1) -> "PauliString":
        if len(x) != len(z):
            raise DimensionError("x and z bit vectors differ in length")
        xi = sum(int(b & 1) << j for j, b in enumerate(x))
        zi = sum(int(b & 1) << j for j, b in enumerate(z))
        return cls(len(x), xi, zi, sign)

    def __str__(self) -> str:
        body = "".join(self[j] for j in range(self.n))
        return ("-" if self.sign < 0 else "+") + body

    def __getitem__(self, j: int) -> str:
        return _LABELS[((self.x >> j) & 1, (self.z >> j) & 1)]

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __neg__(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, -self.sign)

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def y_count(self) -> int:
        return _popcount(self.x & self.z)

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def x_bits(self) -> np.ndarray:
        return np.array([(self.x >> j) & 1 for j in range(self.n)], dtype=np.uint8)

    def z_bits(self) -> np.ndarray:
        return np.array([(self.z >> j) & 1 for j in range(self.n)], dtype=np.uint8)

    def transpose(self) -> "PauliString":
        """``Y^T = -Y``; X and Z are symmetric."""
        flip = -1 if self.y_count % 2 else 1
        return PauliString(self.n, self.x, self.z, self.sign * flip)

    def unsigned(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z)

    def commutes(self, other: "PauliString") -> bool:
        return symplectic_product(self, other) == 0

    def restrict(self, qubits: Sequence[int]) -> "PauliString":
        """Sub-string on ``qubits`` (in the given order); sign kept."""
        x = z = 0
        for j, q in enumerate(qubits):
            x |= ((self.x >> q) & 1) << j
            z |= ((self.z >> q) & 1) << j
        return PauliString(len(qubits), x, z, self.sign)

    def embed(self, n: int, qubits: Sequence[int]) -> "PauliString":
        """Place this string on ``qubits`` of an ``n``-qubit register."""
        if len(qubits) != self.n:
            raise DimensionError("qubit map length differs from string length")
        x = z = 0
        for j, q in enumerate(qubits):
            x |= ((self.x >> j) & 1) << q
            z |= ((self.z >> j) & 1) << q
        return PauliString(n, x, z, self.sign)

    def permute(self, perm: Sequence[int]) -> "PauliString":
        """New string whose position ``j`` holds old qubit ``perm[j]``."""
        return self.restrict(perm)


def symplectic_product(a: PauliString, b: PauliString) -> int:
    """``x_a . z_b + z_a . x_b`` mod 2; zero means the two commute."""
    if a.n != b.n:
        raise DimensionError(f"cannot compare {a.n}-qubit and {b.n}-qubit Paulis")
    return _popcount((a.x & b.z) ^ (a.z & b.x)) & 1


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Product ``a * b``.

    The phase is tracked mod 4.  For anticommuting factors the product
    carries a factor ``+-i``; it is dropped so that the result stays a
    Hermitian element with a +-1 sign.
    """
    if a.n != b.n:
        raise DimensionError(f"cannot multiply {a.n}-qubit and {b.n}-qubit Paulis")
    log_i = product_log_i(a.x, a.z, b.x, b.z)
    if a.sign < 0:
        log_i += 2
    if b.sign < 0:
        log_i += 2
    sign = -1 if (log_i & 3) in (2, 3) else 1
    return PauliString(a.n, a.x ^ b.x, a.z ^ b.z, sign)


# --------------------------------------------------------------------------
# GF(2) helpers on integer-packed vectors


def gf2_rank(vectors: Iterable[int]) -> int:
    """Rank of a set of bit vectors packed in Python integers."""
    basis: dict[int, int] = {}
    rank = 0
    for v in vectors:
        while v:
            top = v.bit_length() - 1
            if top in basis:
                v ^= basis[top]
            else:
                basis[top] = v
                rank += 1
                break
    return rank


def gf2_solve(rows: Sequence[int], rhs: Sequence[int], ncols: int) -> int | None:
    """Solve ``A v = rhs`` over GF(2), rows of ``A`` packed in integers.

    Returns one solution packed as an integer, or None if inconsistent.
    """
    aug = [(r, b & 1) for r, b in zip(rows, rhs)]
    pivots: list[tuple[int, int, int]] = []
    for col in range(ncols):
        bit = 1 << col
        idx = next((i for i, (r, _) in enumerate(aug) if r & bit), None)
        if idx is None:
            continue
        prow, pb = aug.pop(idx)
        aug = [((r ^ prow, b ^ pb) if r & bit else (r, b)) for r, b in aug]
        pivots = [((r ^ prow, b ^ pb, c) if r & bit else (r, b, c)) for r, b, c in pivots]
        pivots.append((prow, pb, col))
    if any(r == 0 and b for r, b in aug):
        return None
    sol = 0
    for r, b, c in pivots:
        if b:
            sol |= 1 << c
    return sol


def symplectic_vector(p: PauliString) -> int:
    """Pack ``(x|z)`` into one integer: x bits low, z bits high."""
    return p.x | (p.z << p.n)


# --------------------------------------------------------------------------
# Check matrices


@dataclass(frozen=True)
class CheckMatrix:
    """Commuting, independent stabilizer generators ``g_1 .. g_{n-k}``."""

    n: int
    rows: tuple[PauliString, ...]

    def __post_init__(self):
        for r in self.rows:
            if r.n != self.n:
                raise DimensionError(f"row {r} has {r.n} qubits, expected {self.n}")
        for i, a in enumerate(self.rows):
            for j in range(i + 1, len(self.rows)):
                if symplectic_product(a, self.rows[j]):
                    raise ValueError(f"generators {i} and {j} anticommute")
        seen: list[int] = []
        for i, r in enumerate(self.rows):
            seen.append(symplectic_vector(r))
            if gf2_rank(seen) < len(seen):
                raise RankDeficiencyError(i)

    @classmethod
    def from_strings(cls, rows: Iterable[str]) -> "CheckMatrix":
        paulis = tuple(PauliString.from_str(r) for r in rows)
        if not paulis:
            raise ValueError("empty generator list")
        return cls(paulis[0].n, paulis)

    def __len__(self) -> int:
        return len(self.rows)

    def x_matrix(self) -> np.ndarray:
        return np.array([r.x_bits() for r in self.rows], dtype=np.uint8).reshape(len(self.rows), self.n)

    def z_matrix(self) -> np.ndarray:
        return np.array([r.z_bits() for r in self.rows], dtype=np.uint8).reshape(len(self.rows), self.n)

    def to_text(self) -> str:
        return "\n".join(format_pauli(r) for r in self.rows) + "\n"


def format_pauli(p: PauliString) -> str:
    body = "".join(p[j] for j in range(p.n))
    return ("-" + body) if p.sign < 0 else body


def parse_code_text(text: str) -> CheckMatrix:
    """Parse one generator per line over ``IXYZ`` with an optional sign.

    Blank lines and ``#`` comments are skipped.
    """
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append(PauliString.from_str(line))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if not rows:
        raise ValueError("no generators found")
    n = rows[0].n
    if any(r.n != n for r in rows):
        raise DimensionError("generators have different lengths")
    return CheckMatrix(n, tuple(rows))


# --------------------------------------------------------------------------
# Standard form


@dataclass(frozen=True)
class StandardForm:
    """Eliminated generators ``[I A1 A2 | B 0 C ; 0 0 0 | D I E]``.

    ``rows`` are expressed in permuted qubit order: position ``j`` is the
    original qubit ``column_perm[j]``.
    """

    source: CheckMatrix
    r: int
    column_perm: tuple[int, ...]
    rows: tuple[PauliString, ...]

    @property
    def n(self) -> int:
        return self.source.n

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def k(self) -> int:
        return self.n - self.m

    def _xz(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.array([r.x_bits() for r in self.rows], dtype=np.uint8).reshape(self.m, self.n)
        z = np.array([r.z_bits() for r in self.rows], dtype=np.uint8).reshape(self.m, self.n)
        return x, z

    @property
    def blocks(self) -> dict[str, np.ndarray]:
        x, z = self._xz()
        r, m = self.r, self.m
        return {
            "A1": x[:r, r:m],
            "A2": x[:r, m:],
            "B": z[:r, :r],
            "C": z[:r, m:],
            "D": z[r:, :r],
            "E": z[r:, m:],
        }

    def original_rows(self) -> tuple[PauliString, ...]:
        """Rows mapped back to the source qubit labels."""
        return tuple(r.embed(self.n, self.column_perm) for r in self.rows)

    def to_text(self) -> str:
        """Binary ``X | Z`` layout with the row split at ``r``."""
        x, z = self._xz()
        lines = [f"# r = {self.r}, n-k-r = {self.m - self.r}, k = {self.k}",
                 "# column_perm = " + " ".join(map(str, self.column_perm))]
        for i in range(self.m):
            if i == self.r and 0 < self.r < self.m:
                lines.append("-" * (2 * self.n + 3))
            lines.append("".join(map(str, x[i])) + " | " + "".join(map(str, z[i])))
        return "\n".join(lines) + "\n"


def standard_form(m: CheckMatrix) -> StandardForm:
    """Gaussian elimination to the standard form.

    Pivots are chosen at the lowest row, then the lowest column index.
    Column swaps are recorded in ``column_perm`` and applied to every row.
    """
    n = m.n
    rows = [r for r in m.rows]
    origin = list(range(len(rows)))
    perm = list(range(n))
    nrows = len(rows)

    def swap_cols(a: int, b: int) -> None:
        if a == b:
            return
        perm[a], perm[b] = perm[b], perm[a]
        order = list(range(n))
        order[a], order[b] = b, a
        for i in range(nrows):
            rows[i] = rows[i].permute(order)

    def find_pivot(start_row: int, start_col: int, stop_col: int, use_x: bool):
        for i in range(start_row, nrows):
            bits = rows[i].x if use_x else rows[i].z
            for j in range(start_col, stop_col):
                if (bits >> j) & 1:
                    return i, j
        return None

    r = 0
    while r < nrows:
        hit = find_pivot(r, r, n, True)
        if hit is None:
            break
        i, j = hit
        rows[r], rows[i] = rows[i], rows[r]
        origin[r], origin[i] = origin[i], origin[r]
        swap_cols(r, j)
        for t in range(nrows):
            if t != r and (rows[t].x >> r) & 1:
                rows[t] = multiply(rows[t], rows[r])
        r += 1

    s = r
    while s < nrows:
        hit = find_pivot(s, s, n, False)
        if hit is None:
            raise RankDeficiencyError(origin[s])
        i, j = hit
        rows[s], rows[i] = rows[i], rows[s]
        origin[s], origin[i] = origin[i], origin[s]
        swap_cols(s, j)
        for t in range(r, nrows):
            if t != s and (rows[t].z >> s) & 1:
                rows[t] = multiply(rows[t], rows[s])
        s += 1

    # clear the Z block of the top rows above the lower identity
    for t in range(r):
        for s in range(r, nrows):
            if (rows[t].z >> s) & 1:
                rows[t] = multiply(rows[t], rows[s])

    return StandardForm(m, r, tuple(perm), tuple(rows))


def same_group(a: Sequence[PauliString], b: Sequence[PauliString]) -> bool:
    """True when both sets generate the same group (signs ignored)."""
    va = [symplectic_vector(p) for p in a]
    vb = [symplectic_vector(p) for p in b]
    ra = gf2_rank(va)
    return ra == gf2_rank(vb) == gf2_rank(va + vb)
