"""Planar surface codes and the physical-logical resource Bell state.

Lattice coordinates: data qubits sit at ``(2i, 2j)`` for ``i, j < L`` and at
``(2i+1, 2j+1)`` for ``i, j < L-1``.  X checks sit at ``(2i+1, 2j)``, Z
checks at ``(2i, 2j+1)``; each acts on its existing nearest neighbours.
The logical X is the X string along an even row, the logical Z the Z string
along an even column.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import partial
from itertools import product

import numpy as np

from .distillation import (NoiseSpec, ProtocolResult, FrameEngine, draw_errors, recurrence_protocol)
from .gf2 import CheckMatrix, PauliString, gf2_solve
from .rng import CHUNK, run_chunks, stream
from .tableau import ContractError, PackedPauli, Tableau, new_bell_register

TABLEAU_CAP = 12
FULL_TABLE_MAX_L = 4


@dataclass(frozen=True)
class PlanarLattice:
    L: int
    coords: tuple[tuple[int, int], ...]
    x_stabs: tuple[tuple[int, ...], ...]
    z_stabs: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def index(self) -> dict[tuple[int, int], int]:
        return {c: i for i, c in enumerate(self.coords)}

    def row_string(self, row: int = 0) -> tuple[int, ...]:
        if not 0 <= row < self.L:
            raise ValueError("row out of range")
        idx = self.index
        return tuple(idx[(2 * row, 2 * j)] for j in range(self.L))

    def col_string(self, col: int = 0) -> tuple[int, ...]:
        if not 0 <= col < self.L:
            raise ValueError("column out of range")
        idx = self.index
        return tuple(idx[(2 * i, 2 * col)] for i in range(self.L))

    def _mask(self, qubits) -> int:
        m = 0
        for q in qubits:
            m |= 1 << q
        return m

    def logical_x(self, row: int = 0) -> PauliString:
        return PauliString(self.n, self._mask(self.row_string(row)), 0)

    def logical_z(self, col: int = 0) -> PauliString:
        return PauliString(self.n, 0, self._mask(self.col_string(col)))

    def stabilizers(self) -> list[PauliString]:
        return ([PauliString(self.n, self._mask(s), 0) for s in self.x_stabs]
                + [PauliString(self.n, 0, self._mask(s)) for s in self.z_stabs])

    def check_matrix(self) -> CheckMatrix:
        return CheckMatrix(self.n, tuple(self.stabilizers()))

    def to_text(self) -> str:
        """Adjacency dump: one line per check, ``X (r,c): q q q``."""
        lines = [f"# L = {self.L}, n = {self.n}"]
        for kind, stabs in (("X", self.x_stabs), ("Z", self.z_stabs)):
            for s in stabs:
                lines.append(f"{kind}: " + " ".join(f"{self.coords[q][0]},{self.coords[q][1]}" for q in s))
        return "\n".join(lines) + "\n"


def build_planar(L: int) -> PlanarLattice:
    if L < 2:
        raise ValueError("L must be at least 2")
    coords = [(2 * i, 2 * j) for i in range(L) for j in range(L)]
    coords += [(2 * i + 1, 2 * j + 1) for i in range(L - 1) for j in range(L - 1)]
    idx = {c: i for i, c in enumerate(coords)}

    def around(r, c):
        return tuple(sorted(idx[p] for p in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)) if p in idx))

    xs = tuple(around(2 * i + 1, 2 * j) for i in range(L - 1) for j in range(L))
    zs = tuple(around(2 * i, 2 * j + 1) for i in range(L) for j in range(L - 1))
    lat = PlanarLattice(L, tuple(coords), xs, zs)
    # commutation: X and Z checks must overlap evenly
    for a in xs:
        sa = set(a)
        for b in zs:
            if len(sa.intersection(b)) % 2:
                raise AssertionError("non-commuting checks")
    return lat


def decoding_measurement_set(lat: PlanarLattice, row: int = 0, col: int = 0):
    """``(z_list, x_list, kept)``: Z measurements along the Z_L column and X
    measurements along the X_L row, both without the shared qubit."""
    kept = lat.index[(2 * row, 2 * col)]
    x_list = tuple(q for q in lat.row_string(row) if q != kept)
    z_list = tuple(q for q in lat.col_string(col) if q != kept)
    return z_list, x_list, kept


# ----------------------------------------------------------------------
# analytic measurement-error model


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 0.5:
        raise ValueError("p must lie in [0, 1/2]")


def parity_flip_prob(p: float, L: int) -> float:
    """Probability that ``L-1`` independent flips of rate ``p`` have odd parity."""
    _check_p(p)
    if L < 2:
        raise ValueError("L must be at least 2")
    return 0.5 - 0.5 * (1 - 2 * p) ** (L - 1)


def decode_error_prob(p: float, L: int) -> float:
    q = parity_flip_prob(p, L)
    return 2 * q - q * q


def measurement_threshold(L: int) -> float:
    if L < 2:
        raise ValueError("L must be at least 2")
    return 0.5 * (1 - (math.sqrt(2) - 1) ** (1 / (L - 1)))


@dataclass(frozen=True)
class ThresholdResult:
    L: int
    p_threshold: float
    analytic_curve: tuple[tuple[float, float], ...]


def threshold_analysis(L: int, samples: int = 51) -> ThresholdResult:
    ps = np.linspace(0.0, 0.5, samples)
    return ThresholdResult(L, measurement_threshold(L), tuple((float(p), decode_error_prob(float(p), L)) for p in ps))


# ----------------------------------------------------------------------
# syndrome correction


def _bfs_table(checks: list[int], n: int, max_weight: int | None) -> dict[int, int]:
    """Min-weight single-type error (packed) for each reachable syndrome."""
    cols = []
    for q in range(n):
        s = 0
        for i, c in enumerate(checks):
            if (c >> q) & 1:
                s |= 1 << i
        cols.append(s)
    table = {0: 0}
    frontier = deque([(0, 0, 0)])
    while frontier:
        syn, err, w = frontier.popleft()
        if max_weight is not None and w >= max_weight:
            continue
        for q in range(n):
            s2 = syn ^ cols[q]
            if s2 not in table:
                table[s2] = err | (1 << q)
                frontier.append((s2, err | (1 << q), w + 1))
    return table


class PlanarDecoder:
    """CSS lookup decoder plus pure errors that reset check signs.

    Full minimum-weight tables for ``L <= 4``; weight-1 tables above.
    """

    def __init__(self, lat: PlanarLattice):
        self.lat = lat
        n = lat.n
        self.xchecks = [lat._mask(s) for s in lat.x_stabs]
        self.zchecks = [lat._mask(s) for s in lat.z_stabs]
        mw = None if lat.L <= FULL_TABLE_MAX_L else 1
        self.x_table = _bfs_table(self.zchecks, n, mw)  # X errors seen by Z checks
        self.z_table = _bfs_table(self.xchecks, n, mw)
        lx, lz = lat.logical_x(), lat.logical_z()
        # X-type pure error for Z check i: hits only that check, commutes with Z_L
        self.x_pure = []
        rows = self.zchecks + [lz.z]
        for i in range(len(self.zchecks)):
            rhs = [int(j == i) for j in range(len(self.zchecks))] + [0]
            self.x_pure.append(gf2_solve(rows, rhs, n))
        rows = self.xchecks + [lx.x]
        self.z_pure = []
        for i in range(len(self.xchecks)):
            rhs = [int(j == i) for j in range(len(self.xchecks))] + [0]
            self.z_pure.append(gf2_solve(rows, rhs, n))

    def split(self, synd: int) -> tuple[int, int]:
        """Full syndrome (X checks low bits, then Z checks) -> (x-check part, z-check part)."""
        nx = len(self.xchecks)
        return synd & ((1 << nx) - 1), synd >> nx

    def recovery(self, sx: int, sz: int) -> tuple[int, int]:
        """``(rx, rz)`` masks from the X-check and Z-check syndromes."""
        return self.x_table.get(sz, 0), self.z_table.get(sx, 0)

    def reset(self, sx: int, sz: int) -> tuple[int, int]:
        """Pauli masks flipping exactly the given check signs, logicals untouched."""
        rx = rz = 0
        for i in range(len(self.zchecks)):
            if (sz >> i) & 1:
                rx ^= self.x_pure[i]
        for i in range(len(self.xchecks)):
            if (sx >> i) & 1:
                rz ^= self.z_pure[i]
        return rx, rz

    def syndrome(self, ex: int, ez: int) -> tuple[int, int]:
        sx = sum((((ez & c).bit_count()) & 1) << i for i, c in enumerate(self.xchecks))
        sz = sum((((ex & c).bit_count()) & 1) << i for i, c in enumerate(self.zchecks))
        return sx, sz


# ----------------------------------------------------------------------
# resource protocol


def _masks_to_pauli(N: int, x: int, z: int, offset: int) -> PauliString:
    return PauliString(N, x << offset, z << offset)


class ResourceEngine:
    """Tableau run of the resource protocol on ``n`` transversal Bell pairs."""

    def __init__(self, L: int, row: int = 0, col: int = 0, cap: int = TABLEAU_CAP):
        if L > cap:
            raise ValueError(f"L = {L} exceeds the tableau cap {cap}")
        self.lat = build_planar(L)
        self.dec = PlanarDecoder(self.lat)
        self.z_list, self.x_list, self.kept = decoding_measurement_set(self.lat, row, col)
        self.lx, self.lz = self.lat.logical_x(row), self.lat.logical_z(col)
        n = self.lat.n
        N2 = 2 * n
        stabs = self.lat.stabilizers()
        self.alice_ops = [PackedPauli.from_pauli(_masks_to_pauli(N2, s.x, s.z, 0)) for s in stabs]
        self.bob_ops = [PackedPauli.from_pauli(_masks_to_pauli(N2, s.x, s.z, n)) for s in stabs]
        self.meas_x = [PackedPauli.from_pauli(PauliString.single(N2, q, "X")) for q in self.x_list]
        self.meas_z = [PackedPauli.from_pauli(PauliString.single(N2, q, "Z")) for q in self.z_list]
        a = self.kept
        self.check_xx = PauliString(N2, (1 << a) | (self.lx.x << n), 0)
        self.check_zz = PauliString(N2, 0, (1 << a) | (self.lz.z << n))

    def prepare(self, t: Tableau, flips_x, flips_z, n_off: int = 0) -> None:
        """Steps 2-4 on an existing register (Alice ``0..n-1``, Bob ``n..2n-1``)."""
        n = self.lat.n
        nx = len(self.lat.x_stabs)
        sa = [t.measure_pauli(g)[0] for g in self.alice_ops]
        sb = [t.measure_pauli(g)[0] for g in self.bob_ops]
        c = [u ^ v for u, v in zip(sa, sb)]
        csx = sum(b << i for i, b in enumerate(c[:nx]))
        csz = sum(b << i for i, b in enumerate(c[nx:]))
        rx, rz = self.dec.recovery(csx, csz)
        # Bob's post-recovery signs, then reset them to +1 with pure errors
        bsx = sum(b << i for i, b in enumerate(sb[:nx]))
        bsz = sum(b << i for i, b in enumerate(sb[nx:]))
        dx, dz = self.dec.syndrome(rx, rz)
        px, pz = self.dec.reset(bsx ^ dx, bsz ^ dz)
        fx, fz = rx ^ px, rz ^ pz
        if fx or fz:
            t.apply_pauli(_masks_to_pauli(2 * n, fx, fz, n))
        ax = 0
        for j, g in enumerate(self.meas_x):
            ax ^= t.measure_pauli(g)[0] ^ int(flips_x[j])
        az = 0
        for j, g in enumerate(self.meas_z):
            az ^= t.measure_pauli(g)[0] ^ int(flips_z[j])
        if az:
            t.x(self.kept)
        if ax:
            t.z(self.kept)

    def residual(self, t: Tableau) -> str:
        sx = t.peek_pauli(self.check_xx)
        sz = t.peek_pauli(self.check_zz)
        if sx is None or sz is None:
            raise ContractError("physical and logical halves are not a Bell pair")
        return {(0, 0): "I", (0, 1): "X", (1, 0): "Z", (1, 1): "Y"}[(sx, sz)]

    def run_trial(self, ex_row, ez_row, flips_x, flips_z, seed: int, trial: int) -> str:
        n = self.lat.n
        reg = new_bell_register(n, seed, trial)
        t = reg.tableau
        xs = sum(int(b) << i for i, b in enumerate(ex_row))
        zs = sum(int(b) << i for i, b in enumerate(ez_row))
        if xs or zs:
            t.apply_pauli(_masks_to_pauli(2 * n, xs, zs, n))
        self.prepare(t, flips_x, flips_z)
        return self.residual(t)


class ResourceFrameEngine:
    """Pauli-frame evaluation of the same protocol (exact for Pauli noise)."""

    def __init__(self, L: int, row: int = 0, col: int = 0):
        self.lat = build_planar(L)
        self.dec = PlanarDecoder(self.lat)
        self.z_list, self.x_list, self.kept = decoding_measurement_set(self.lat, row, col)
        self.lx, self.lz = self.lat.logical_x(row), self.lat.logical_z(col)

    def run(self, ex: np.ndarray, ez: np.ndarray, fx: np.ndarray, fz: np.ndarray):
        """``(out_x, out_z)`` bits per trial."""
        T = ex.shape[0]
        lzm = np.array([(self.lz.z >> q) & 1 for q in range(self.lat.n)], dtype=np.uint8)
        lxm = np.array([(self.lx.x >> q) & 1 for q in range(self.lat.n)], dtype=np.uint8)
        ox = (fz.sum(axis=1) & 1).astype(np.uint8)
        oz = (fx.sum(axis=1) & 1).astype(np.uint8)
        hit = np.flatnonzero(ex.any(axis=1) | ez.any(axis=1))
        for t in hit:
            x = sum(int(b) << i for i, b in enumerate(ex[t]))
            z = sum(int(b) << i for i, b in enumerate(ez[t]))
            sx, sz = self.dec.syndrome(x, z)
            rx, rz = self.dec.recovery(sx, sz)
            x ^= rx
            z ^= rz
            ox[t] ^= (x & self.lz.z).bit_count() & 1
            oz[t] ^= (z & self.lx.x).bit_count() & 1
        return ox, oz


def _draw_resource(rng, size: int, lat: PlanarLattice, spec: NoiseSpec):
    ex, ez = draw_errors(rng, size, lat.n, spec)
    L1 = lat.L - 1
    flips = rng.random((size, 2 * L1)) < spec.meas_flip
    return ex, ez, flips[:, :L1].astype(np.uint8), flips[:, L1:].astype(np.uint8)


def _resource_chunk(L: int, engine: str, spec: NoiseSpec, seed: int, cap: int, chunk: int, size: int):
    lat = build_planar(L)
    rng = stream(seed, chunk)
    ex, ez, fx, fz = _draw_resource(rng, size, lat, spec)
    res = ProtocolResult(f"planar{L}", lat.n, 1, "correct", p_in=spec.p, seed=seed)
    res.trials = res.successes = size
    if engine == "tableau":
        eng = ResourceEngine(L, cap=cap)
        idx = {"I": 0, "X": 1, "Y": 2, "Z": 3}
        for j in range(size):
            lab = eng.run_trial(ex[j], ez[j], fx[j], fz[j], seed, chunk * CHUNK + j)
            res.residual_counts[0, idx[lab]] += 1
    else:
        ox, oz = ResourceFrameEngine(L).run(ex, ez, fx, fz)
        cl = np.where(ox == 1, np.where(oz == 1, 2, 1), np.where(oz == 1, 3, 0))
        res.residual_counts[0] = np.bincount(cl, minlength=4)
    return res


def run_resource_protocol(L: int, spec: NoiseSpec, trials: int, seed: int, engine: str = "tableau",
                          cap: int = TABLEAU_CAP, workers: int = 1) -> ProtocolResult:
    """Prepare physical-logical Bell pairs; ``spec.meas_flip`` corrupts Alice's decoding outcomes."""
    if engine == "tableau" and L > cap:
        raise ValueError(f"L = {L} exceeds the tableau cap {cap}")
    if engine not in ("tableau", "frame"):
        raise ValueError(f"unknown engine {engine!r}")
    parts = run_chunks(partial(_resource_chunk, L, engine, spec, seed, cap), trials, workers)
    out = parts[0]
    for p in parts[1:]:
        out = out + p
    return out


# ----------------------------------------------------------------------
# teleportation through the resource


@dataclass
class ResourceState:
    """A prepared pair: physical qubit ``physical``, logical block ``block``."""

    lattice: PlanarLattice
    host: "Host"
    physical: int
    block: tuple[int, ...]
    consumed: bool = False


@dataclass
class Host:
    tableau: Tableau


@dataclass
class LogicalState:
    lattice: PlanarLattice
    host: Host
    block: tuple[int, ...]

    def logical(self, label: str) -> PauliString:
        lat = self.lattice
        lx, lz = lat.logical_x(), lat.logical_z()
        x = lx.x if label in "XY" else 0
        z = lz.z if label in "ZY" else 0
        return PauliString(lat.n, x, z).embed(self.host.tableau.n, self.block)

    def expect(self, label: str) -> int | None:
        """+1/-1 if the logical ``label`` has a definite value, else None."""
        v = self.host.tableau.peek_pauli(self.logical(label))
        return None if v is None else (1 - 2 * v)

    def stabilizer_signs(self) -> list[int | None]:
        t = self.host.tableau
        return [t.peek_pauli(s.embed(t.n, self.block)) for s in self.lattice.stabilizers()]


@dataclass
class PhysicalState:
    host: Host
    qubit: int

    def expect(self, label: str) -> int | None:
        t = self.host.tableau
        v = t.peek_pauli(PauliString.single(t.n, self.qubit, label))
        return None if v is None else (1 - 2 * v)


_PREP = {"0": (), "1": ("X",), "+": ("H",), "-": ("X", "H"), "+i": ("H", "S"), "-i": ("X", "H", "S")}


def prepare_resource(L: int, seed: int = 0, host: Host | LogicalState | None = None,
                     residual: str = "I") -> ResourceState:
    """Noiseless resource preparation, appended to ``host`` when given.

    ``residual`` applies a logical Pauli to the logical half afterwards.
    """
    eng = ResourceEngine(L, cap=max(L, TABLEAU_CAP))
    n = eng.lat.n
    if host is None:
        h = Host(new_bell_register(n, seed, 0).tableau)
        off = 0
    else:
        h = host.host if isinstance(host, LogicalState) else host
        off = h.tableau.n
        t = h.tableau.extend(2 * n)
        for i in range(n):
            t.h(off + i)
            t.cnot(off + i, off + n + i)
        h.tableau = t
    # run the protocol on a scratch-free view: qubits are offset by ``off``
    sub = _Offset(h.tableau, off, 2 * n)
    eng.prepare(sub, np.zeros(L - 1, np.uint8), np.zeros(L - 1, np.uint8))
    block = tuple(off + n + i for i in range(n))
    if residual != "I":
        lat = eng.lat
        x = lat.logical_x().x if residual in "XY" else 0
        z = lat.logical_z().z if residual in "ZY" else 0
        h.tableau.apply_pauli(PauliString(lat.n, x, z).embed(h.tableau.n, block))
    return ResourceState(eng.lat, h, off + eng.kept, block)


class _Offset:
    """Adapter running ``ResourceEngine.prepare`` on a slice of a larger tableau."""

    def __init__(self, t: Tableau, off: int, width: int):
        self.t, self.off, self.width = t, off, width

    def _lift(self, p):
        if isinstance(p, PackedPauli):
            p = PauliString(self.width, _from_packed(p.x), _from_packed(p.z))
        return p.embed(self.t.n, list(range(self.off, self.off + self.width)))

    def measure_pauli(self, p):
        return self.t.measure_pauli(self._lift(p))

    def apply_pauli(self, p):
        self.t.apply_pauli(self._lift(p))

    def x(self, q):
        self.t.x(self.off + q)

    def z(self, q):
        self.t.z(self.off + q)


def _from_packed(words) -> int:
    v = 0
    for i, w in enumerate(words):
        v |= int(w) << (64 * i)
    return v


def teleport_encode(resource: ResourceState, state: str = "0") -> LogicalState:
    """Teleport a fresh physical stabilizer state into the logical block."""
    if resource.consumed:
        raise ContractError("resource already consumed")
    if state not in _PREP:
        raise ValueError(f"unknown input state {state!r}")
    h = resource.host
    t = h.tableau.extend(1)
    q = t.n - 1
    for g in _PREP[state]:
        t.apply_gate(g, q)
    h.tableau = t
    a = resource.physical
    t.cnot(q, a)
    t.h(q)
    m1 = t.measure_z(q)
    m2 = t.measure_z(a)
    lat = resource.lattice
    fx = lat.logical_x().x if m2 else 0
    fz = lat.logical_z().z if m1 else 0
    if fx or fz:
        t.apply_pauli(PauliString(lat.n, fx, fz).embed(t.n, resource.block))
    resource.consumed = True
    return LogicalState(lat, h, resource.block)


def teleport_decode(resource: ResourceState, logical: LogicalState) -> PhysicalState:
    """Transversal logical Bell measurement of ``logical`` with the resource block."""
    if resource.consumed:
        raise ContractError("resource already consumed")
    if resource.host is not logical.host:
        raise ContractError("resource and logical state live in different registers")
    if resource.lattice.L != logical.lattice.L:
        raise ContractError("lattice sizes differ")
    t = logical.host.tableau
    for d, b in zip(logical.block, resource.block):
        t.cnot(d, b)
    outx = [t.measure_x(d) for d in logical.block]
    outz = [t.measure_z(b) for b in resource.block]
    lat = resource.lattice
    mx = sum(outx[q] for q in lat.row_string()) & 1
    mz = sum(outz[q] for q in lat.col_string()) & 1
    if mz:
        t.x(resource.physical)
    if mx:
        t.z(resource.physical)
    resource.consumed = True
    return PhysicalState(logical.host, resource.physical)


# ----------------------------------------------------------------------
# effective-channel resource distillation


@dataclass(frozen=True)
class DistillOutcome:
    dist: tuple[float, float, float, float]
    success_probs: tuple[float, ...]
    distillable: bool
    message: str = ""

    @property
    def total_error(self) -> float:
        return 1.0 - self.dist[0]


def _one_round(dist, n: int) -> tuple[tuple[float, ...], float]:
    eng = FrameEngine(recurrence_protocol(n, 1))
    pats = np.array(list(product(range(4), repeat=n)), dtype=np.int64)
    ex = ((pats == 1) | (pats == 2)).astype(np.uint8)
    ez = ((pats == 2) | (pats == 3)).astype(np.uint8)
    w = np.prod(np.asarray(dist, dtype=float)[pats], axis=1)
    ok, ox, oz = eng.run(ex, ez)
    cl = np.where(ox[:, 0] == 1, np.where(oz[:, 0] == 1, 2, 1), np.where(oz[:, 0] == 1, 3, 0))
    ps = float(w[ok].sum())
    out = np.bincount(cl[ok], weights=w[ok], minlength=4) / ps
    return tuple(float(v) for v in out), ps


def distill_resource(dist, n: int = 2, rounds: int = 2) -> DistillOutcome:
    """Apply ``rounds`` of the ``n``-to-1 recurrence to a residual class distribution
    ``(I, X, Y, Z)``, exactly."""
    d = tuple(float(v) for v in dist)
    if len(d) != 4 or min(d) < 0 or abs(sum(d) - 1) > 1e-9:
        raise ValueError("dist must be a probability vector over (I, X, Y, Z)")
    if 1 - d[0] >= 0.5:
        return DistillOutcome(d, (), False, "total error >= 1/2: resource cannot be distilled")
    probs = []
    for _ in range(rounds):
        d, ps = _one_round(d, n)
        probs.append(ps)
    return DistillOutcome(d, tuple(probs), True)


def residual_distribution(p: float, L: int) -> tuple[float, float, float, float]:
    """Analytic residual classes from decoding-measurement flips at rate ``p``."""
    q = parity_flip_prob(p, L)
    return ((1 - q) ** 2, q * (1 - q), q * q, q * (1 - q))
