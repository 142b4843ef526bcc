import itertools

import numpy as np
import pytest

from stabdistill.blockcode import (StabilizerCode, UncorrectableSyndrome, adjust_outcomes, builtin_code,
                                   decode_syndrome, decoding_schedule, error_syndrome, integrated_recovery,
                                   load_code, logical_operators, parity_code, phase_corrections,
                                   standard_form_listing, syndrome, syndrome_table)
from stabdistill.distillation import TableauEngine, block_protocol
from stabdistill.gf2 import PauliString, symplectic_product
from stabdistill.tableau import new_bell_register

GOLDEN = __import__("pathlib").Path(__file__).parent / "golden"


@pytest.fixture(scope="module")
def five():
    return builtin_code("five_one_three")


@pytest.fixture(scope="module")
def nine():
    return builtin_code("nine_four_two")


def check_logicals(code):
    lx, lz = logical_operators(code).original()
    for a in lx + lz:
        for g in code.rows:
            assert a.commutes(g)
    for i, a in enumerate(lx):
        for j, b in enumerate(lz):
            assert symplectic_product(a, b) == int(i == j)
    for a, b in itertools.combinations(lx, 2):
        assert a.commutes(b)
    for a, b in itertools.combinations(lz, 2):
        assert a.commutes(b)
    # logical operators are not in the stabilizer group
    for a in lx + lz:
        assert any(not a.commutes(b) for b in lx + lz)


def test_builtin_parameters(five, nine):
    assert (five.n, five.k, five.d) == (5, 1, 3)
    assert (nine.n, nine.k, nine.d) == (9, 4, 2)
    assert len(five.rows) == five.n - five.k


def test_load_code_file(tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("# d = 2\nXX\nZZ\n")
    c = load_code(str(f))
    assert (c.n, c.k, c.d) == (2, 0, 2)


class TestLogicals:
    def test_five_one_three_shape(self, five):
        lo = logical_operators(five)
        lx, lz = lo.lx[0], lo.lz[0]
        # permuted order: Z support on the first four positions, X (resp. Z) on the last
        assert lx.x == 1 << 4 and lx.z & 0b01111 and not (lx.z >> 4) & 1
        assert lz.x == 0 and (lz.z >> 4) & 1
        check_logicals(five)

    def test_repetition_style(self):
        code = parity_code(3)
        check_logicals(code)
        # brute force: weight <= 2 logical candidates exist and match in count
        lx, lz = logical_operators(code).original()
        assert all(p.weight <= 3 for p in lx + lz)

    def test_trivial_standard_form(self):
        code = StabilizerCode.from_strings(["XII", "IZI"])
        lo = logical_operators(code)
        assert str(lo.lx[0]).lstrip("+") == "IIX"
        assert str(lo.lz[0]).lstrip("+") == "IIZ"

    def test_nine_four_two(self, nine):
        check_logicals(nine)

    def test_golden_listing(self, five):
        assert standard_form_listing(five) == (GOLDEN / "five_one_three_standard.txt").read_text()


class TestSchedule:
    def test_five(self, five):
        s = decoding_schedule(five)
        assert (len(s.z_measured), len(s.x_measured), len(s.kept)) == (4, 0, 1)

    def test_pair(self):
        s = decoding_schedule(StabilizerCode.from_strings(["XX"]))
        assert (len(s.z_measured), len(s.x_measured), len(s.kept)) == (1, 0, 1)

    def test_phase_linearity(self, five):
        s = decoding_schedule(five)
        ax, az = phase_corrections(s, [0, 0, 0, 0])
        assert not ax.any() and not az.any()
        for j in range(4):
            e = [int(i == j) for i in range(4)]
            ax, az = phase_corrections(s, e)
            assert ax[0] == (s.x_phase_masks[0] >> j) & 1
            assert az[0] == (s.z_phase_masks[0] >> j) & 1
        with pytest.raises(ValueError):
            phase_corrections(s, [0, 1])

    @pytest.mark.parametrize("outcomes", [(1, 0, 1, 1), (0, 1, 1, 0), (1, 1, 1, 1)])
    def test_phases_match_stabilizer_tracking(self, five, outcomes):
        s = decoding_schedule(five)
        lx, lz = logical_operators(five).original()
        n = five.n
        reg = new_bell_register(n, seed=0)
        t = reg.tableau
        for g in five.rows:
            t.measure_pauli(reg.alice_pauli(g), forced=0)
        for j, pos in enumerate(s.measured):
            q = s.qubit(pos)
            t.measure_pauli(PauliString.single(2 * n, q, s.basis(j)), forced=outcomes[j])
        kept = s.qubit(s.kept[0])
        ax, az = phase_corrections(s, outcomes)
        xk = PauliString.single(n, kept, "X")
        zk = PauliString.single(n, kept, "Z")
        xx = reg.alice_pauli(xk) * reg.bob_pauli(lx[0].transpose())
        zz = reg.alice_pauli(zk) * reg.bob_pauli(lz[0].transpose())
        assert t.peek_pauli(xx) == ax[0]
        assert t.peek_pauli(zz) == az[0]


class TestSyndrome:
    def test_examples(self, five):
        z = np.zeros(4, np.uint8)
        assert not syndrome(five, z, z).any()
        for i in range(4):
            e = np.eye(4, dtype=np.uint8)[i]
            assert syndrome(five, e, z).tolist() == e.tolist()
        with pytest.raises(ValueError):
            syndrome(five, [0, 1], [0, 1, 0, 0])

    def test_five_is_perfect(self, five):
        seen = set()
        for q in range(5):
            for lab in "XYZ":
                s = error_syndrome(five, PauliString.single(5, q, lab))
                assert s != 0
                seen.add(s)
        assert seen == set(range(1, 16))

    def test_decode(self, five):
        assert decode_syndrome(five, [0, 0, 0, 0]).is_identity
        for q in range(5):
            for lab in "XYZ":
                e = PauliString.single(5, q, lab)
                c = [(error_syndrome(five, e) >> i) & 1 for i in range(4)]
                assert decode_syndrome(five, c) == e

    def test_uncorrectable(self, nine):
        e = PauliString.single(9, 0, "X")
        c = [(error_syndrome(nine, e) >> i) & 1 for i in range(5)]
        assert decode_syndrome(nine, c, "detect") is False
        with pytest.raises(UncorrectableSyndrome):
            decode_syndrome(nine, c, "correct")

    def test_table_is_min_weight(self, five):
        table = syndrome_table(five)
        assert len(table) == 16
        assert all(p.weight <= 1 for p in table.values())


class TestRecovery:
    def test_trivial(self, five):
        b2, finals = integrated_recovery(five, [0] * 4, [0] * 4)
        assert list(b2) == [0] * 4 and finals == ["I"]

    def test_commuting_recovery_keeps_outcomes(self, five):
        s = decoding_schedule(five)
        q = s.qubit(s.z_measured[0])
        b = adjust_outcomes(s, [1, 0, 1, 0], PauliString.single(5, q, "Z"))
        assert b.tolist() == [1, 0, 1, 0]
        b = adjust_outcomes(s, [1, 0, 1, 0], PauliString.single(5, q, "X"))
        assert b.tolist() == [0, 0, 1, 0]

    def test_all_single_errors_corrected(self, five):
        eng = TableauEngine(block_protocol(five, "correct"))
        for q in range(5):
            for lab in "XYZ":
                ex = np.zeros(5, np.uint8)
                ez = np.zeros(5, np.uint8)
                ex[q] = lab in "XY"
                ez[q] = lab in "YZ"
                for trial in range(3):
                    ok, labels = eng.run_trial(ex, ez, seed=4, trial=trial)
                    assert ok and labels == ["I"]

    def test_nine_four_two_rejects_single_errors(self, nine):
        eng = TableauEngine(block_protocol(nine, "detect"))
        for q in range(9):
            for lab in "XYZ":
                ex = np.zeros(9, np.uint8)
                ez = np.zeros(9, np.uint8)
                ex[q] = lab in "XY"
                ez[q] = lab in "YZ"
                ok, _ = eng.run_trial(ex, ez, seed=4, trial=q)
                assert not ok
