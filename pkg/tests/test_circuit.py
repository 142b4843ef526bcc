import numpy as np
import pytest

from stabdistill.blockcode import StabilizerCode, builtin_code
from stabdistill.circuit import (UNITARY_REFERENCE, Circuit, Gate, UnscheduledError, constant_depth_slots,
                                 execute, metrics, run_circuit_trial, schedule_greedy,
                                 synthesize_measurement_circuit)
from stabdistill.convcode import ConvTableauEngine, rate_one_third_code
from stabdistill.distillation import TableauEngine, block_protocol
from stabdistill.tableau import Tableau


@pytest.fixture(scope="module")
def five():
    return builtin_code("five_one_three")


@pytest.fixture(scope="module")
def conv():
    return rate_one_third_code()


class TestCircuitBasics:
    def test_gate_validation(self):
        with pytest.raises(ValueError):
            Gate("FOO", (0,))
        with pytest.raises(ValueError):
            Gate("CNOT", (0,))
        with pytest.raises(ValueError):
            Gate("CZ", (1, 1))
        with pytest.raises(IndexError):
            Circuit(2).add("H", 2)

    def test_greedy_schedule(self):
        c = Circuit(4)
        c.add("CNOT", 0, 1)
        c.add("CNOT", 2, 3)
        c.add("CNOT", 1, 2)
        c.add("H", 0)
        schedule_greedy(c)
        assert c.schedule == [0, 0, 1, 1]
        m = metrics(c)
        assert m.depth2q == 2 and m.gates2q_per_frame == 3 and m.span_frames == 1

    def test_metrics_need_schedule(self):
        c = Circuit(2)
        c.add("CNOT", 0, 1)
        with pytest.raises(UnscheduledError):
            metrics(c)

    def test_netlist(self):
        c = Circuit(2)
        c.add("H", 0)
        c.add("MeasX", 0, cbit="s0")
        schedule_greedy(c)
        assert c.to_netlist() == "H 0 0\nMeasX 0 1 -> s0\n"

    def test_span_inclusive(self):
        c = Circuit(3, qubit_frame={0: 0, 1: 1, 2: 2})
        c.add("CNOT", 0, 2, frame=0)
        schedule_greedy(c)
        assert metrics(c).span_frames == 3


class TestGadgets:
    @pytest.mark.parametrize("role", ["alice", "bob"])
    def test_gadgets_read_syndrome_signs(self, five, role):
        mc = synthesize_measurement_circuit(five, role, "correct")
        assert len(mc.data) == 5 and len(mc.ancillas) == 4
        rng = np.random.default_rng(1)
        for trial in range(8):
            want = [int(b) for b in rng.integers(0, 2, 4)]
            t = Tableau(5, np.random.default_rng(trial))
            for g, b in zip(five.rows, want):
                t.measure_pauli(g, forced=b)
            t2 = t.extend(len(mc.ancillas))
            bits = {f"alice:s{i}": 0 for i in range(4)}
            pre = "" if role == "bob" else "alice:"
            execute(mc.circuit, t2, list(range(9)), bits, prefix=pre)
            assert [bits[pre + b] for b in mc.syndrome_bits] == want

    def test_constant_depth_slots(self, conv):
        D, slots = constant_depth_slots(conv)
        assert D == 6
        assert [sorted(s) for s in slots] == [list(range(6)), list(range(6))]
        assert constant_depth_slots(conv, max_depth=5) is None


class TestMetrics:
    def test_conv(self, conv):
        m = synthesize_measurement_circuit(conv, "bob", "correct", 12).metrics
        assert m.gates2q_per_frame == 12
        assert m.span_frames == 2
        assert m.depth2q == 6

    def test_block(self, five):
        m = synthesize_measurement_circuit(five, "bob", "correct").metrics
        assert (m.depth2q, m.gates2q_per_frame, m.span_frames) == (8, 16, 1)

    def test_single_generator(self):
        mc = synthesize_measurement_circuit(StabilizerCode.from_strings(["ZI"]), "bob")
        assert len(mc.ancillas) == 1
        assert (mc.metrics.depth2q, mc.metrics.gates2q_per_frame) == (1, 1)

    def test_empty(self):
        c = schedule_greedy(Circuit(2))
        m = metrics(c)
        assert (m.depth2q, m.gates2q_per_frame, m.span_frames, m.data_layers) == (0, 0, 0, 0)

    def test_reference_row(self):
        assert UNITARY_REFERENCE.to_row() == {"depth2q": 11, "gates2q_per_frame": 14, "span_frames": 3}

    def test_role_checked(self, five):
        with pytest.raises(ValueError):
            synthesize_measurement_circuit(five, "carol")


def _errors(rng, T, n, p):
    return ((rng.random((T, n)) < p).astype(np.uint8), (rng.random((T, n)) < p).astype(np.uint8))


@pytest.mark.parametrize("mode", ["correct", "detect"])
def test_block_circuit_equals_engine(five, mode):
    circuits = (synthesize_measurement_circuit(five, "alice", mode),
                synthesize_measurement_circuit(five, "bob", mode))
    eng = TableauEngine(block_protocol(five, mode))
    ex, ez = _errors(np.random.default_rng(3), 300, 5, 0.08)
    for t in range(300):
        ok, lab = run_circuit_trial(five, ex[t], ez[t], 7, t, mode, circuits=circuits)
        eok, elab = eng.run_trial(ex[t], ez[t], 7, t)
        assert ok == eok
        if ok:
            assert list(lab) == list(elab)


@pytest.mark.parametrize("mode", ["correct", "detect"])
def test_conv_circuit_equals_engine(conv, mode):
    circuits = (synthesize_measurement_circuit(conv, "alice", mode, 12),
                synthesize_measurement_circuit(conv, "bob", mode, 12))
    eng = ConvTableauEngine(conv, 12, mode)
    ex, ez = _errors(np.random.default_rng(4), 40, 36, 0.03)
    for t in range(40):
        ok, lab = run_circuit_trial(conv, ex[t], ez[t], 9, t, mode, 12, circuits=circuits)
        eok, elab = eng.run_trial(ex[t], ez[t], 9, t)
        assert ok == eok
        if ok:
            assert list(lab) == list(elab)


@pytest.mark.slow
def test_circuit_equivalence_many_trials(five, conv):
    for code, frames, n, T in ((five, None, 5, 10000), (conv, 12, 36, 2000)):
        kw = {} if frames is None else {"frames": frames}
        circuits = (synthesize_measurement_circuit(code, "alice", "correct", **kw),
                    synthesize_measurement_circuit(code, "bob", "correct", **kw))
        eng = TableauEngine(block_protocol(code, "correct")) if frames is None else ConvTableauEngine(code, 12)
        ex, ez = _errors(np.random.default_rng(5), T, n, 0.03)
        for t in range(T):
            ok, lab = run_circuit_trial(code, ex[t], ez[t], 11, t, "correct", frames or 12, circuits=circuits)
            eok, elab = eng.run_trial(ex[t], ez[t], 11, t)
            assert ok == eok and list(lab) == list(elab)
