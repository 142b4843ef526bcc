import math
from itertools import product

import numpy as np
import pytest

from oracles import enumerate_block
from stabdistill.blockcode import StabilizerCode, builtin_code, parity_code
from stabdistill.distillation import (FrameEngine, NoiseSpec, Protocol, TableauEngine, adaptive_schedule,
                                      bisect_sign_change, block_protocol, classes, classical_code_protocol,
                                      classical_protocol, fidelity_threshold, recurrence_protocol,
                                      run_block_protocol, run_protocol, run_recurrence, sample_paulis,
                                      single_lateral_equivalent)

REPETITION = StabilizerCode.from_strings(["ZZI", "IZZ"])


def all_patterns(n):
    pats = np.array(list(product(range(4), repeat=n)))
    ex = ((pats == 1) | (pats == 2)).astype(np.uint8)
    ez = ((pats == 2) | (pats == 3)).astype(np.uint8)
    return pats, ex, ez


def exact_frame(protocol, p):
    """Weighted 4^n enumeration through the frame engine."""
    pats, ex, ez = all_patterns(protocol.n_in)
    w = np.prod(np.where(pats == 0, 1 - p, p / 3), axis=1)
    ok, ox, oz = FrameEngine(protocol).run(ex, ez)
    cl = classes(ox, oz)
    ps = w[ok].sum()
    return ps, np.array([np.bincount(cl[ok, j], weights=w[ok], minlength=4) / ps for j in range(cl.shape[1])])


class TestNoise:
    def test_validation(self):
        with pytest.raises(ValueError):
            NoiseSpec(p=0.8)
        with pytest.raises(ValueError):
            NoiseSpec(px=0.1, py=0.1)
        with pytest.raises(ValueError):
            NoiseSpec(meas_flip=0.6)
        s = NoiseSpec(px=0.1, py=0.0, pz=0.05)
        assert s.p == pytest.approx(0.15) and s.probs == (0.1, 0.0, 0.05)
        assert NoiseSpec.from_fidelity(0.9).p == pytest.approx(0.1)

    def test_inverse_cdf(self):
        u = np.array([0.0, 0.69, 0.71, 0.81, 0.91, 0.999])
        x, z = sample_paulis(u, (0.1, 0.1, 0.1))
        assert list(zip(x, z)) == [(0, 0), (0, 0), (1, 0), (1, 1), (0, 1), (0, 1)]

    def test_bilateral_equivalent(self):
        p = 0.1
        rng_x = run_protocol(block_protocol(REPETITION, "detect"), NoiseSpec(p, bilateral=True), 200000, 5)
        q = single_lateral_equivalent(p)
        ps, _ = exact_frame(block_protocol(REPETITION, "detect"), q)
        assert abs(rng_x.success_prob - ps) < 4 * math.sqrt(ps * (1 - ps) / 200000)


class TestOracle:
    @pytest.mark.parametrize("code,mode,had", [
        (parity_code(2), "detect", True),
        (parity_code(3), "detect", True),
        (REPETITION, "detect", False),
        (REPETITION, "correct", False),
    ])
    @pytest.mark.parametrize("p", [0.05, 0.2])
    def test_frame_engine_equals_statevector(self, code, mode, had, p):
        proto = Protocol("t", (code,), (mode,), had)
        ps_o, cls_o = enumerate_block(code, mode, p, had)
        ps_f, cls_f = exact_frame(proto, p)
        assert ps_f == pytest.approx(ps_o, abs=1e-12)
        assert np.allclose(cls_f, cls_o, atol=1e-12)

    def test_monte_carlo_within_bounds(self):
        code = parity_code(3)
        ps, cls = enumerate_block(code, "detect", 0.2, True)
        r = run_recurrence(3, 1, NoiseSpec(0.2), 200000, seed=7)
        assert abs(r.success_prob - ps) < 3.5 * math.sqrt(ps * (1 - ps) / r.trials)
        got = r.residual_probs
        for j in range(2):
            sig = np.sqrt(cls[j] * (1 - cls[j]) / r.successes)
            assert (np.abs(got[j] - cls[j]) < 3.5 * sig + 1e-12).all()


class TestEngines:
    @pytest.mark.parametrize("proto", [
        block_protocol(builtin_code("five_one_three"), "correct"),
        block_protocol(builtin_code("five_one_three"), "detect"),
        recurrence_protocol(2, 2),
        recurrence_protocol(3, 2),
        classical_protocol([[1, 1, 0], [0, 1, 1]], [[1, 1]], ("correct", "detect")),
    ], ids=lambda p: f"{p.name}-{p.mode_label}")
    def test_frame_matches_tableau(self, proto):
        rng = np.random.default_rng(2)
        ex = (rng.random((60, proto.n_in)) < 0.15).astype(np.uint8)
        ez = (rng.random((60, proto.n_in)) < 0.15).astype(np.uint8)
        ok, ox, oz = FrameEngine(proto).run(ex, ez)
        cl = classes(ox, oz)
        eng = TableauEngine(proto)
        labels = np.array(list("IXYZ"))
        for t in range(60):
            tok, tl = eng.run_trial(ex[t], ez[t], seed=1, trial=t)
            assert tok == bool(ok[t])
            if tok:
                assert list(labels[cl[t]]) == tl

    def test_engines_agree_statistically(self):
        spec = NoiseSpec(0.1)
        a = run_recurrence(2, 2, spec, 4000, seed=3, engine="frame")
        b = run_recurrence(2, 2, spec, 4000, seed=3, engine="tableau")
        assert a.successes == b.successes
        assert (a.residual_counts == b.residual_counts).all()

    def test_worker_invariance(self):
        spec = NoiseSpec(0.1)
        a = run_recurrence(3, 2, spec, 30000, seed=11, workers=1)
        b = run_recurrence(3, 2, spec, 30000, seed=11, workers=2)
        assert a.successes == b.successes and (a.residual_counts == b.residual_counts).all()

    def test_seed_required(self):
        with pytest.raises(ValueError):
            run_recurrence(2, 1, NoiseSpec(0.1), 10, seed=None)
        with pytest.raises(ValueError):
            run_recurrence(2, 1, NoiseSpec(0.1), 0, seed=1)


class TestResults:
    def test_noiseless(self):
        r = run_block_protocol(builtin_code("five_one_three"), "correct", NoiseSpec(0.0), 500, seed=1)
        assert r.success_prob == 1 and r.fidelity_out == 1 and r.yield_ == pytest.approx(0.2)

    def test_row_and_ci(self):
        r = run_recurrence(2, 1, NoiseSpec(0.1), 10000, seed=2)
        row = r.to_row()
        assert row["n"] == 2 and row["k"] == 1 and row["F_in"] == pytest.approx(0.9)
        assert 0 < row["F_out_ci95"] < 0.02
        assert row["yield"] == pytest.approx(r.success_prob / 2)

    def test_merge_rejects_mismatch(self):
        a = run_recurrence(2, 1, NoiseSpec(0.1), 10, seed=2)
        b = run_recurrence(3, 1, NoiseSpec(0.1), 10, seed=2)
        with pytest.raises(ValueError):
            a + b

    def test_classical_needs_full_rank(self):
        with pytest.raises(ValueError):
            classical_protocol([[1, 1], [1, 1]], [[1, 1]])

    def test_classical_pair_code(self):
        r = classical_code_protocol([[1, 1]], [[1, 1]], NoiseSpec(0.1), 20000, seed=4, mode="detect")
        s = run_recurrence(2, 2, NoiseSpec(0.1), 20000, seed=4)
        assert r.n == s.n == 4 and r.k == s.k == 1
        assert r.success_prob == pytest.approx(s.success_prob, abs=0.02)


class TestThresholds:
    def test_bisection(self):
        assert bisect_sign_change(lambda x: x * x - 2, 0, 2, 1e-9) == pytest.approx(math.sqrt(2), abs=1e-8)
        with pytest.raises(ValueError):
            bisect_sign_change(lambda x: x * x + 1, -1, 1)

    def test_threshold_grows_with_n(self):
        t = [fidelity_threshold(n, 2, 20000, seed=3, tol=5e-3) for n in (2, 3, 4)]
        assert t[0] < t[1] < t[2]


class TestAdaptive:
    @pytest.mark.parametrize("p0", [0.03, 0.01, 0.003])
    @pytest.mark.parametrize("a", [0.2, 0.25, 0.4])
    def test_recursion_matches_closed_form(self, p0, a):
        s = adaptive_schedule(p0, a, 8)
        for k, rd in enumerate(s.rounds, start=1):
            n, r, p, P = s.closed_form(k)
            assert rd.n_real == pytest.approx(n, rel=1e-12)
            assert rd.r == pytest.approx(r, rel=1e-12)
            assert rd.p == pytest.approx(p, rel=1e-12)
            assert rd.P == pytest.approx(P, rel=1e-12)
        assert s.yield_product >= math.exp(-s.c_bound)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            adaptive_schedule(0.2, 0.25)
        with pytest.raises(ValueError):
            adaptive_schedule(0.01, 0.6)

    def test_integer_blocks(self):
        s = adaptive_schedule(0.01, 0.25, 3)
        assert all(rd.block >= 2 and rd.block <= rd.n_real for rd in s.rounds)
