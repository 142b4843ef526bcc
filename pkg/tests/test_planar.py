import math

import numpy as np
import pytest

from stabdistill.distillation import NoiseSpec
from stabdistill.planar import (PlanarDecoder, ResourceEngine, ResourceFrameEngine, build_planar,
                                decode_error_prob, decoding_measurement_set, distill_resource,
                                measurement_threshold, parity_flip_prob, prepare_resource, residual_distribution,
                                run_resource_protocol, teleport_decode, teleport_encode, threshold_analysis)
from stabdistill.gf2 import gf2_rank
from stabdistill.tableau import ContractError

EIGEN = {"0": ("Z", 1), "1": ("Z", -1), "+": ("X", 1), "-": ("X", -1), "+i": ("Y", 1), "-i": ("Y", -1)}


def code_distance_brute(lat, kind):
    """Smallest logical of one type, by brute force over weights (small L only)."""
    from itertools import combinations
    checks = lat.z_stabs if kind == "X" else lat.x_stabs
    log = lat.logical_z() if kind == "X" else lat.logical_x()
    lmask = log.z if kind == "X" else log.x
    masks = [sum(1 << q for q in c) for c in checks]
    for w in range(1, lat.n + 1):
        for qs in combinations(range(lat.n), w):
            e = sum(1 << q for q in qs)
            if all((e & m).bit_count() % 2 == 0 for m in masks) and (e & lmask).bit_count() % 2:
                return w
    return None


class TestLattice:
    @pytest.mark.parametrize("L", [2, 3, 4, 6])
    def test_parameters(self, L):
        lat = build_planar(L)
        assert lat.n == 2 * L * L - 2 * L + 1
        stabs = lat.stabilizers()
        assert len(stabs) == lat.n - 1
        vec = [s.x | (s.z << lat.n) for s in stabs]
        assert gf2_rank(vec) == lat.n - 1
        for a in stabs:
            assert all(a.commutes(b) for b in stabs)
        lx, lz = lat.logical_x(), lat.logical_z()
        assert all(lx.commutes(s) and lz.commutes(s) for s in stabs)
        assert not lx.commutes(lz)
        assert lx.weight == L and lz.weight == L

    @pytest.mark.parametrize("L", [2, 3])
    def test_distance(self, L):
        lat = build_planar(L)
        assert code_distance_brute(lat, "X") == L
        assert code_distance_brute(lat, "Z") == L

    def test_qubit_count_at_23(self):
        assert build_planar(23).n == 1013

    def test_measurement_set(self):
        lat = build_planar(4)
        zl, xl, kept = decoding_measurement_set(lat)
        assert len(zl) == len(xl) == 3
        assert kept == lat.index[(0, 0)]
        assert not set(zl) & set(xl)

    def test_text(self):
        assert build_planar(3).to_text().count("\n") > 3


class TestAnalytic:
    def test_threshold_value(self):
        assert measurement_threshold(23) == pytest.approx(0.0196, abs=5e-4)
        assert decode_error_prob(measurement_threshold(10), 10) == pytest.approx(0.5, abs=1e-12)

    def test_power_law(self):
        Ls = np.arange(50, 401)
        th = np.array([measurement_threshold(int(L)) for L in Ls])
        slope = np.polyfit(np.log(Ls), np.log(th), 1)[0]
        assert slope == pytest.approx(-1, abs=0.05)

    def test_parity(self):
        assert parity_flip_prob(0.0, 5) == 0
        assert parity_flip_prob(0.5, 5) == pytest.approx(0.5)
        # two flips: odd iff exactly one
        assert parity_flip_prob(0.1, 3) == pytest.approx(2 * 0.1 * 0.9)
        with pytest.raises(ValueError):
            parity_flip_prob(0.6, 3)

    def test_residual_distribution_sums(self):
        d = residual_distribution(0.03, 6)
        assert sum(d) == pytest.approx(1)
        assert 1 - d[0] == pytest.approx(decode_error_prob(0.03, 6))

    def test_curve(self):
        r = threshold_analysis(5, samples=11)
        assert len(r.analytic_curve) == 11 and r.analytic_curve[0] == (0.0, 0.0)


class TestDecoder:
    @pytest.mark.parametrize("L", [3, 5])
    def test_weight_one_corrected(self, L):
        lat = build_planar(L)
        dec = PlanarDecoder(lat)
        lx, lz = lat.logical_x(), lat.logical_z()
        for q in range(lat.n):
            for ex, ez in ((1, 0), (0, 1), (1, 1)):
                x, z = ex << q, ez << q
                rx, rz = dec.recovery(*dec.syndrome(x, z))
                x ^= rx
                z ^= rz
                assert dec.syndrome(x, z) == (0, 0)
                assert (x & lz.z).bit_count() % 2 == 0
                assert (z & lx.x).bit_count() % 2 == 0

    def test_reset_clears_signs(self):
        lat = build_planar(3)
        dec = PlanarDecoder(lat)
        nx, nz = len(lat.x_stabs), len(lat.z_stabs)
        rng = np.random.default_rng(0)
        for _ in range(20):
            sx, sz = int(rng.integers(1 << nx)), int(rng.integers(1 << nz))
            px, pz = dec.reset(sx, sz)
            assert dec.syndrome(px, pz) == (sx, sz)
            assert (px & lat.logical_z().z).bit_count() % 2 == 0
            assert (pz & lat.logical_x().x).bit_count() % 2 == 0


class TestEngines:
    def test_noiseless(self):
        for L in (3, 4):
            r = run_resource_protocol(L, NoiseSpec(0.0), 200, seed=1, engine="tableau")
            assert r.fidelity_out == 1

    @pytest.mark.parametrize("L", [3, 4])
    def test_frame_matches_tableau(self, L):
        lat = build_planar(L)
        eng = ResourceEngine(L)
        feng = ResourceFrameEngine(L)
        rng = np.random.default_rng(L)
        T = 40
        ex = (rng.random((T, lat.n)) < 0.04).astype(np.uint8)
        ez = (rng.random((T, lat.n)) < 0.04).astype(np.uint8)
        fx = (rng.random((T, L - 1)) < 0.1).astype(np.uint8)
        fz = (rng.random((T, L - 1)) < 0.1).astype(np.uint8)
        ox, oz = feng.run(ex, ez, fx, fz)
        lab = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
        for t in range(T):
            assert eng.run_trial(ex[t], ez[t], fx[t], fz[t], seed=3, trial=t) == lab[(int(ox[t]), int(oz[t]))]

    def test_measurement_flips_match_closed_form(self):
        L, q = 6, 0.02
        T = 200000
        r = run_resource_protocol(L, NoiseSpec(0.0, meas_flip=q), T, seed=5, engine="frame")
        pl = 1 - r.fidelity_out
        exact = decode_error_prob(q, L)
        assert abs(pl - exact) < 3.5 * math.sqrt(exact * (1 - exact) / T)

    def test_cap(self):
        with pytest.raises(ValueError):
            run_resource_protocol(13, NoiseSpec(0.0), 10, seed=1, engine="tableau")


class TestTeleport:
    @pytest.mark.parametrize("state", list(EIGEN))
    def test_round_trip(self, state):
        r1 = prepare_resource(3, seed=1)
        logical = teleport_encode(r1, state)
        lab, sign = EIGEN[state]
        assert logical.expect(lab) == sign
        assert all(s == 0 for s in logical.stabilizer_signs())
        r2 = prepare_resource(3, seed=1, host=logical)
        phys = teleport_decode(r2, logical)
        assert phys.expect(lab) == sign

    def test_residual_error(self):
        r = prepare_resource(3, seed=2, residual="Z")
        logical = teleport_encode(r, "+")
        assert logical.expect("X") == -1

    def test_reuse_rejected(self):
        r = prepare_resource(3, seed=0)
        teleport_encode(r, "0")
        with pytest.raises(ContractError):
            teleport_encode(r, "0")

    def test_foreign_host(self):
        a = teleport_encode(prepare_resource(3, seed=0), "0")
        b = prepare_resource(3, seed=0)
        with pytest.raises(ContractError):
            teleport_decode(b, a)


class TestDistill:
    def test_improves(self):
        d = residual_distribution(0.02, 6)
        out = distill_resource(d, n=2, rounds=2)
        assert out.distillable
        assert out.total_error < 1 - d[0]
        assert len(out.success_probs) == 2

    def test_undistillable(self):
        out = distill_resource((0.5, 0.2, 0.1, 0.2))
        assert not out.distillable and "1/2" in out.message

    def test_validation(self):
        with pytest.raises(ValueError):
            distill_resource((0.5, 0.5, 0.5, 0.0))
