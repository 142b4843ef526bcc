import itertools

import numpy as np
import pytest

from stabdistill.gf2 import (CheckMatrix, DimensionError, PauliString, RankDeficiencyError, gf2_rank,
                             gf2_solve, multiply, parse_code_text, product_log_i, same_group,
                             standard_form, symplectic_product)

FIVE = ["YZIZY", "IXZZX", "ZZXIX", "ZIZYY"]
NINE = ["XXXIIIIII", "IIIXXXIII", "IIIIIIXXX", "ZZIZZIZZI", "ZIZZIZZIZ"]

# single-qubit products as (power of i, label)
TABLE = {
    ("I", "I"): (0, "I"), ("I", "X"): (0, "X"), ("I", "Y"): (0, "Y"), ("I", "Z"): (0, "Z"),
    ("X", "I"): (0, "X"), ("X", "X"): (0, "I"), ("X", "Y"): (1, "Z"), ("X", "Z"): (3, "Y"),
    ("Y", "I"): (0, "Y"), ("Y", "X"): (3, "Z"), ("Y", "Y"): (0, "I"), ("Y", "Z"): (1, "X"),
    ("Z", "I"): (0, "Z"), ("Z", "X"): (1, "Y"), ("Z", "Y"): (3, "X"), ("Z", "Z"): (0, "I"),
}


def table_product(a: str, b: str):
    ph, out = 0, []
    for u, v in zip(a, b):
        k, c = TABLE[(u, v)]
        ph += k
        out.append(c)
    return ph % 4, "".join(out)


class TestPauliString:
    def test_round_trip_text(self):
        for s in ["XYZI", "-ZZ", "+IIIY"]:
            p = PauliString.from_str(s)
            assert PauliString.from_str(str(p)) == p

    def test_weight_and_identity(self):
        assert PauliString.identity(4).weight == 0
        assert PauliString.identity(4).sign == 1
        assert PauliString.from_str("XIYZ").weight == 3

    def test_transpose_flips_on_odd_y(self):
        assert PauliString.from_str("YII").transpose().sign == -1
        assert PauliString.from_str("YYX").transpose().sign == 1
        assert PauliString.from_str("XZ").transpose().sign == 1

    def test_bad_label(self):
        with pytest.raises(ValueError):
            PauliString.from_str("XQ")

    def test_embed_restrict(self):
        p = PauliString.from_str("XZ")
        e = p.embed(4, [3, 1])
        assert str(e).lstrip("+") == "IZIX"
        assert e.restrict([3, 1]) == p


class TestSymplectic:
    def test_examples(self):
        X, Z = PauliString.from_str("X"), PauliString.from_str("Z")
        assert symplectic_product(X, Z) == 1
        assert symplectic_product(PauliString.from_str("XX"), PauliString.from_str("ZZ")) == 0
        g1, g2 = PauliString.from_str(FIVE[0]), PauliString.from_str(FIVE[1])
        assert symplectic_product(g1, g2) == 0

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            symplectic_product(PauliString.from_str("X"), PauliString.from_str("ZZ"))
        with pytest.raises(DimensionError):
            multiply(PauliString.from_str("X"), PauliString.from_str("ZZ"))

    def test_against_dense_matrices(self):
        mats = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]),
                "Z": np.diag([1, -1])}
        for a, b in itertools.product("IXYZ", repeat=2):
            A, B = mats[a], mats[b]
            anti = not np.allclose(A @ B, B @ A)
            assert symplectic_product(PauliString.from_str(a), PauliString.from_str(b)) == int(anti)


class TestMultiply:
    def test_examples(self):
        X, Z = PauliString.from_str("X"), PauliString.from_str("Z")
        assert multiply(X, X) == PauliString.identity(1)
        xz = multiply(X, Z)
        assert str(xz.unsigned()).lstrip("+") == "Y"
        sq = multiply(xz, xz)
        assert sq.is_identity and sq.sign == 1

    def test_five_qubit_generators(self):
        g1, g2 = PauliString.from_str(FIVE[0]), PauliString.from_str(FIVE[1])
        prod = multiply(g1, g2)
        ph, lab = table_product(FIVE[0], FIVE[1])
        assert ph in (0, 2)
        assert str(prod).lstrip("+-") == lab
        assert prod.sign == (1 if ph == 0 else -1)
        assert prod.weight == 4
        for g in FIVE:
            assert prod.commutes(PauliString.from_str(g))

    def test_phase_word_formula(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            a = "".join(rng.choice(list("IXYZ"), 5))
            b = "".join(rng.choice(list("IXYZ"), 5))
            pa, pb = PauliString.from_str(a), PauliString.from_str(b)
            ph, lab = table_product(a, b)
            assert product_log_i(pa.x, pa.z, pb.x, pb.z) % 4 == ph
            assert str(pa * pb).lstrip("+-") == lab


class TestLinearAlgebra:
    def test_rank(self):
        assert gf2_rank([0b011, 0b110, 0b101]) == 2
        assert gf2_rank([]) == 0

    def test_solve(self):
        rows = [0b011, 0b110]
        v = gf2_solve(rows, [1, 0], 3)
        assert v is not None
        assert ((rows[0] & v).bit_count() & 1, (rows[1] & v).bit_count() & 1) == (1, 0)
        assert gf2_solve([0b1, 0b1], [0, 1], 1) is None


class TestCheckMatrix:
    def test_rejects_anticommuting(self):
        with pytest.raises(ValueError):
            CheckMatrix.from_strings(["XI", "ZI"])

    def test_rejects_dependent(self):
        with pytest.raises(ValueError):
            CheckMatrix.from_strings(["XX", "ZZ", "YY"])

    def test_text_parsing(self):
        m = parse_code_text("# comment\nYZIZY\n\nIXZZX\nZZXIX\nZIZYY\n")
        assert len(m) == 4 and m.n == 5


class TestStandardForm:
    def test_five_one_three(self):
        sf = standard_form(CheckMatrix.from_strings(FIVE))
        assert sf.r == 4 and sf.m - sf.r == 0 and sf.k == 1
        assert same_group(sf.original_rows(), CheckMatrix.from_strings(FIVE).rows)

    def test_single_generator(self):
        sf = standard_form(CheckMatrix.from_strings(["XXXX"]))
        b = sf.blocks
        assert sf.r == 1
        assert b["A1"].size == 0
        assert b["A2"].tolist() == [[1, 1, 1]]

    def test_nine_four_two(self):
        sf = standard_form(CheckMatrix.from_strings(NINE))
        assert sf.r == 3 and sf.m - sf.r == 2 and sf.k == 4
        assert same_group(sf.original_rows(), CheckMatrix.from_strings(NINE).rows)

    def test_identity_blocks(self):
        for rows in (FIVE, NINE):
            sf = standard_form(CheckMatrix.from_strings(rows))
            n, r, m = sf.n, sf.r, sf.m
            xs = np.array([p.x_bits() for p in sf.rows])
            zs = np.array([p.z_bits() for p in sf.rows])
            assert (xs[:r, :r] == np.eye(r, dtype=np.uint8)).all()
            assert (zs[r:, r:m] == np.eye(m - r, dtype=np.uint8)).all()
            assert not xs[r:].any()

    def test_rank_deficiency_names_row(self):
        # build a matrix whose validation is bypassed to reach the elimination check
        rows = (PauliString.from_str("ZZI"), PauliString.from_str("IZZ"), PauliString.from_str("ZIZ"))
        m = object.__new__(CheckMatrix)
        object.__setattr__(m, "n", 3)
        object.__setattr__(m, "rows", rows)
        with pytest.raises(RankDeficiencyError) as e:
            standard_form(m)
        assert e.value.row == 2

    def test_random_codes_preserve_group(self):
        rng = np.random.default_rng(11)
        done = 0
        while done < 30:
            n = int(rng.integers(3, 8))
            gens = []
            for _ in range(100):
                cand = PauliString.from_str("".join(rng.choice(list("IXYZ"), n)))
                if cand.is_identity or not all(cand.commutes(g) for g in gens):
                    continue
                vec = [((g.x | (g.z << n))) for g in gens + [cand]]
                if gf2_rank(vec) == len(gens) + 1:
                    gens.append(cand)
                if len(gens) == n - 1:
                    break
            if not gens:
                continue
            cm = CheckMatrix(n, tuple(gens))
            sf = standard_form(cm)
            assert same_group(sf.original_rows(), cm.rows)
            done += 1
