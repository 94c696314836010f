"""Tests for code construction, validation and QCODE4 files."""
import tempfile
import unittest
from pathlib import Path

import numpy as np

from codes import (CodeFormatError, CodeSpec, CodeValidationError, build_planar, build_toric, build_xzzx,
                   estimate_distance, hypergraph_product, load_code, repetition_check, require_valid,
                   save_code, validate)
from pauli import PauliSymbol, PauliVector, Residual, classify_residual, symplectic_product, syndrome_of


class TestSurfaceCodes(unittest.TestCase):
    def test_toric_parameters(self):
        """Toric codes are [[2L^2, 2, L]] with weight-4 checks."""
        for L in (2, 3, 4):
            code = build_toric(L)
            self.assertEqual(code.n_qubits, 2 * L * L)
            self.assertEqual(code.n_logical, 2)
            self.assertTrue(code.is_css)
            self.assertTrue(validate(code).valid)
            self.assertEqual(set(code.tanner.check_degrees()), {4})
            self.assertEqual(set(code.tanner.qubit_degrees()), {4})

    def test_planar_parameters(self):
        """Planar L=3 is [[13, 1, 3]]."""
        code = build_planar(3)
        self.assertEqual((code.n_qubits, code.n_checks, code.n_logical), (13, 12, 1))
        self.assertEqual(code.name, "planar_L3")
        self.assertEqual(code.family, "planar")
        self.assertEqual(code.lattice_size, 3)
        self.assertTrue(validate(code).valid)

    def test_planar_family(self):
        """Planar L is the product of two open repetition checks, [[2L^2 - 2L + 1, 1]] for L = 2..9."""
        for L in range(2, 10):
            with self.subTest(L=L):
                code = build_planar(L)
                h = repetition_check(L, False)
                product = hypergraph_product(h, h)
                self.assertEqual(code.n_qubits, 2 * L * L - 2 * L + 1)
                self.assertEqual((code.n_qubits, code.n_checks, code.n_logical),
                                 (product.n_qubits, product.n_checks, product.n_logical))
                self.assertEqual(code.n_checks, 2 * L * (L - 1))
                self.assertEqual(code.n_logical, 1)

    def test_planar_seven(self):
        """Planar L=7 is [[85, 1]] with weight-7 logicals along the first row and column."""
        L = 7
        code = build_planar(L)
        self.assertEqual((code.n_qubits, code.n_logical), (85, 1))
        row_x = PauliVector.from_symbols([PauliSymbol.X if q < L else 0 for q in range(code.n_qubits)])
        column_z = PauliVector.from_symbols([PauliSymbol.Z if q < L * L and q % L == 0 else 0
                                             for q in range(code.n_qubits)])
        for logical in (row_x, column_z):
            self.assertEqual(logical.weight(), L)
            self.assertFalse(np.any(syndrome_of(code, logical)))
            self.assertEqual(classify_residual(code, logical), Residual.LOGICAL)
        self.assertEqual(symplectic_product(row_x, column_z), 1)
        self.assertIsNone(estimate_distance(code, max_weight=2))

    def test_planar_boundary_degrees(self):
        """Four corner qubits have degree 2, 4(L-2) edge qubits degree 3 and the rest degree 4."""
        for L in range(3, 8):
            with self.subTest(L=L):
                code = build_planar(L)
                degrees = code.tanner.qubit_degrees()
                counts = {d: int(np.count_nonzero(degrees == d)) for d in np.unique(degrees)}
                self.assertEqual(counts, {2: 4, 3: 4 * (L - 2), 4: code.n_qubits - 4 - 4 * (L - 2)})

    def test_distances(self):
        """Exhaustive search finds d = L."""
        self.assertEqual(estimate_distance(build_planar(3), max_weight=3), 3)
        self.assertEqual(estimate_distance(build_toric(3), max_weight=3), 3)
        self.assertIsNone(estimate_distance(build_planar(3), max_weight=2))

    def test_xzzx(self):
        """XZZX codes have K=2 for even L, K=1 for odd L, and are not CSS."""
        for L, k in ((2, 2), (3, 1), (4, 2), (5, 1)):
            code = build_xzzx(L)
            self.assertEqual(code.n_qubits, L * L)
            self.assertEqual(code.n_logical, k)
            self.assertFalse(code.is_css)
            self.assertTrue(validate(code).valid)

    def test_logical_pairing(self):
        """Logical X_k anticommutes with Z_k only."""
        code = build_toric(3)
        logicals = code.logicals
        self.assertEqual(len(logicals), 4)
        for a in range(4):
            for b in range(4):
                expected = int(a // 2 == b // 2 and a != b)
                self.assertEqual(symplectic_product(logicals[a], logicals[b]), expected)

    def test_bad_sizes(self):
        """Lattices smaller than 2 are rejected."""
        for builder in (build_toric, build_planar, build_xzzx):
            with self.assertRaises(ValueError):
                builder(1)
        with self.assertRaises(ValueError):
            repetition_check(1, False)

    def test_hypergraph_product_shape(self):
        """HGP of an m x n check with itself has n^2 + m^2 qubits."""
        h = repetition_check(4, False)
        code = hypergraph_product(h, h)
        self.assertEqual(code.n_qubits, 16 + 9)
        self.assertEqual(code.n_checks, 24)


class TestTannerGraph(unittest.TestCase):
    def test_edges(self):
        """Edges carry the check's symbol on each qubit."""
        code = CodeSpec.from_strings(["XYI", "IZZ"])
        tanner = code.tanner
        self.assertEqual(tanner.n_edges, 4)
        self.assertEqual(tanner.check_neighbors(0), [(0, PauliSymbol.X), (1, PauliSymbol.Y)])
        self.assertEqual(tanner.qubit_neighbors(1), [(0, PauliSymbol.Y), (1, PauliSymbol.Z)])
        self.assertEqual(tanner.edge_id(1, 2), 3)
        with self.assertRaises(KeyError):
            tanner.edge_id(0, 2)


class TestValidation(unittest.TestCase):
    def test_anticommuting_rows(self):
        """Anticommuting rows are reported and carry no logicals."""
        code = CodeSpec.from_strings(["XI", "ZI"])
        self.assertEqual(code.logicals, ())
        report = validate(code)
        self.assertFalse(report.valid)
        self.assertIn("rows 0 and 1 anticommute", report.violation)
        with self.assertRaises(CodeValidationError):
            require_valid(code)

    def test_missing_logicals(self):
        """A logical count other than 2K is a violation."""
        code = build_planar(2)
        broken = CodeSpec(code.hx, code.hz, (), name="broken")
        self.assertIn("expected 2K=2", validate(broken).violation)

    def test_logical_not_in_normalizer(self):
        """A stored logical that flips a check is a violation."""
        code = CodeSpec.from_strings(["ZZ"])
        bad = CodeSpec(code.hx, code.hz, (code.logicals[0], CodeSpec.from_strings(["XI"]).row(0)))
        self.assertIn("anticommutes with row 0", validate(bad).violation)

    def test_histograms(self):
        """Weight histograms count rows and columns by weight."""
        report = validate(build_planar(2))
        self.assertEqual(report.n_qubits, 5)
        self.assertEqual(sum(report.row_weights.values()), 4)
        self.assertEqual(sum(report.col_weights.values()), 5)


class TestCodeFiles(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, text: str, name: str = "code.qc4") -> Path:
        path = self.dir / name
        path.write_text(text, encoding="utf-8")
        return path

    def test_load_minimal(self):
        """A single ZZ check encodes one qubit."""
        code = load_code(self.write("QCODE4 1 2\n0:Z 1:Z\n", "zz.qc4"))
        self.assertEqual(code.name, "zz")
        self.assertEqual(code.family, "file")
        self.assertEqual(code.n_logical, 1)
        self.assertEqual(len(code.logicals), 2)
        self.assertTrue(validate(code).valid)

    def test_comments_and_declared_k(self):
        """Comments are ignored and a matching K line is accepted."""
        text = "# two-qubit code\nQCODE4 1 2  # header\nK 1\n0:Z 1:Z\n"
        self.assertEqual(load_code(self.write(text)).n_logical, 1)

    def test_wrong_declared_k(self):
        """A K line disagreeing with the rank is an error."""
        with self.assertRaises(CodeFormatError):
            load_code(self.write("QCODE4 1 2\nK 2\n0:Z 1:Z\n"))

    def test_format_errors(self):
        """Malformed files name the offending line."""
        cases = [
            ("QCODE3 1 2\n0:Z 1:Z\n", "line 1"),
            ("QCODE4 1 2\n0:Q 1:Z\n", "line 2"),
            ("QCODE4 1 2\n0:Z 5:Z\n", "line 2"),
            ("QCODE4 1 2\n0:Z 0:X\n", "line 2"),
            ("QCODE4 1 2\n0Z\n", "line 2"),
        ]
        for text, where in cases:
            with self.subTest(text=text):
                with self.assertRaises(CodeFormatError) as ctx:
                    load_code(self.write(text))
                self.assertIn(where, str(ctx.exception))

    def test_too_few_rows(self):
        """Missing check rows are reported."""
        with self.assertRaises(CodeFormatError):
            load_code(self.write("QCODE4 2 2\n0:Z 1:Z\n"))

    def test_empty_file(self):
        with self.assertRaises(CodeFormatError):
            load_code(self.write("# nothing\n"))

    def test_save_and_load(self):
        """Saving preserves checks and logicals exactly."""
        code = build_xzzx(3)
        path = self.dir / "xzzx.qc4"
        save_code(code, path)
        loaded = load_code(path)
        np.testing.assert_array_equal(loaded.symbol_matrix(), code.symbol_matrix())
        self.assertEqual(loaded.logicals, code.logicals)
        self.assertTrue(validate(loaded).valid)

    def test_explicit_logicals(self):
        """A LOGICALS section overrides the computed operators."""
        text = "QCODE4 1 2\n0:Z 1:Z\nLOGICALS 2\n0:X 1:X\n0:Z\n"
        code = load_code(self.write(text))
        self.assertEqual([str(l) for l in code.logicals], ["XX", "ZI"])
        self.assertTrue(validate(code).valid)


if __name__ == '__main__':
    unittest.main()
