"""Tests for the bp4 command line."""
import contextlib
import csv
import io
import json
import os
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from bp_cli import main, parse_int_list, parse_p_values, resolve_codes
from decoder_config import ConfigError


def run_cli(*argv: str):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        status = main(list(argv))
    return status, out.getvalue(), err.getvalue()


class TestParsing(unittest.TestCase):
    def test_p_values(self):
        """Single values, lists and inclusive ranges."""
        self.assertEqual(parse_p_values("0.05"), [0.05])
        self.assertEqual(parse_p_values("0.02,0.04"), [0.02, 0.04])
        self.assertEqual(parse_p_values("0.02:0.06:0.02"), [0.02, 0.04, 0.06])
        self.assertEqual(len(parse_p_values("0.02:0.16:0.02")), 8)

    def test_bad_p_values(self):
        for text in ("", "a", "0.1:0.2", "0.2:0.1:0.05", "0.1:0.2:0", "0.1:x:0.1"):
            with self.subTest(text=text):
                with self.assertRaises(ConfigError):
                    parse_p_values(text)

    def test_int_list(self):
        self.assertEqual(parse_int_list("3,5, 7"), [3, 5, 7])
        self.assertEqual(parse_int_list(None), [])
        with self.assertRaises(ConfigError):
            parse_int_list("3,x")

    def test_resolve_codes(self):
        self.assertEqual([c.name for c in resolve_codes("toric", [2, 3])], ["toric_L2", "toric_L3"])
        self.assertEqual(resolve_codes("ts40", [])[0].name, "ts40")
        with self.assertRaises(ConfigError):
            resolve_codes("hexagonal", [3])
        with self.assertRaises(ConfigError):
            resolve_codes("planar", [])


class TestCommands(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_codeinfo(self):
        status, out, _ = run_cli("codeinfo", "--code", "planar", "--L", "3", "--distance", "--max-weight", "3")
        self.assertEqual(status, 0)
        self.assertIn("planar_L3: [[13, 1, 3]] valid", out)

    def test_codeinfo_save(self):
        path = self.dir / "xzzx.qc4"
        status, _, _ = run_cli("codeinfo", "--code", "xzzx", "--L", "3", "--save", str(path))
        self.assertEqual(status, 0)
        status, out, _ = run_cli("codeinfo", "--code", f"file:{path}")
        self.assertEqual(status, 0)
        self.assertIn("xzzx: [[9, 1, ?]] valid", out)

    def test_invalid_code_exit_status(self):
        """Anticommuting checks fail validation with exit status 3."""
        path = self.dir / "bad.qc4"
        path.write_text("QCODE4 2 2\n0:X\n0:Z\n", encoding="utf-8")
        status, out, _ = run_cli("codeinfo", "--code", f"file:{path}")
        self.assertEqual(status, 3)
        self.assertIn("INVALID: rows 0 and 1 anticommute", out)
        status, _, err = run_cli("simulate", "--code", f"file:{path}", "--p", "0.1", "--trials", "5")
        self.assertEqual(status, 3)
        self.assertIn("validation", err)

    def test_argument_errors(self):
        """Bad inputs exit with status 2 and a message on stderr."""
        cases = [
            ("simulate", "--code", "planar", "--p", "0.1"),
            ("simulate", "--code", "moebius", "--L", "3", "--p", "0.1"),
            ("simulate", "--code", "planar", "--L", "3", "--p", "1.5"),
            ("simulate", "--code", "planar", "--L", "3", "--p", "0.1", "--decoder", "mbp", "--alpha", "-1"),
            ("simulate", "--code", "file:/nonexistent/code.qc4", "--p", "0.1"),
            ("bench", "--code", "planar", "--L", "3", "--p", "0.1", "--decoders", "plain,magic"),
        ]
        for argv in cases:
            with self.subTest(argv=argv):
                status, _, err = run_cli(*argv)
                self.assertEqual(status, 2)
                self.assertIn("Error", err)

    def test_unknown_decoder_rejected_by_parser(self):
        with self.assertRaises(SystemExit):
            run_cli("simulate", "--code", "planar", "--L", "3", "--p", "0.1", "--decoder", "magic")

    def test_simulate_csv_reproducible(self):
        """Same seed and --no-timing give byte-identical results."""
        outputs = []
        for name in ("a.csv", "b.csv"):
            path = self.dir / name
            status, _, _ = run_cli("simulate", "--code", "planar", "--L", "3", "--p", "0.02,0.04",
                                   "--trials", "30", "--seed", "7", "--no-timing", "--out", str(path))
            self.assertEqual(status, 0)
            outputs.append(path.read_bytes())
            self.assertTrue((self.dir / (name + ".manifest.json")).exists())
        self.assertEqual(outputs[0], outputs[1])
        rows = list(csv.DictReader(io.StringIO(outputs[0].decode("utf-8"))))
        self.assertEqual([r["p"] for r in rows], ["0.02", "0.04"])
        self.assertEqual(rows[0]["trials"], "30")
        self.assertEqual(rows[0]["mean_ms"], "")

    def test_worker_count_does_not_change_csv(self):
        """One and four workers write the same bytes when timing is off."""
        outputs = []
        for workers in ("1", "4"):
            path = self.dir / f"w{workers}.csv"
            status, _, _ = run_cli("simulate", "--code", "planar", "--L", "3", "--p", "0.06", "--decoder", "aewa",
                                   "--trials", "40", "--seed", "11", "--workers", workers, "--no-timing",
                                   "--out", str(path))
            self.assertEqual(status, 0)
            outputs.append(path.read_bytes())
        self.assertEqual(outputs[0], outputs[1])

    def test_bad_worker_environment(self):
        """A malformed BP4_WORKERS is an argument error, not a crash."""
        for value in ("many", "0"):
            with self.subTest(value=value):
                with mock.patch.dict(os.environ, {"BP4_WORKERS": value}):
                    with self.assertRaises(SystemExit) as caught:
                        run_cli("simulate", "--code", "planar", "--L", "3", "--p", "0.1", "--trials", "2")
                self.assertEqual(caught.exception.code, 2)
        with mock.patch.dict(os.environ, {"BP4_WORKERS": "many"}):
            status, _, _ = run_cli("simulate", "--code", "planar", "--L", "2", "--p", "0.1", "--trials", "2",
                                   "--workers", "1", "--no-timing")
        self.assertEqual(status, 0)

    def test_simulate_grid_shape(self):
        """Three toric sizes over an eight-point p range give 3 x 8 rows."""
        path = self.dir / "grid.csv"
        status, _, _ = run_cli("simulate", "--code", "toric", "--L", "4,6,8", "--decoder", "ewainit",
                               "--schedule", "serial", "--p", "0.02:0.16:0.02", "--trials", "2",
                               "--iter-max", "5", "--no-timing", "--out", str(path))
        self.assertEqual(status, 0)
        rows = list(csv.DictReader(path.open(encoding="utf-8")))
        self.assertEqual(len(rows), 24)
        self.assertEqual([r["L"] for r in rows[::8]], ["4", "6", "8"])
        self.assertEqual({r["schedule"] for r in rows}, {"serial"})
        self.assertEqual(rows[7]["p"], "0.16")

    def test_simulate_loaded_code(self):
        """A code saved to disk decodes like any built-in one."""
        code_path = self.dir / "planar3.qc4"
        status, _, _ = run_cli("codeinfo", "--code", "planar", "--L", "3", "--save", str(code_path))
        self.assertEqual(status, 0)
        out_path = self.dir / "loaded.csv"
        status, _, _ = run_cli("simulate", "--code", f"file:{code_path}", "--decoder", "plain", "--p", "0.02",
                               "--trials", "20", "--no-timing", "--out", str(out_path))
        self.assertEqual(status, 0)
        rows = list(csv.DictReader(out_path.open(encoding="utf-8")))
        self.assertEqual(len(rows), 1)
        self.assertEqual((rows[0]["N"], rows[0]["K"], rows[0]["trials"]), ("13", "1", "20"))

    def test_simulate_json(self):
        path = self.dir / "r.json"
        status, _, _ = run_cli("simulate", "--code", "toric", "--L", "3", "--p", "0.05", "--decoder", "aewa",
                               "--trials", "10", "--out", str(path))
        self.assertEqual(status, 0)
        data = json.loads(path.read_text(encoding="utf-8"))
        self.assertEqual(len(data["results"]), 1)
        self.assertEqual(data["results"][0]["decoder"], "aewa")
        self.assertEqual(data["manifest"]["master_seed"], 1)
        self.assertEqual(data["manifest"]["command"], "simulate")

    def test_simulate_stdout(self):
        """Without --out the CSV goes to stdout and the summaries to stderr."""
        status, out, err = run_cli("simulate", "--code", "planar", "--L", "2", "--p", "0.05", "--trials", "5",
                                   "--no-timing")
        self.assertEqual(status, 0)
        rows = list(csv.DictReader(io.StringIO(out)))
        self.assertEqual(len(rows), 1)
        self.assertIn("LER=", err)

    def test_bench(self):
        path = self.dir / "bench.csv"
        status, _, _ = run_cli("bench", "--code", "planar", "--L", "3", "--p", "0.05", "--trials", "10",
                               "--decoders", "plain,mbp", "--out", str(path))
        self.assertEqual(status, 0)
        rows = list(csv.DictReader(path.open(encoding="utf-8")))
        self.assertEqual([r["decoder"] for r in rows], ["plain", "mbp"])
        self.assertEqual([r["schedule"] for r in rows], ["parallel", "serial"])
        self.assertNotEqual(rows[0]["mean_ms"], "")

    def test_bench_default_schedules(self):
        """EWAInit and AEWA run in parallel and AMBP serially unless --schedule overrides all of them."""
        path = self.dir / "bench.csv"
        status, _, _ = run_cli("bench", "--code", "planar", "--L", "3", "--p", "0.05", "--trials", "4",
                               "--out", str(path))
        self.assertEqual(status, 0)
        rows = list(csv.DictReader(path.open(encoding="utf-8")))
        self.assertEqual([(r["decoder"], r["schedule"]) for r in rows],
                         [("ewainit", "parallel"), ("aewa", "parallel"), ("ambp", "serial")])
        status, _, _ = run_cli("bench", "--code", "planar", "--L", "3", "--p", "0.05", "--trials", "4",
                               "--schedule", "serial", "--out", str(path))
        self.assertEqual(status, 0)
        rows = list(csv.DictReader(path.open(encoding="utf-8")))
        self.assertEqual({r["schedule"] for r in rows}, {"serial"})

    def test_trap_single_decoder(self):
        trace = self.dir / "trace.csv"
        status, out, _ = run_cli("trap", "--decoder", "plain", "--trace", str(trace))
        self.assertEqual(status, 0)
        self.assertIn("converged=False", out)
        self.assertIn("oscillation period: 4", out)
        self.assertTrue(trace.exists())

    def test_trap_table(self):
        status, out, _ = run_cli("trap", "--iter-max", "20", "--T-values", "3")
        self.assertEqual(status, 0)
        self.assertIn("bp_ots", out)
        self.assertIn("iter=5", out)


if __name__ == '__main__':
    unittest.main()
