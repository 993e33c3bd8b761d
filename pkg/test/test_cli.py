"""
命令行入口的单元测试
"""

import contextlib
import io
import json
import os
import tempfile
import unittest
from unittest import mock

import numpy as np

from src.channels import identity_channel
from src.cli import main, parse_range
from src.common.errors import ArgumentError
from src.common.settings import override_settings
from src.symspace import SymOperator, coherent_amplitudes


def run(argv):
    """运行命令行，返回 (退出码, 标准输出)"""
    stdout, stderr = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
        code = main(argv)
    return code, stdout.getvalue()


class TestParseRange(unittest.TestCase):
    """测试范围解析"""

    def test_inclusive(self):
        self.assertEqual(list(parse_range("2:5")), [2, 3, 4, 5])

    def test_invalid(self):
        with self.assertRaises(ArgumentError):
            parse_range("5:2")
        with self.assertRaises(ArgumentError):
            parse_range("2-5")


class TestCommands(unittest.TestCase):
    """测试各子命令"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()
        override_settings()

    def write_json(self, name, data):
        path = os.path.join(self.tmp.name, name)
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(data, handle)
        return path

    def test_identities(self):
        code, out = run(["identities", "--M", "30"])
        self.assertEqual(code, 0)
        self.assertTrue(json.loads(out)["passed"])
        self.assertEqual(run(["identities", "--M", "1"])[0], 0)

    def test_identities_fault_injection(self):
        code, out = run(["identities", "--M", "5", "--inject-fault"])
        self.assertEqual(code, 1)
        self.assertEqual(json.loads(out)["first_failure"]["identity"], "beta")

    def test_decompose(self):
        code, out = run(["decompose", "--d", "2", "--M", "1", "--k", "1"])
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)["p"], ["2/3", "1/3"])
        for args in (["--d", "2", "--M", "2", "--k", "2"], ["--d", "3", "--M", "2", "--k", "3"]):
            self.assertEqual(run(["decompose"] + args)[0], 0)

    def test_bounds_table(self):
        code, out = run(["bounds", "--d", "2", "--M-range", "2:12", "--k", "1"])
        self.assertEqual(code, 0)
        lines = out.strip().splitlines()
        self.assertEqual(len(lines), 12)
        header = lines[0].split(",")
        minima = [float(line.split(",")[header.index("min")]) for line in lines[1:]]
        self.assertEqual(minima, sorted(minima, reverse=True))

    def test_bounds_exact(self):
        code, out = run(["bounds", "--d", "2", "--M-range", "2:4", "--k", "1", "--exact", "--format", "json"])
        self.assertEqual(code, 0)
        for row in json.loads(out)["rows"]:
            self.assertLessEqual(row["upper"], row["min"] + 1e-6)

    def test_bounds_with_k_above_M(self):
        code, out = run(["bounds", "--d", "2", "--M-range", "1:2", "--k", "8"])
        self.assertEqual(code, 0)
        lines = out.strip().splitlines()
        header = lines[0].split(",")
        self.assertIn("clone_bound", header)
        self.assertEqual(lines[1].split(",")[header.index("bound2_exact")], "")
        self.assertEqual(run(["bounds", "--d", "2", "--M-range", "1:2", "--k", "8", "--exact"])[0], 2)

    def test_oversized_channel_is_resource_error(self):
        self.assertEqual(run(["decompose", "--d", "4", "--M", "30", "--k", "30"])[0], 3)
        self.assertEqual(run(["decompose", "--d", "2", "--M", "15", "--k", "10"])[0], 3)

    def test_missing_input_file_is_parse_error(self):
        missing = os.path.join(self.tmp.name, "missing.json")
        self.assertEqual(run(["definetti", missing, "--k", "1"])[0], 2)
        self.assertEqual(run(["broadcast", missing, "--k", "1"])[0], 2)

    def test_empty_range_is_usage_error(self):
        self.assertEqual(run(["bounds", "--d", "2", "--M-range", "5:2", "--k", "1"])[0], 2)

    def test_missing_argument_is_usage_error(self):
        self.assertEqual(run(["decompose", "--d", "2"])[0], 2)

    def test_definetti_product_state(self):
        rho = SymOperator.pure(2, 4, coherent_amplitudes(np.array([0.6, 0.8]), 4))
        path = self.write_json("state.json", rho.to_json())
        code, out = run(["definetti", path, "--k", "1"])
        self.assertEqual(code, 0)
        self.assertGreaterEqual(json.loads(out)["margin"], 0.0)

    def test_malformed_state_file(self):
        path = os.path.join(self.tmp.name, "broken.json")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("{not json")
        self.assertEqual(run(["definetti", path, "--k", "1"])[0], 2)

    def test_broadcast_identity(self):
        path = self.write_json("channel.json", identity_channel(2, 4).to_json())
        code, out = run(["broadcast", path, "--k", "1"])
        self.assertEqual(code, 0)
        self.assertLessEqual(json.loads(out)["distance"]["value"], 1.0)

    def test_capacity(self):
        code, out = run(["capacity", "--d", "2", "--M", "100", "--k", "1", "--din", "3"])
        self.assertEqual(code, 0)
        self.assertAlmostEqual(json.loads(out)["transpose_bound_linear"], 0.08)

    def test_capacity_resource_guard(self):
        with mock.patch.dict(os.environ, {"SYMCLONE_MAX_SDP": "4"}):
            code, _ = run(["capacity", "--d", "2", "--M", "2", "--k", "1", "--exact"])
        self.assertEqual(code, 3)

    def test_clonegap(self):
        code, out = run(["clonegap", "--d", "2", "--N", "1", "--M-range", "2:50", "--format", "json"])
        self.assertEqual(code, 0)
        rows = json.loads(out)["rows"]
        self.assertLess(rows[-1]["gap"], 0.01)

    def test_svg_output_file(self):
        path = os.path.join(self.tmp.name, "gap.svg")
        code, _ = run(["clonegap", "--d", "2", "--N", "1", "--M-range", "2:20", "--format", "svg",
                       "--out", path])
        self.assertEqual(code, 0)
        with open(path, encoding="utf-8") as handle:
            self.assertIn("<svg", handle.read())

    def test_deterministic_json(self):
        argv = ["bounds", "--d", "2", "--M-range", "2:3", "--k", "1", "--exact", "--format", "json",
                "--seed", "7"]
        self.assertEqual(run(argv), run(argv))


if __name__ == '__main__':
    unittest.main()
