#!/usr/bin/env python3
"""
测试 main.py 的命令行：退出码、确定性输出与报告格式
"""

import unittest
import io
import json
import os
import sys
import tempfile
from unittest import mock

import numpy as np

# 添加项目根目录到 Python 搜索路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from main import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, RunConfig, build_parser, main
from singapore_qkd.config import QkdConfig


def _run(*argv):
    out = io.StringIO()
    code = main(["-q", *argv], stdout=out)
    return code, out.getvalue()


class TestArguments(unittest.TestCase):
    """测试参数解析与校验"""

    def test_usage_errors(self):
        self.assertEqual(_run()[0], EXIT_USAGE)
        self.assertEqual(_run("simulate", "--pairs", "0")[0], EXIT_USAGE)
        self.assertEqual(_run("simulate", "--epsilon", "1.5")[0], EXIT_USAGE)
        self.assertEqual(_run("curves", "--grid", "0.1,0.9")[0], EXIT_USAGE)
        self.assertEqual(_run("curves", "--grid", "0.1,abc")[0], EXIT_USAGE)
        self.assertEqual(_run("simulate", "--format", "xml")[0], EXIT_USAGE)

    def test_help(self):
        with mock.patch("sys.stdout", new_callable=io.StringIO):
            self.assertEqual(main(["--help"]), EXIT_OK)

    def test_run_config(self):
        args = build_parser().parse_args(["simulate", "--epsilon", "0.2", "--rounds", "2", "--final-pairing"])
        cfg = RunConfig.from_args(args)
        self.assertEqual(cfg.rounds, 2)
        self.assertTrue(cfg.final_pairing)
        self.assertNotIn("output", cfg.to_dict())
        with self.assertRaises(ValueError):
            RunConfig("simulate", rounds=0)


class TestSimulate(unittest.TestCase):
    """测试 simulate 子命令"""

    def test_json_report(self):
        code, text = _run("simulate", "--epsilon", "0", "--pairs", "20000", "--rounds", "2",
                          "--seed", "3", "--format", "json")
        self.assertEqual(code, EXIT_OK)
        report = json.loads(text)
        self.assertEqual(report["schema"], QkdConfig.REPORT_SCHEMA)
        self.assertTrue(report["accounting"]["keys_identical"])
        self.assertAlmostEqual(report["accounting"]["efficiency"], 0.389, delta=0.015)
        self.assertAlmostEqual(report["ideal_efficiency"], 0.4 * 35 / 36, places=12)
        self.assertTrue(all(e["rate"] == 0 for e in report["error_rates"]))

    def test_deterministic_output(self):
        argv = ("simulate", "--epsilon", "0.2", "--pairs", "5000", "--seed", "11", "--format", "json")
        self.assertEqual(_run(*argv)[1], _run(*argv)[1])

    def test_csv_schema_line(self):
        code, text = _run("simulate", "--epsilon", "0.1", "--pairs", "2000", "--format", "csv")
        lines = text.splitlines()
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(lines[0], f"# schema={QkdConfig.SIMULATE_CSV_SCHEMA}")
        self.assertTrue(lines[1].startswith("round,input_length,pairs,bits"))

    def test_renes_text(self):
        code, text = _run("simulate", "--epsilon", "0.1", "--pairs", "3000", "--renes")
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(text.strip())

    def test_output_file(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "reports", "sim.json")
            code, text = _run("simulate", "--pairs", "1000", "--format", "json", "--output", path)
            self.assertEqual(code, EXIT_OK)
            self.assertEqual(text, "")
            with open(path, encoding="utf-8") as f:
                self.assertEqual(json.load(f)["command"], "simulate")


class TestCurvesAndThresholds(unittest.TestCase):
    """测试 curves 与 thresholds 子命令"""

    def test_curves_csv(self):
        code, text = _run("curves", "--format", "csv")
        lines = text.splitlines()
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(lines[0], f"# schema={QkdConfig.CURVES_CSV_SCHEMA}")
        self.assertEqual(lines[1], "epsilon,i_ab_tetra,i_ab_six,i_ae_tetra,holevo_chi,ck_yield")
        self.assertEqual(len(lines), 2 + 67)
        first = [float(x) for x in lines[2].split(",")]
        self.assertEqual(first[0], 0.0)
        self.assertAlmostEqual(first[1], 0.4150374993, places=9)
        self.assertAlmostEqual(first[2], 1 / 3, places=9)

    def test_curves_grid_json(self):
        code, text = _run("curves", "--grid", "0.1,0.2", "--workers", "2", "--format", "json")
        self.assertEqual(code, EXIT_OK)
        report = json.loads(text)
        self.assertEqual([p[0] for p in report["curves"][0]["grid"]], [0.1, 0.2])

    def test_thresholds_without_message_attack(self):
        code, text = _run("thresholds", "--no-message", "--format", "json")
        self.assertEqual(code, EXIT_OK)
        report = json.loads(text)
        by_name = {r["quantity"]: r for r in report["thresholds"]}
        self.assertAlmostEqual(by_name["ck"]["threshold"], 1 / (2.5 + np.sqrt(3)), delta=1e-6)
        self.assertEqual(set(by_name), {"ck", "holevo_tetra", "holevo_six"})
        self.assertEqual(len(report["reference_table"]), 27)


class TestTomographyAndSession(unittest.TestCase):
    """测试 tomography 与 session 子命令"""

    def test_tomography_accepts_low_noise(self):
        code, text = _run("tomography", "--epsilon", "0.1", "--samples", "20000", "--format", "json")
        self.assertEqual(code, EXIT_OK)
        report = json.loads(text)
        self.assertEqual(report["acceptance"]["verdict"], "accept")
        self.assertGreater(report["fidelity"], 0.95)

    def test_tomography_rejects_high_noise(self):
        code, _ = _run("tomography", "--epsilon", "0.6", "--samples", "5000", "--format", "csv")
        self.assertEqual(code, EXIT_FAILURE)

    def test_session(self):
        with tempfile.TemporaryDirectory() as directory:
            code, text = _run("session", "--epsilon", "0", "--pairs", "5000", "--rounds", "2",
                              "--format", "json", "--transcripts", directory)
            self.assertEqual(code, EXIT_OK)
            report = json.loads(text)
            self.assertTrue(report["keys_identical"])
            self.assertTrue(report["transcripts_identical"])
            self.assertTrue(os.path.exists(os.path.join(directory, "alice.jsonl")))

    def test_session_rejected(self):
        code, text = _run("session", "--epsilon", "0.5", "--pairs", "5000", "--format", "json")
        self.assertEqual(code, EXIT_FAILURE)
        self.assertEqual(json.loads(text)["alice"]["abort_reason"], "source rejected")


if __name__ == "__main__":
    unittest.main()
