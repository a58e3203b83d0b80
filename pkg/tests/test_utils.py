#!/usr/bin/env python3
"""
测试 utils 中的报告读写与日志配置
"""

import unittest
import io
import json
import logging
import os
import sys
import tempfile

import numpy as np

# 添加项目根目录到 Python 搜索路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from utils.log import level_from_flags, setup_logging
from utils.report_io import ReportIO


class TestReportIO(unittest.TestCase):
    """测试 ReportIO"""

    def test_json_handles_numpy(self):
        text = ReportIO.to_json_text({"b": np.float64(0.5), "a": np.arange(3), "n": np.int64(2)})
        self.assertEqual(json.loads(text), {"a": [0, 1, 2], "b": 0.5, "n": 2})
        self.assertLess(text.index('"a"'), text.index('"b"'))
        with self.assertRaises(TypeError):
            ReportIO.to_json_text({"x": object()})

    def test_csv_text(self):
        text = ReportIO.csv_text("demo/1", ["x", "y"], [[1 / 3, "a"], [2, np.float64(0.25)]])
        self.assertEqual(text, "# schema=demo/1\nx,y\n0.3333333333,a\n2,0.25\n")

    def test_write_text_creates_directory(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "a", "b", "report.txt")
            ReportIO.write_text(path, "内容\n")
            with open(path, encoding="utf-8") as f:
                self.assertEqual(f.read(), "内容\n")


class TestLogging(unittest.TestCase):
    """测试日志级别与处理器"""

    def tearDown(self):
        setup_logging(logging.WARNING)

    def test_levels(self):
        self.assertEqual(level_from_flags(0, False), logging.WARNING)
        self.assertEqual(level_from_flags(1, False), logging.INFO)
        self.assertEqual(level_from_flags(3, False), logging.DEBUG)
        self.assertEqual(level_from_flags(2, True), logging.ERROR)

    def test_single_handler_without_timestamp(self):
        stream = io.StringIO()
        setup_logging(logging.INFO)
        root = setup_logging(logging.INFO, stream)
        self.assertEqual(len(root.handlers), 1)
        logging.getLogger("singapore_qkd.demo").info("第%d轮", 1)
        self.assertEqual(stream.getvalue(), "INFO singapore_qkd.demo: 第1轮\n")


if __name__ == "__main__":
    unittest.main()
