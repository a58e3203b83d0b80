#!/usr/bin/env python3
import csv
import io
import json
import os

import numpy as np


class ReportIO:
    """报告与记录的读写工具类"""

    @staticmethod
    def ensure_directory_exists(file_path):
        """确保文件所在目录存在"""
        directory = os.path.dirname(os.path.abspath(file_path))
        if not os.path.exists(directory):
            os.makedirs(directory, exist_ok=True)

    @staticmethod
    def to_json_text(data, sort_keys=True):
        return json.dumps(data, ensure_ascii=False, indent=2, sort_keys=sort_keys, default=ReportIO._default) + "\n"

    @staticmethod
    def _default(value):
        # numpy 标量与数组
        if isinstance(value, np.generic):
            return value.item()
        if isinstance(value, np.ndarray):
            return value.tolist()
        raise TypeError(f"无法序列化 {type(value).__name__}")

    @staticmethod
    def write_text(file_path, text):
        ReportIO.ensure_directory_exists(file_path)
        with open(file_path, "w", encoding="utf-8", newline="") as f:
            f.write(text)

    @staticmethod
    def csv_text(schema, header, rows):
        """首行为 # schema=...，随后是表头与数据行"""
        buffer = io.StringIO()
        buffer.write(f"# schema={schema}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{x:.10g}" if isinstance(x, float) else x for x in row])
        return buffer.getvalue()

