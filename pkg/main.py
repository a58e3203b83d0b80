#!/usr/bin/env python3
"""命令行入口：simulate / curves / thresholds / tomography / session"""
import argparse
import logging
import os
import sys
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np

from singapore_qkd import QkdConfig
from singapore_qkd.enums import AttackKind, PomLabel, Role, SiftingStep, Verdict
from singapore_qkd.errors import InsufficientDataError, NoiseRangeError, QkdError, ThresholdError
from singapore_qkd.measurement import frequencies_from_letters, project_to_state, reconstruct_state
from singapore_qkd.quantum import fidelity, trace_distance
from singapore_qkd.source import RngStream, noisy_singlet, sample_pairs, twirl
from singapore_qkd.systems.message_attack import message_attack_threshold
from singapore_qkd.systems.security import (CURVE_COLUMNS, ck_threshold, curves_table, default_grid,
                                            holevo_oneway_threshold, predicted_error_rate, secondary_noise,
                                            security_curves, table_one_reference)
from singapore_qkd.systems.session import AcceptancePolicy, SessionConfig, acceptance_test, run_loopback, \
    transcripts_identical
from singapore_qkd.systems.sifting import (SiftingConfig, ideal_efficiency, residual_statistics, run_renes_sifting,
                                           run_sifting)
from ui import UI
from utils.log import level_from_flags, setup_logging
from utils.report_io import ReportIO

logger = logging.getLogger("singapore_qkd.cli")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FAILURE = 3


@dataclass(frozen=True)
class RunConfig:
    """一次命令行运行的参数"""
    command: str
    epsilon: float = 0.0
    grid: Optional[Tuple[float, ...]] = None
    pairs: int = 100000
    rounds: int = QkdConfig.DEFAULT_ROUNDS
    final_pairing: bool = QkdConfig.DEFAULT_FINAL_PAIRING
    renes: bool = False
    seed: int = QkdConfig.DEFAULT_SEED
    output_format: str = "text"
    output: Optional[str] = None
    transport: str = "memory"
    samples: int = QkdConfig.TOMOGRAPHY_SAMPLES
    epsilon_max: float = QkdConfig.ACCEPT_EPSILON_MAX
    workers: int = 1
    message_attack: bool = True
    transcripts: Optional[str] = None

    def __post_init__(self):
        if self.pairs < 1:
            raise ValueError(f"--pairs 必须至少为1，得到 {self.pairs}")
        if self.rounds < 1:
            raise ValueError(f"--rounds 必须至少为1，得到 {self.rounds}")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"--epsilon 必须在 [0, 1)，得到 {self.epsilon}")
        if self.grid is not None:
            for eps in self.grid:
                if not 0.0 <= eps <= QkdConfig.SEPARABLE_EPSILON:
                    raise NoiseRangeError(f"网格点 {eps} 不在 [0, 2/3]")

    def to_dict(self):
        record = asdict(self)
        record.pop("output")
        record.pop("transcripts")
        if record["grid"] is not None:
            record["grid"] = list(record["grid"])
        return record

    @classmethod
    def from_args(cls, args):
        grid = None
        if getattr(args, "grid", None):
            grid = tuple(float(x) for x in args.grid.split(",") if x.strip())
        return cls(
            command=args.command,
            epsilon=getattr(args, "epsilon", 0.0),
            grid=grid,
            pairs=getattr(args, "pairs", 100000),
            rounds=getattr(args, "rounds", QkdConfig.DEFAULT_ROUNDS),
            final_pairing=getattr(args, "final_pairing", False),
            renes=getattr(args, "renes", False),
            seed=args.seed,
            output_format=args.format,
            output=args.output,
            transport=getattr(args, "transport", "memory"),
            samples=getattr(args, "samples", QkdConfig.TOMOGRAPHY_SAMPLES),
            epsilon_max=getattr(args, "epsilon_max", QkdConfig.ACCEPT_EPSILON_MAX),
            workers=getattr(args, "workers", 1),
            message_attack=not getattr(args, "no_message", False),
            transcripts=getattr(args, "transcripts", None),
        )


def _report(cfg, body):
    return {"schema": QkdConfig.REPORT_SCHEMA, "command": cfg.command, "config": cfg.to_dict(), **body}


def _key_value_rows(data, prefix=""):
    """嵌套字典展开为 (字段, 值) 行"""
    rows = []
    for key in sorted(data):
        value = data[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            rows.extend(_key_value_rows(value, name + "."))
        elif not isinstance(value, list):
            rows.append([name, value])
    return rows


class SingaporeQkdCli:
    def __init__(self, stdout=None):
        self.ui = UI()
        self.stdout = stdout or sys.stdout

    def emit(self, cfg, text):
        if cfg.output:
            ReportIO.write_text(cfg.output, text)
            logger.info("报告已写入 %s", cfg.output)
        else:
            self.stdout.write(text if text.endswith("\n") else text + "\n")

    # ---- simulate ----

    def simulate_report(self, cfg):
        alice, bob = sample_pairs(cfg.epsilon, cfg.pairs, RngStream(cfg.seed, QkdConfig.STREAM_SOURCE))
        alice, bob, _ = twirl(alice, bob, RngStream(cfg.seed, QkdConfig.STREAM_TWIRL))
        rng = RngStream(cfg.seed, QkdConfig.STREAM_ALICE)
        if cfg.renes:
            outcome = run_renes_sifting(alice, bob, rng)
            ideal = 1.0 / 3.0
        else:
            outcome = run_sifting(alice, bob, SiftingConfig(cfg.rounds, cfg.final_pairing), rng)
            ideal = ideal_efficiency(cfg.rounds, cfg.final_pairing)
        accounting = outcome.accounting.to_dict()
        error_rates = []
        for entry in accounting.pop("error_rates", []):
            entry["predicted"] = predicted_error_rate(cfg.epsilon, entry["round"], SiftingStep(entry["step"]))
            error_rates.append(entry)
        residuals = []
        try:
            for estimate in residual_statistics(outcome.round_outputs):
                predicted = cfg.epsilon
                for _ in range(estimate.round_index - 1):
                    predicted = secondary_noise(predicted)
                residuals.append({**estimate.to_dict(), "predicted": predicted})
        except InsufficientDataError:
            logger.debug("没有可用的留存序列")
        return _report(cfg, {
            "epsilon": cfg.epsilon,
            "pairs": cfg.pairs,
            "rounds": 1 if cfg.renes else cfg.rounds,
            "final_pairing": cfg.final_pairing,
            "accounting": accounting,
            "ideal_efficiency": ideal,
            "error_rates": error_rates,
            "residuals": residuals,
        })

    def cmd_simulate(self, cfg):
        report = self.simulate_report(cfg)
        if cfg.output_format == "json":
            text = ReportIO.to_json_text(report)
        elif cfg.output_format == "csv":
            header = ["round", "input_length", "pairs", "bits", "iteration_bits", "final_pairing_bits",
                      "renes_bits", "failures", "letters_consumed", "letters_set_aside", "residuals_carried",
                      "unpaired"]
            rows = [[r[name] for name in header] for r in report["accounting"]["rounds"]]
            text = ReportIO.csv_text(QkdConfig.SIMULATE_CSV_SCHEMA, header, rows)
        else:
            text = self.ui.render_simulation(report)
        self.emit(cfg, text)
        return EXIT_OK

    # ---- curves ----

    def cmd_curves(self, cfg):
        grid = default_grid() if cfg.grid is None else np.array(cfg.grid)
        curves = security_curves(grid, workers=cfg.workers)
        rows = curves_table(curves)
        if cfg.output_format == "json":
            text = ReportIO.to_json_text(_report(cfg, {"columns": list(CURVE_COLUMNS),
                                                       "curves": [c.to_dict() for c in curves]}))
        elif cfg.output_format == "csv":
            text = ReportIO.csv_text(QkdConfig.CURVES_CSV_SCHEMA, CURVE_COLUMNS, rows)
        else:
            text = self.ui.render_curves(CURVE_COLUMNS, rows)
        self.emit(cfg, text)
        return EXIT_OK

    # ---- thresholds ----

    def threshold_reports(self, cfg):
        jobs = [
            ("ck", ck_threshold),
            ("holevo_tetra", lambda: holevo_oneway_threshold(PomLabel.TETRA)),
            ("holevo_six", lambda: holevo_oneway_threshold(PomLabel.SIX)),
        ]
        if cfg.message_attack:
            for kind in AttackKind:
                jobs.append((f"message_{kind.value}", lambda kind=kind: message_attack_threshold(kind)))
        reports, failures = [], []
        for name, job in jobs:
            try:
                reports.append(job().to_dict())
            except ThresholdError as exc:
                logger.error("%s 求解失败: %s", name, exc)
                failures.append({"quantity": name, "error": str(exc)})
        return reports, failures

    def cmd_thresholds(self, cfg):
        reports, failures = self.threshold_reports(cfg)
        reference = [{"attack": a, "row": r, "column": c, "value": v}
                     for (a, r, c), v in sorted(table_one_reference().items())]
        if cfg.output_format == "json":
            text = ReportIO.to_json_text(_report(cfg, {"thresholds": reports, "failures": failures,
                                                       "reference_table": reference}))
        elif cfg.output_format == "csv":
            header = ["quantity", "threshold", "reference", "delta", "bracket_lo", "bracket_hi", "iterations"]
            rows = [[r["quantity"], r["threshold"], "" if r["reference"] is None else r["reference"],
                     "" if r["delta"] is None else r["delta"], r["bracket"][0], r["bracket"][1], r["iterations"]]
                    for r in reports]
            text = ReportIO.csv_text(QkdConfig.THRESHOLDS_CSV_SCHEMA, header, rows)
        else:
            text = self.ui.render_thresholds(reports)
        self.emit(cfg, text)
        return EXIT_FAILURE if failures else EXIT_OK

    # ---- tomography ----

    def tomography_report(self, cfg):
        alice, bob = sample_pairs(cfg.epsilon, cfg.samples, RngStream(cfg.seed, QkdConfig.STREAM_SOURCE))
        alice, bob, _ = twirl(alice, bob, RngStream(cfg.seed, QkdConfig.STREAM_TWIRL))
        freqs = frequencies_from_letters(alice, bob)
        rho, positive = reconstruct_state(freqs)
        target = noisy_singlet(cfg.epsilon)
        physical = rho if positive else project_to_state(rho)
        acceptance = acceptance_test(freqs, cfg.samples, AcceptancePolicy(epsilon_max=cfg.epsilon_max))
        return _report(cfg, {
            "epsilon": cfg.epsilon,
            "rho": rho.matrix.tolist(),
            "rho_state": rho.to_dict(),
            "positive": positive,
            "fidelity": fidelity(physical, target),
            "trace_distance": trace_distance(rho, target),
            "acceptance": acceptance.to_dict(),
        })

    def cmd_tomography(self, cfg):
        report = self.tomography_report(cfg)
        accepted = report["acceptance"]["verdict"] == Verdict.ACCEPT.value
        if cfg.output_format == "text":
            text = self.ui.render_tomography(report)
        else:
            report = {k: v for k, v in report.items() if k != "rho"}
            if cfg.output_format == "json":
                text = ReportIO.to_json_text(report)
            else:
                text = ReportIO.csv_text("tomography/1", ["field", "value"], _key_value_rows(report))
        self.emit(cfg, text)
        return EXIT_OK if accepted else EXIT_FAILURE

    # ---- session ----

    def cmd_session(self, cfg):
        config = SessionConfig(seed=cfg.seed, rounds=cfg.rounds, final_pairing=cfg.final_pairing,
                               samples=cfg.samples, policy=AcceptancePolicy(epsilon_max=cfg.epsilon_max))
        alice, bob = run_loopback(cfg.epsilon, cfg.pairs, config, kind=cfg.transport)
        if cfg.transcripts:
            for result in (alice, bob):
                logger.info(result.save_transcript(os.path.join(cfg.transcripts, f"{result.role.value}.jsonl")))
        report = _report(cfg, {
            Role.ALICE.value: alice.to_dict(),
            Role.BOB.value: bob.to_dict(),
            "keys_identical": alice.key == bob.key,
            "transcripts_identical": transcripts_identical(alice, bob),
        })
        if cfg.output_format == "json":
            text = ReportIO.to_json_text(report)
        elif cfg.output_format == "csv":
            text = ReportIO.csv_text("session/1", ["field", "value"], _key_value_rows(report))
        else:
            text = self.ui.render_session(report)
        self.emit(cfg, text)
        return EXIT_FAILURE if (alice.aborted or bob.aborted) else EXIT_OK

    def run(self, cfg):
        handler = {
            "simulate": self.cmd_simulate,
            "curves": self.cmd_curves,
            "thresholds": self.cmd_thresholds,
            "tomography": self.cmd_tomography,
            "session": self.cmd_session,
        }[cfg.command]
        return handler(cfg)


def build_parser():
    parser = argparse.ArgumentParser(prog="singapore-qkd", description="四面体协议的模拟与安全分析")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v 显示 INFO，-vv 显示 DEBUG")
    parser.add_argument("-q", "--quiet", action="store_true", help="只显示错误")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=QkdConfig.default_seed(),
                        help=f"随机种子（默认取环境变量 {QkdConfig.SEED_ENV_VAR}）")
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--output", help="写入文件而不是标准输出")

    sifting = argparse.ArgumentParser(add_help=False)
    sifting.add_argument("--epsilon", type=float, default=0.0)
    sifting.add_argument("--pairs", type=int, default=100000)
    sifting.add_argument("--rounds", type=int, default=QkdConfig.DEFAULT_ROUNDS)
    sifting.add_argument("--final-pairing", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)
    simulate = sub.add_parser("simulate", parents=[common, sifting], help="抽样、置换并筛选")
    simulate.add_argument("--renes", action="store_true", help="使用原始 Renes 配对")

    curves = sub.add_parser("curves", parents=[common], help="安全性曲线")
    curves.add_argument("--grid", help="逗号分隔的 ε 值，默认 0 到 0.66 步长 0.01")
    curves.add_argument("--workers", type=int, default=1)

    thresholds = sub.add_parser("thresholds", parents=[common], help="噪声阈值与参考值")
    thresholds.add_argument("--no-message", action="store_true", help="跳过消息攻击的显式构造")

    tomography = sub.add_parser("tomography", parents=[common], help="层析重构与源检验")
    tomography.add_argument("--epsilon", type=float, default=0.0)
    tomography.add_argument("--samples", type=int, default=QkdConfig.TOMOGRAPHY_SAMPLES)
    tomography.add_argument("--epsilon-max", type=float, default=QkdConfig.ACCEPT_EPSILON_MAX)

    session = sub.add_parser("session", parents=[common, sifting], help="在本机运行双方会话")
    session.add_argument("--transport", choices=("memory", "socket"), default="memory")
    session.add_argument("--samples", type=int, default=QkdConfig.TOMOGRAPHY_SAMPLES)
    session.add_argument("--epsilon-max", type=float, default=QkdConfig.ACCEPT_EPSILON_MAX)
    session.add_argument("--transcripts", help="保存双方记录的目录")
    return parser


def main(argv=None, stdout=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    setup_logging(level_from_flags(args.verbose, args.quiet))
    try:
        cfg = RunConfig.from_args(args)
    except (ValueError, QkdError) as exc:
        parser.print_usage(sys.stderr)
        logger.error("%s", exc)
        return EXIT_USAGE
    try:
        return SingaporeQkdCli(stdout).run(cfg)
    except QkdError as exc:
        logger.error("%s", exc)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
