#!/usr/bin/env python3
"""文本报告的排版，所有方法只返回字符串"""


class UI:
    WIDTH = 60

    def _title(self, text):
        return ["=" * self.WIDTH, text, "=" * self.WIDTH]

    def _get_ratio_bar(self, value, maximum=1.0):
        """比例条"""
        bar_length = 20
        ratio = 0.0 if maximum <= 0 else max(0.0, min(1.0, value / maximum))
        filled_length = int(bar_length * ratio)
        bar = "█" * filled_length + "░" * (bar_length - filled_length)
        return f"[{bar}] {100 * ratio:.1f}%"

    def render_simulation(self, report):
        """模拟结果：逐轮统计、效率与误码"""
        lines = self._title("密钥提取模拟")
        lines.append(f"ε = {report['epsilon']}    N = {report['pairs']}    n = {report['rounds']}"
                     f"    末轮配对: {'是' if report['final_pairing'] else '否'}")
        accounting = report["accounting"]
        lines.append("-" * self.WIDTH)
        lines.append(f"{'轮':>3} {'输入':>9} {'比特':>8} {'迭代':>8} {'末轮配对':>8} {'留存':>8} {'未配对':>6}")
        for r in accounting["rounds"]:
            lines.append(f"{r['round']:>3} {r['input_length']:>9} {r['bits']:>8} {r['iteration_bits']:>8} "
                         f"{r['final_pairing_bits']:>8} {r['residuals_carried']:>8} {r['unpaired']:>6}")
        lines.append("-" * self.WIDTH)
        lines.append(f"总比特: {accounting['total_bits']}    双方密钥一致: {accounting.get('keys_identical')}")
        lines.append(f"效率: {accounting['efficiency']:.5f}  (无噪声理想值 {report['ideal_efficiency']:.5f})")
        lines.append("效率 " + self._get_ratio_bar(accounting["efficiency"], report["ideal_efficiency"]))
        for entry in report.get("error_rates", []):
            lines.append(f"  第{entry['round']}轮 {entry['step']:<6} 误码 {entry['rate']:.5f}"
                         f"  理论 {entry['predicted']:.5f}  ({entry['bits']} 比特)")
        for entry in report.get("residuals", []):
            lines.append(f"  第{entry['round']}轮留存 ε̂ = {entry['epsilon_hat']:.5f} ± {entry['standard_error']:.5f}"
                         f"  理论 {entry['predicted']:.5f}")
        return "\n".join(lines)

    def render_thresholds(self, reports):
        lines = self._title("噪声阈值")
        lines.append(f"{'量':<22} {'阈值':>9} {'参考':>8} {'偏差':>9}")
        for r in reports:
            reference = "" if r["reference"] is None else f"{r['reference']:.4f}"
            delta = "" if r["delta"] is None else f"{r['delta']:+.4f}"
            lines.append(f"{r['quantity']:<22} {r['threshold']:>9.5f} {reference:>8} {delta:>9}")
        return "\n".join(lines)

    def render_curves(self, header, rows):
        lines = self._title("安全性曲线")
        lines.append(" ".join(f"{name:>11}" for name in header))
        for row in rows:
            lines.append(" ".join(f"{value:>11.5f}" for value in row))
        return "\n".join(lines)

    def render_matrix(self, matrix):
        lines = []
        for row in matrix:
            lines.append("  ".join(f"{complex(z).real:+.4f}{complex(z).imag:+.4f}i" for z in row))
        return "\n".join(lines)

    def render_tomography(self, report):
        lines = self._title("层析与源检验")
        acceptance = report["acceptance"]
        lines.append(f"ε = {report['epsilon']}    M = {acceptance['samples']}")
        lines.append("重构的 ρ:")
        lines.append(self.render_matrix(report["rho"]))
        lines.append(f"半正定: {'是' if report['positive'] else '否'}")
        lines.append(f"保真度: {report['fidelity']:.5f}    迹距离: {report['trace_distance']:.5f}")
        lines.append(f"ε̂ = {acceptance['epsilon_hat']:.5f}{'（已截断）' if acceptance['clamped'] else ''}")
        lines.append(f"TV 距离 {acceptance['distance']:.5f}，阈值 {acceptance['threshold']:.5f}")
        lines.append(f"结论: {acceptance['verdict']}")
        return "\n".join(lines)

    def render_session(self, report):
        lines = self._title("会话")
        for side in ("alice", "bob"):
            result = report[side]
            status = f"中止（{result['abort_reason']}）" if result["aborted"] else "完成"
            lines.append(f"{side:<6} {status}  {result['key_bits']} 比特  {result['messages']} 条消息")
        lines.append("-" * self.WIDTH)
        lines.append(f"密钥一致: {'是' if report['keys_identical'] else '否'}")
        lines.append(f"记录一致: {'是' if report['transcripts_identical'] else '否'}")
        return "\n".join(lines)
