"""安全性分析：互信息曲线、ε-η 对偶、CK 阈值、Holevo 界与误码递推

所有对数以2为底，0·log0 取 0。阈值统一由 solve_threshold 求根。
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from ..config import QkdConfig
from ..enums import PomLabel, SiftingStep
from ..errors import NoiseRangeError, ReferenceDataError, ThresholdError
from ..quantum import DensityOperator, binary_entropy, von_neumann_entropy
from ..source import conditioned_ancillas

logger = logging.getLogger(__name__)


def _xlog2x(x):
    return 0.0 if x <= 0.0 else float(x * np.log2(x))


def _check(epsilon, upper=1.0, name="ε"):
    eps = float(epsilon)
    if not (0.0 <= eps <= upper + QkdConfig.STRUCTURAL_TOL):
        raise NoiseRangeError(f"{name}={epsilon!r} 不在 [0, {upper:.4g}]")
    return min(eps, upper)


@dataclass(frozen=True)
class SecurityCurve:
    """一条 ε → 比特 的曲线"""
    name: str
    grid: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        eps = [e for e, _ in self.grid]
        if any(b <= a for a, b in zip(eps, eps[1:])):
            raise NoiseRangeError(f"{self.name}: ε 网格必须严格递增")
        if eps and (eps[0] < 0.0 or eps[-1] > QkdConfig.SEPARABLE_EPSILON + QkdConfig.STRUCTURAL_TOL):
            raise NoiseRangeError(f"{self.name}: ε 网格超出 [0, 2/3]")

    @property
    def epsilons(self):
        return np.array([e for e, _ in self.grid])

    @property
    def values(self):
        return np.array([v for _, v in self.grid])

    def to_dict(self):
        return {"name": self.name, "grid": [list(point) for point in self.grid]}


@dataclass(frozen=True)
class ThresholdReport:
    """根求解得到的阈值以及求解的元数据"""
    quantity: str
    threshold: float
    bracket: Tuple[float, float]
    tolerance: float
    iterations: int = 0
    reference: Optional[float] = None
    source: Optional[str] = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def delta(self):
        if self.reference is None:
            return None
        return self.threshold - self.reference

    def within_reference(self, tolerance):
        return self.reference is None or abs(self.delta) <= tolerance

    def to_dict(self):
        return {
            "quantity": self.quantity,
            "threshold": self.threshold,
            "bracket": list(self.bracket),
            "tolerance": self.tolerance,
            "iterations": self.iterations,
            "reference": self.reference,
            "source": self.source,
            "delta": self.delta,
            **self.extra,
        }


def find_bracket(f, lo, hi, steps=64):
    """在 [lo, hi] 上扫描，返回第一个变号的子区间"""
    points = np.linspace(lo, hi, steps + 1)
    values = [f(x) for x in points]
    for a, b, fa, fb in zip(points, points[1:], values, values[1:]):
        if fa == 0.0:
            return float(a), float(a + (b - a) * 1e-3)
        if fa * fb < 0.0:
            return float(a), float(b)
    raise ThresholdError(f"[{lo}, {hi}] 内没有变号")


def solve_threshold(f, bracket, quantity="threshold", reference=None, source=None, tol=None, max_iter=None):
    """Brent 法求 f 的根，|Δε| < tol

    Raises:
        ThresholdError: 区间两端同号，或迭代未收敛
    """
    tol = tol if tol is not None else QkdConfig.SOLVER_TOL
    max_iter = max_iter if max_iter is not None else QkdConfig.SOLVER_MAX_ITER
    lo, hi = float(bracket[0]), float(bracket[1])
    f_lo, f_hi = f(lo), f(hi)
    if f_lo * f_hi > 0.0:
        raise ThresholdError(f"{quantity}: 区间 [{lo}, {hi}] 两端同号 ({f_lo:.3e}, {f_hi:.3e})")
    try:
        root, result = brentq(f, lo, hi, xtol=tol, maxiter=max_iter, full_output=True)
    except RuntimeError as exc:
        raise ThresholdError(f"{quantity}: {exc}") from exc
    if not result.converged:
        raise ThresholdError(f"{quantity}: {result.flag}")
    logger.debug("%s: %d 次迭代，根 %.8f", quantity, result.iterations, root)
    report = ThresholdReport(quantity, float(root), (lo, hi), tol, int(result.iterations), reference, source)
    if reference is not None:
        logger.info("%s = %.5f（参考值 %.4f，偏差 %+.4f）", quantity, root, reference, report.delta)
    else:
        logger.info("%s = %.5f", quantity, root)
    return report


# ---- 互信息 ----

def mutual_info_tetra(epsilon):
    """I_AB = (1-ε/4)log2((4-ε)/3) + (ε/4)log2 ε"""
    eps = _check(epsilon)
    return (1.0 - eps / 4.0) * float(np.log2((4.0 - eps) / 3.0)) + _xlog2x(eps) / 4.0


def mutual_info_six(epsilon):
    """六态协议：(ε/6)log2 ε + ((2-ε)/6)log2(2-ε)"""
    eps = _check(epsilon)
    return (_xlog2x(eps) + _xlog2x(2.0 - eps)) / 6.0


def mutual_info(epsilon, pom_label):
    if PomLabel(pom_label) is PomLabel.TETRA:
        return mutual_info_tetra(epsilon)
    return mutual_info_six(epsilon)


def separability_bound():
    return QkdConfig.SEPARABLE_EPSILON


def eve_noise(epsilon):
    """η = (√(1-3ε/4) - √(3ε/4))²，Eve 一侧的等效噪声"""
    eps = _check(epsilon, QkdConfig.SEPARABLE_EPSILON)
    return float((np.sqrt(1.0 - 0.75 * eps) - np.sqrt(0.75 * eps)) ** 2)


def noise_from_eve_noise(eta):
    """圆周关系 (1-3ε/2)² + (1-η)² = 1 在 ε ≤ 2/3 一支上的反解"""
    eta = _check(eta, name="η")
    return float((2.0 / 3.0) * (1.0 - np.sqrt(max(0.0, 1.0 - (1.0 - eta) ** 2))))


def mutual_info_eve_tetra(epsilon):
    """混合态攻击下 Alice 与 Eve 的互信息"""
    return mutual_info_tetra(eve_noise(epsilon))


def ck_yield(epsilon):
    """ΔI = I_AB(ε) - I_AE(ε)"""
    return mutual_info_tetra(epsilon) - mutual_info_eve_tetra(epsilon)


def ck_threshold(bracket=None):
    """ΔI 的根，即 η(ε) = ε 的不动点 1/(5/2+√3)"""
    return solve_threshold(ck_yield, bracket or QkdConfig.CK_BRACKET, quantity="ck",
                           reference=1.0 / (2.5 + np.sqrt(3.0)), source="fixed-point")


# ---- Holevo 界 ----

def holevo_chi(epsilon):
    """χ = S(tr_AB|S><S|) - h2(ε/2)

    条件辅助态对两种 POM 都是酉等价的秩2态，谱为 {1-ε/2, ε/2}。
    """
    eps = _check(epsilon)
    spectrum = [1.0 - 0.75 * eps] + [0.25 * eps] * 3
    return max(0.0, -sum(_xlog2x(x) for x in spectrum) - binary_entropy(eps / 2.0))


def holevo_chi_explicit(epsilon, pom_label=PomLabel.TETRA):
    """由各结果的条件辅助态直接计算 χ"""
    ensemble = conditioned_ancillas(epsilon, pom_label)
    mixture = sum(p * rho.matrix for p, rho in ensemble)
    average = sum(p * von_neumann_entropy(rho) for p, rho in ensemble)
    return von_neumann_entropy(DensityOperator(mixture)) - average


def holevo_message_attack_oneway(epsilon, pom_label=PomLabel.TETRA):
    """单向通信下 Eve 对 Alice 结果的 Holevo 量"""
    PomLabel(pom_label)
    return holevo_chi(epsilon)


HOLEVO_REFERENCE = {PomLabel.TETRA: 0.1265, PomLabel.SIX: 0.1086}


def holevo_oneway_threshold(pom_label=PomLabel.TETRA, bracket=None):
    """I_AB(ε) = χ(ε) 的根"""
    label = PomLabel(pom_label)

    def gap(eps):
        return mutual_info(eps, label) - holevo_chi(eps)

    return solve_threshold(gap, bracket or QkdConfig.HOLEVO_BRACKET, quantity=f"holevo_{label.value}",
                           reference=HOLEVO_REFERENCE[label], source="common-holevo-bound")


# ---- 误码 ----

def bit_error(epsilon, rounds):
    """第 n 轮迭代比特的误码 [1 + ((4-ε)/(3ε))^(2^(n-1))]⁻¹"""
    eps = _check(epsilon)
    n = int(rounds)
    if n < 1:
        raise ValueError(f"轮数必须至少为1，得到 {rounds}")
    if eps == 0.0:
        return 0.0
    # 指数很大时在对数空间计算
    exponent = 2.0 ** (n - 1) * np.log((4.0 - eps) / (3.0 * eps))
    return float(expit(-exponent))


def secondary_noise(epsilon):
    """留存序列的噪声 ε² / [1 + (1-ε)²/3]"""
    eps = float(epsilon)
    if not 0.0 <= eps < 1.0:
        raise NoiseRangeError(f"ε={epsilon!r} 不在 [0, 1)")
    return eps * eps / (1.0 + (1.0 - eps) ** 2 / 3.0)


def predicted_error_rate(epsilon, round_index, step):
    """各步骤比特的理论误码"""
    step = SiftingStep(step)
    if step is SiftingStep.ITERATION:
        return bit_error(epsilon, round_index)
    if step is SiftingStep.FINAL_PAIRING:
        return bit_error(epsilon, round_index + 1)
    if step is SiftingStep.RENES:
        return bit_error(epsilon, 1)
    raise ValueError(f"{step.value} 不产生比特")


# ---- 参考数据 ----

_TABLE_CACHE = {}


def table_one_reference(path=None):
    """噪声阈值参考表

    Returns:
        {(attack, row, column): value}，attack 为 rawData/collective/message，
        row 为 L1/1/2/3/inf，column 为 it/FP
    """
    path = path or QkdConfig.TABLE_ONE_FILE
    if path in _TABLE_CACHE:
        return dict(_TABLE_CACHE[path])
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        table = {}
        for entry in data["rows"]:
            for attack in ("rawData", "collective", "message"):
                for column, value in entry[attack].items():
                    table[(attack, entry["row"], column)] = float(value)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        logger.error("参考表读取失败: %s", exc)
        raise ReferenceDataError(f"无法读取参考表 {path}: {exc}") from exc
    _TABLE_CACHE[path] = table
    return dict(table)


# ---- 曲线 ----

CURVE_COLUMNS = ("epsilon", "i_ab_tetra", "i_ab_six", "i_ae_tetra", "holevo_chi", "ck_yield")


def default_grid():
    """0 到 0.66，步长 0.01"""
    return np.round(np.arange(QkdConfig.EPSILON_GRID_POINTS) * 0.01, 2)


def curve_rows(epsilon):
    eps = float(epsilon)
    return (eps, mutual_info_tetra(eps), mutual_info_six(eps), mutual_info_eve_tetra(eps),
            holevo_chi(eps), ck_yield(eps))


def security_curves(grid=None, workers=None):
    """在网格上计算全部曲线，行顺序与网格一致"""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(curve_rows, grid))
    else:
        rows = [curve_rows(eps) for eps in grid]
    curves = []
    for index, name in enumerate(CURVE_COLUMNS[1:], start=1):
        curves.append(SecurityCurve(name, tuple((row[0], row[index]) for row in rows)))
    return curves


def curves_table(curves):
    """把若干曲线合并成按 ε 排列的行"""
    if not curves:
        return []
    epsilons = curves[0].epsilons
    columns = [c.values for c in curves]
    return [[float(eps)] + [float(col[i]) for col in columns] for i, eps in enumerate(epsilons)]
