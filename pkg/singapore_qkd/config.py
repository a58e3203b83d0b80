"""协议与数值配置文件"""
import os


class QkdConfig:
    """全局默认参数"""
    # 数值容差
    STRUCTURAL_TOL = 1e-12  # 厄米性、迹、归一化
    POSITIVITY_TOL = 1e-10  # 特征值允许的负偏差
    ENTROPY_TOL = 1e-9  # 熵恒等式
    DISTRIBUTION_TOL = 1e-9  # 概率和
    MAX_QUBITS = 8  # 稠密表示的上限

    # 阈值求解
    SOLVER_TOL = 1e-7
    SOLVER_MAX_ITER = 200
    CK_BRACKET = (0.1, 0.4)
    HOLEVO_BRACKET = (0.01, 0.6)
    MESSAGE_ATTACK_BRACKET = (0.02, 0.6)
    EPSILON_GRID_POINTS = 67  # 0 到 2/3，步长 0.01

    # 可分离界
    SEPARABLE_EPSILON = 2.0 / 3.0

    # 筛选
    DEFAULT_ROUNDS = 3
    DEFAULT_FINAL_PAIRING = False
    BIT_CONVENTION = "alice-letter-value"  # 比特取Alice字母所在组的值

    # 源检验
    ACCEPT_EPSILON_MAX = 0.3
    ACCEPT_MULTIPLIER = 4.0  # c，TV距离阈值 c*sqrt(16/M)
    ACCEPT_MIN_SAMPLES = 1000
    TOMOGRAPHY_SAMPLES = 1000

    # 随机数流
    DEFAULT_SEED = 7
    SEED_ENV_VAR = "SINGAPORE_QKD_SEED"
    STREAM_SOURCE = 0
    STREAM_TWIRL = 1
    STREAM_TOMOGRAPHY = 2
    STREAM_ALICE = 3
    STREAM_BOB = 4
    STREAM_PARTITION_BASE = 100

    # 网络
    DEFAULT_HOST = "127.0.0.1"
    DEFAULT_PORT = 7841
    SOCKET_TIMEOUT = 30.0  # 秒
    QUEUE_TIMEOUT = 30.0  # 秒

    # 输出格式版本
    REPORT_SCHEMA = "singapore-qkd/1"
    CURVES_CSV_SCHEMA = "curves/1"
    THRESHOLDS_CSV_SCHEMA = "thresholds/1"
    SIMULATE_CSV_SCHEMA = "simulate/1"

    # 参考数据
    DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")
    TABLE_ONE_FILE = os.path.join(DATA_DIR, "table_one.json")

    # 与参考阈值比较时的容差
    REFERENCE_TOLERANCE = {
        "ck": 1e-4,
        "holevo_tetra": 5e-4,
        "holevo_six": 5e-4,
        "message_iteration": 0.01,
        "message_final_pairing": 0.01,
        "message_renes_l1": 0.01,
    }

    @staticmethod
    def default_seed():
        """读取环境变量中的默认种子"""
        value = os.environ.get(QkdConfig.SEED_ENV_VAR)
        if value is None or not value.strip():
            return QkdConfig.DEFAULT_SEED
        return int(value)
