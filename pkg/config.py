# config.py
import os
from pathlib import Path

from dotenv import load_dotenv

# متغیرهای محیطی از فایل .env (اگر وجود داشته باشد)
load_dotenv()

# ==================== PROJECT ====================
PROJECT_NAME = "qgn-oracle"
PROJECT_TITLE = "🔮 QGN Oracle"
VERSION = "1.0.0"

# ==================== PATHS ====================
BASE_DIR = Path(__file__).parent
LOGS_DIR = BASE_DIR / "logs"
RESULTS_DIR = BASE_DIR / "results"
CHECKPOINT_DIR = BASE_DIR / "checkpoints"
CONFIGS_DIR = BASE_DIR / "configs"

for dir_path in [LOGS_DIR, RESULTS_DIR, CHECKPOINT_DIR]:
    dir_path.mkdir(exist_ok=True)

# ==================== NUMERICS ====================
RANK_TOLERANCE = 1e-10            # نسبت به بزرگ‌ترین مقدار تکین
ISOMETRY_TOLERANCE = 1e-10        # Q Q† = 1 و Q†QΨ = Ψ
SINGULAR_VALUE_SLACK = 1e-9       # مقادیر تکین V_IJ ≤ 1 + slack
HERMITIAN_TOLERANCE = 1e-8        # بالاتر از این، مولد RK خطا می‌دهد
VPSI_IDENTITY_TOLERANCE = 1e-8    # شرط استفاده از اتحاد همبستگی متصل
UNITARY_TOLERANCE = 1e-10
DENSITY_HERMITIAN_TOLERANCE = 1e-10
DENSITY_MATRIX_MAX_SITES = 8

# ==================== FOCK SPACE ====================
MAX_SITES = 28                    # محافظ حافظه برای پایه کامل
MAX_BITSTRING_SITES = 64          # حالت‌های پایه uint64 (ساخت کوئنچ بدون پایه کامل)
DENSE_CUTOFF = 512                # زیر این بعد، قطری‌سازی کامل
DENSE_ORACLE_MAX_DIM = 2 ** 16
KRYLOV_DIM = 30
KRYLOV_TOLERANCE = 1e-12
KRYLOV_MAX_HALVINGS = 40

# ==================== DYNAMICS ====================
DEFAULT_DT = {
    "fermi": 0.05,
    "ising": 0.02,
}
RK4_TABLEAU = {
    "a": [
        [0.0, 0.0, 0.0, 0.0],
        [0.5, 0.0, 0.0, 0.0],
        [0.0, 0.5, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ],
    "b": [1 / 6, 1 / 3, 1 / 3, 1 / 6],
    "c": [0.0, 0.5, 0.5, 1.0],
}
INTEGRATOR_MODES = ["modified", "plain"]
SAMPLE_STRIDE = 1

# ==================== MODELS ====================
DEFAULT_MODEL_PARAMS = {
    "fermi": {"V": 1.0, "hopping": 1.0},
    "ising": {"h": 3.0},
}
ORACLE_MODES = ["dense", "krylov", "free-fermion", "none"]
INITIAL_STATES = ["checkerboard", "all_right"]
PATH_STYLES = ["snake", "comb", "diagonal"]

# ==================== VERIFY ====================
VERIFY_CHECKS = [
    "vpsi_residual",
    "gauge_invariance",
    "exact_encoding",
    "full_chi_equivalence",
    "conservation",
    "integrator_order",
    "analytic",
]
VERIFY_GAUGE_SAMPLES = 20
VERIFY_GAUGE_TOLERANCE = 1e-12
VERIFY_ENCODING_TOLERANCE = 1e-10
VERIFY_FULL_CHI_TOLERANCE = 1e-6
VERIFY_ENERGY_PER_SITE = 1e-3
VERIFY_FREE_DRIFT = 1e-9          # V = 0: انرژی و تعداد ذرات
VERIFY_VPSI_TOLERANCE = 1e-12
VERIFY_ANALYTIC_TOLERANCE = 1e-12
VERIFY_MIN_ORDER_RATIO = 4.0     # نسبت رانش انرژی در هر نصف شدن dt؛ مرتبه dt^3 یعنی 8
VERIFY_MAX_ORDER_RATIO = 16.0
FAULT_NOISE = 1e-3

# ==================== OUTPUT ====================
CSV_FLOAT_FORMAT = "%.17g"
TIMESERIES_FILE = "timeseries.csv"
COMPARISON_FILE = "comparison.csv"
REPORT_FILE = "report.json"

# ==================== CHECKPOINT ====================
CHECKPOINT_EVERY = 0              # صفر یعنی خاموش
KEEP_CHECKPOINTS = 5

# ==================== THREADS ====================
DEFAULT_THREADS = 1
THREADS = int(os.getenv("QGN_THREADS", DEFAULT_THREADS))

# ==================== LOGGING ====================
LOG_LEVEL = os.getenv("QGN_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
