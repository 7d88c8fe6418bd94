# harness/verifier.py
"""
مجموعه بررسی‌های ناوردا برای زیرفرمان verify

هر بررسی یک CheckResult برمی‌گرداند؛ استثنا داخل یک بررسی فقط همان بررسی را رد می‌کند.
کد خروج 0 یعنی همه بررسی‌ها قبول شده‌اند.
"""

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.stats import unitary_group

import config
from construction.analytic import (chain_graph, coherent_qgn, mixed_state_qgn, random_orbitals,
                                   slater_correlation, slater_qgn)
from construction.images import ImageRequest, images_for_strings
from construction.quench import QuenchImages
from core.error_handler import ContractViolation, safe_execute
from core.fock import SPIN, FullState, build_basis, pauli_op
from core.gauge_network import (QGN, OperatorString, expectation_string, gauge_transform,
                                local_expectation, op_key, qgn_from_truncation,
                                truncation_maps_from_images)
from dynamics.evolution import ObservableSchedule, TimeSeries, evolve
from dynamics.integrator import IntegratorConfig
from harness.experiment import ExperimentConfig
from harness.runner import build_experiment, compare, oracle_observables, schedule_for
from utils.logger import JsonLogger

logger = logging.getLogger(__name__)

ENCODING_SITES = 8


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ""
    skipped: bool = False


@dataclass
class VerifyReport:
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    @property
    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {'passed': self.passed, 'checks': [asdict(c) for c in self.checks]}


def _failed(error: Exception, info) -> CheckResult:
    return CheckResult(name="", passed=False, detail=f"{type(error).__name__}: {error}")


# ==================== ابزارها ====================

def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """یکانی هار؛ برای بعد ۱ یک فاز تصادفی"""
    if dim == 1:
        return np.exp(2j * np.pi * rng.random()).reshape(1, 1)
    return unitary_group.rvs(dim, random_state=rng)


def inject_fault(qgn: QGN, rng: np.random.Generator, noise: float = None) -> QGN:
    """نویز روی اولین اتصال (برای آزمون شکست بررسی Vψ)"""
    noise = noise if noise is not None else config.FAULT_NOISE
    corrupted = qgn.copy()
    edge = sorted(corrupted.connections)[0]
    v = corrupted.connections[edge]
    corrupted.connections[edge] = v + noise * (rng.normal(size=v.shape) + 1j * rng.normal(size=v.shape))
    logger.warning(f"⚠️ Injected {noise:.0e} noise into connection {edge}")
    return corrupted


def sample_strings(qgn: QGN) -> List[OperatorString]:
    """همه عملگرهای تک‌وصله‌ای و یک رشته دووصله‌ای روی هر یال"""
    strings = [OperatorString(((p, name),)) for p in range(qgn.n_patches) for name in qgn.operators[p]]
    for i, j in sorted(qgn.connections):
        if qgn.operators[i] and qgn.operators[j]:
            strings.append(OperatorString(((i, sorted(qgn.operators[i])[0]), (j, sorted(qgn.operators[j])[-1]))))
    return strings


class _Context:
    """QGN و سری زمانی مشترک بین بررسی‌ها (ساخت تنبل)"""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self._built = None
        self._series: Optional[TimeSeries] = None

    @property
    def built(self):
        if self._built is None:
            graph, qgn, images = build_experiment(self.cfg)
            if self.cfg.verify.inject_fault:
                qgn = inject_fault(qgn, self.rng)
            self._built = (graph, qgn, images)
        return self._built

    @property
    def qgn(self) -> QGN:
        return self.built[1]

    @property
    def images(self) -> QuenchImages:
        return self.built[2]

    @property
    def series(self) -> TimeSeries:
        if self._series is None:
            integrator = IntegratorConfig(dt=self.cfg.dt, mode=self.cfg.mode, n_jobs=self.cfg.threads)
            self._series = evolve(self.qgn, self.cfg.time, integrator, schedule_for(self.cfg))
        return self._series


# ==================== بررسی‌ها ====================

@safe_execute(default_return=_failed)
def check_vpsi_residual(ctx: _Context) -> CheckResult:
    tol = config.VERIFY_VPSI_TOLERANCE
    worst = float(np.max(ctx.series.column('vpsi_residual')))
    return CheckResult("vpsi_residual", worst <= tol, worst, tol,
                       f"max Vψ residual {worst:.3e} over {len(ctx.series)} samples")


@safe_execute(default_return=_failed)
def check_gauge_invariance(ctx: _Context) -> CheckResult:
    tol = config.VERIFY_GAUGE_TOLERANCE
    qgn = ctx.qgn
    strings = sample_strings(qgn)
    reference = np.array([expectation_string(qgn, s) for s in strings])
    worst = 0.0
    for _ in range(ctx.cfg.verify.gauge_samples):
        gauges = [random_unitary(chi, ctx.rng) for chi in qgn.chis]
        moved = gauge_transform(qgn, gauges)
        values = np.array([expectation_string(moved, s) for s in strings])
        worst = max(worst, float(np.abs(values - reference).max()))
    return CheckResult("gauge_invariance", worst <= tol, worst, tol,
                       f"{len(strings)} strings under {ctx.cfg.verify.gauge_samples} random gauges")


def random_string(rng: np.random.Generator, n_sites: int, max_len: int = 4):
    """رشته پائولی تصادفی؛ درایه‌های متوالی روی سایت‌های متفاوت"""
    length = int(rng.integers(1, max_len + 1))
    sites = [int(rng.integers(n_sites))]
    while len(sites) < length:
        site = int(rng.integers(n_sites))
        if site != sites[-1]:
            sites.append(site)
    axes = [str(rng.choice(["x", "y", "z"])) for _ in sites]
    return list(zip(sites, axes))


def exact_encoding_trial(rng: np.random.Generator, n_sites: int = ENCODING_SITES) -> Dict[str, float]:
    """
    حالت تصادفی، یک رشته تصادفی و تا سه نقطه میانی

    Returns:
        بیشینه خطا و بیشینه تجاوز از χ_I ≤ 1 + 2p_I
    """
    graph = chain_graph(n_sites)
    basis = build_basis(SPIN, n_sites)
    raw = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    psi = FullState.from_vector(basis, raw)
    paulis = {(s, a): pauli_op(basis, s, a) for s in range(n_sites) for a in "xyz"}
    requested = [{op_key(f"s{a}", s): paulis[(s, a)] for a in "xyz"} for (s,) in graph.patches]

    factors = random_string(rng, n_sites)
    exact = psi.amplitudes
    for site, axis in reversed(factors):
        exact = paulis[(site, axis)].apply(exact)
    exact = complex(np.vdot(psi.amplitudes, exact))

    half_steps = [k / 2 for k in range(2, 2 * len(factors) + 1)]
    midpoints = rng.choice(half_steps, size=min(3, len(half_steps)), replace=False)
    string = OperatorString(tuple((s, op_key(f"s{a}", s)) for s, a in factors))

    error, excess = 0.0, 0
    for m0 in midpoints:
        request = ImageRequest([[(s, paulis[(s, a)]) for s, a in factors]], [float(m0)])
        Q = truncation_maps_from_images(images_for_strings(psi, request, graph))
        qgn = qgn_from_truncation(psi, Q, graph, requested, kind=SPIN)
        error = max(error, abs(expectation_string(qgn, string) - exact))
        bounds = [1 + 2 * p for p in request.visit_counts(graph)]
        excess = max(excess, max(c - b for c, b in zip(qgn.chis, bounds)))
    return {'error': error, 'chi_excess': excess}


@safe_execute(default_return=_failed)
def check_exact_encoding(ctx: _Context) -> CheckResult:
    tol = config.VERIFY_ENCODING_TOLERANCE
    trials = [exact_encoding_trial(ctx.rng) for _ in range(ctx.cfg.verify.encoding_samples)]
    worst = max(t['error'] for t in trials)
    excess = max(t['chi_excess'] for t in trials)
    return CheckResult("exact_encoding", worst <= tol and excess <= 0, worst, tol,
                       f"{len(trials)} random {ENCODING_SITES}-qubit states, chi bound excess {excess}")


@safe_execute(default_return=_failed)
def check_full_chi_equivalence(ctx: _Context) -> CheckResult:
    tol = config.VERIFY_FULL_CHI_TOLERANCE
    if ctx.cfg.oracle == "none":
        raise ContractViolation("full-chi equivalence needs an oracle")
    if not ctx.images.saturated:
        return CheckResult("full_chi_equivalence", True, None, tol,
                           f"images not saturated at chi={ctx.cfg.chi}; skipped", skipped=True)
    graph = ctx.built[0]
    frame = ctx.series.to_frame()
    columns = [c for c in frame.columns if c.rsplit("_", 1)[0] in ("n", "sx", "sy", "sz")]
    oracle = oracle_observables(ctx.cfg, graph, ctx.series.times, columns)
    _, max_error, _ = compare(ctx.series, oracle)
    worst = max(max_error.values(), default=0.0)
    return CheckResult("full_chi_equivalence", worst <= tol, worst, tol,
                       f"{len(columns)} observables against the {ctx.cfg.oracle} oracle")


@safe_execute(default_return=_failed)
def check_conservation(ctx: _Context) -> CheckResult:
    frame = ctx.series.to_frame()
    n_sites = ctx.qgn.graph.n_sites
    energy = frame['energy'].to_numpy()
    drift = float(np.max(np.abs(energy - energy[0])))
    if ctx.cfg.free_fermion:
        number = frame['number'].to_numpy()
        drift = max(drift, float(np.max(np.abs(number - number[0]))))
        tol = config.VERIFY_FREE_DRIFT
        return CheckResult("conservation", drift <= tol, drift, tol, "free fermions: energy and number")
    tol = config.VERIFY_ENERGY_PER_SITE
    per_site = drift / n_sites
    return CheckResult("conservation", per_site <= tol, per_site, tol, "energy drift per site")


def energy_drift(qgn: QGN, dt: float, T: float, mode: str = "modified", n_jobs: int = 1) -> float:
    series = evolve(qgn, T, IntegratorConfig(dt=dt, mode=mode, n_jobs=n_jobs),
                    ObservableSchedule(sites=[], residuals=False))
    energy = series.column('energy')
    return float(np.max(np.abs(energy - energy[0])))


@safe_execute(default_return=_failed)
def check_integrator_order(ctx: _Context) -> CheckResult:
    opts = ctx.cfg.verify
    dts = sorted(opts.order_dts, reverse=True)
    if len(dts) < 2:
        raise ContractViolation("integrator order check needs at least two time steps")
    drifts = [energy_drift(ctx.qgn, dt, opts.order_time, ctx.cfg.mode, ctx.cfg.threads) for dt in dts]
    used = [(dt, d) for dt, d in zip(dts, drifts) if d >= 1e-12]
    low, high = config.VERIFY_MIN_ORDER_RATIO, config.VERIFY_MAX_ORDER_RATIO
    detail = f"energy drifts {['%.2e' % d for d in drifts]} for dt {dts}"
    if len(used) < 2:
        return CheckResult("integrator_order", True, None, low,
                           f"{detail}; drift below 1e-12, nothing to fit", skipped=True)

    # شیب log(drift) بر حسب log(dt)؛ نسبت هر نصف شدن 2^slope
    slope = float(np.polyfit(np.log([dt for dt, _ in used]), np.log([d for _, d in used]), 1)[0])
    ratio = float(2.0 ** slope)
    return CheckResult("integrator_order", low <= ratio <= high, ratio, high,
                       f"{detail}; fitted order {slope:.2f}, ratio per halving {ratio:.2f} "
                       f"(allowed [{low:g}, {high:g}])")


def _analytic_slater(rng: np.random.Generator) -> float:
    n, n_f = 8, 3
    phi = random_orbitals(n, n_f, rng)
    qgn = slater_qgn(phi)
    corr = slater_correlation(phi)
    worst = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                value = local_expectation(qgn, i, op_key("n", i))
            else:
                value = expectation_string(qgn, OperatorString(((i, op_key("cdag", i)), (j, op_key("c", j)))))
            worst = max(worst, abs(value - corr[i, j]))
    return worst


def _analytic_coherent(rng: np.random.Generator) -> float:
    n = 6
    theta = rng.normal(size=n) + 1j * rng.normal(size=n)
    qgn = coherent_qgn(theta)
    worst = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                value = expectation_string(qgn, OperatorString(((i, op_key("bdag", i)), (j, op_key("b", j)))))
                worst = max(worst, abs(value - np.conj(theta[i]) * theta[j]))
    for _ in range(10):
        a, b, c, d = (int(s) for s in rng.choice(n, size=4, replace=False))
        s = OperatorString(((a, op_key("bdag", a)), (b, op_key("bdag", b)),
                            (c, op_key("b", c)), (d, op_key("b", d))))
        exact = np.conj(theta[a] * theta[b]) * theta[c] * theta[d]
        worst = max(worst, abs(expectation_string(qgn, s) - exact))
    return worst


def _analytic_mixed(rng: np.random.Generator) -> float:
    n = 4
    worst = 0.0
    for kronecker in (False, True):
        qgn = mixed_state_qgn(n, kronecker=kronecker)
        for i in range(n - 1):
            zz = expectation_string(qgn, OperatorString(((i, op_key("sz", i)), (i + 1, op_key("sz", i + 1)))))
            xx = expectation_string(qgn, OperatorString(((i, op_key("sx", i)), (i + 1, op_key("sx", i + 1)))))
            worst = max(worst, abs(zz - 1.0), abs(xx))
    return worst


ANALYTIC_CASES: Dict[str, Callable[[np.random.Generator], float]] = {
    "slater": _analytic_slater,
    "coherent": _analytic_coherent,
    "mixed": _analytic_mixed,
}


@safe_execute(default_return=_failed)
def check_analytic(ctx: _Context) -> CheckResult:
    tol = config.VERIFY_ANALYTIC_TOLERANCE
    errors = {name: ANALYTIC_CASES[name](ctx.rng) for name in ctx.cfg.verify.analytic}
    worst = max(errors.values(), default=0.0)
    return CheckResult("analytic", worst <= tol, worst, tol,
                       ", ".join(f"{k}={v:.1e}" for k, v in errors.items()))


CHECKS: Dict[str, Callable[[_Context], CheckResult]] = {
    "vpsi_residual": check_vpsi_residual,
    "gauge_invariance": check_gauge_invariance,
    "exact_encoding": check_exact_encoding,
    "full_chi_equivalence": check_full_chi_equivalence,
    "conservation": check_conservation,
    "integrator_order": check_integrator_order,
    "analytic": check_analytic,
}


def verify(cfg: ExperimentConfig) -> VerifyReport:
    """اجرای بررسی‌های انتخاب‌شده به ترتیب config.VERIFY_CHECKS"""
    if cfg.oracle == "none":
        raise ContractViolation("verify needs an oracle mode other than 'none'")
    ctx = _Context(cfg)
    report = VerifyReport()
    json_log = JsonLogger(logger)
    for name in config.VERIFY_CHECKS:
        if name not in cfg.verify.checks:
            continue
        logger.info(f"🔄 Check: {name}")
        result = CHECKS[name](ctx)
        if not result.name:
            result = replace(result, name=name)
        report.checks.append(result)
        json_log.log_check(asdict(result))
        marker = "✅" if result.passed else "❌"
        logger.info(f"{marker} {name}: {result.detail}")
    logger.info(f"{'✅' if report.passed else '❌'} verify '{cfg.name}': "
                f"{len(report.checks) - len(report.failures)}/{len(report.checks)} checks passed")
    return report
