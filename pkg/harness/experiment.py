# harness/experiment.py
"""
پیکربندی آزمایش از فایل YAML

نمونه:
    name: fermi_chain_6
    model: {type: fermi, V: 1.0}
    lattice: {dims: [6], periodic: true}
    initial_state: checkerboard
    chi: 20
    dt: 0.005
    time: 2.0
    oracle: krylov

خطاهای اعتبارسنجی شماره خط گره مربوط را گزارش می‌کنند.
"""

import logging
import os
from dataclasses import asdict, dataclass, field
from math import comb
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import yaml

import config
from core.error_handler import ConfigError, InvalidLatticeError
from core.fock import FermiModel, IsingModel, Model
from core.lattice import LatticeSpec, checkerboard_occupation

logger = logging.getLogger(__name__)

_TOP_LEVEL_KEYS = {
    'name', 'model', 'lattice', 'initial_state', 'chi', 'dt', 'time', 'observables', 'sites',
    'oracle', 'output', 'seed', 'threads', 'integrator', 'checkpoint_every', 'verify',
}
_OVERRIDE_KEYS = {
    'dt': 'dt', 'chi': 'chi', 'time': 'time', 'oracle': 'oracle',
    'out': 'output', 'seed': 'seed', 'threads': 'threads',
}


@dataclass
class VerifyOptions:
    """تنظیمات اضافه زیرفرمان verify"""
    checks: List[str] = field(default_factory=lambda: list(config.VERIFY_CHECKS))
    inject_fault: bool = False
    analytic: List[str] = field(default_factory=lambda: ["slater", "coherent", "mixed"])
    order_dts: List[float] = field(default_factory=lambda: [0.1, 0.05, 0.025])
    order_time: float = 1.0
    encoding_samples: int = 5
    gauge_samples: int = config.VERIFY_GAUGE_SAMPLES


@dataclass
class ExperimentConfig:
    name: str
    model: str
    params: Dict[str, float]
    dims: Tuple[int, ...]
    periodic: Tuple[bool, ...]
    initial_state: str
    chi: int
    dt: float
    time: float
    observables: Optional[List[str]] = None
    sites: Optional[List[int]] = None
    oracle: str = "none"
    output: Path = config.RESULTS_DIR
    seed: int = 0
    threads: int = config.DEFAULT_THREADS
    mode: str = "modified"
    stride: int = config.SAMPLE_STRIDE
    checkpoint_every: int = config.CHECKPOINT_EVERY
    verify: VerifyOptions = field(default_factory=VerifyOptions)
    source: Optional[str] = None

    # ==================== ساخت اشیای دامنه ====================

    def lattice(self) -> LatticeSpec:
        return LatticeSpec(self.dims, self.periodic)

    def build_model(self) -> Model:
        if self.model == "fermi":
            return FermiModel(**self.params)
        return IsingModel(**self.params)

    def initial_bits(self) -> int:
        """
        checkerboard: سایت پر وقتی مجموع مختصات زوج است
        all_right: همه اسپین‌ها در +x (بیت صفر در پایه x)
        رشته ۰/۱: کاراکتر i مقدار سایت i
        """
        if self.initial_state == "checkerboard":
            return checkerboard_occupation(self.lattice())
        if self.initial_state == "all_right":
            return 0
        return sum(1 << i for i, ch in enumerate(self.initial_state) if ch == "1")

    def full_dimension(self) -> int:
        n = self.lattice().n_sites
        if self.model == "fermi":
            return comb(n, bin(self.initial_bits()).count("1"))
        return 2 ** n

    @property
    def free_fermion(self) -> bool:
        return self.model == "fermi" and float(self.params.get("V", 1.0)) == 0.0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['output'] = str(self.output)
        return data


# ==================== خواندن YAML ====================

def _line_of(node: Optional[yaml.Node], keys: Sequence[str]) -> Optional[int]:
    """شماره خط (از ۱) گره keys[-1]؛ اگر کلید نباشد، خط نزدیک‌ترین والد"""
    line = node.start_mark.line + 1 if node is not None else None
    for key in keys:
        if not isinstance(node, yaml.MappingNode):
            break
        for key_node, value_node in node.value:
            if key_node.value == key:
                node = value_node
                line = key_node.start_mark.line + 1
                break
        else:
            break
    return line


class _Validator:
    def __init__(self, source: str, root: Optional[yaml.Node]):
        self.source = source
        self.root = root

    def fail(self, message: str, *keys: str):
        line = _line_of(self.root, keys) if keys else None
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: {message}")


def _parse(text: str, source: str) -> Tuple[dict, Optional[yaml.Node]]:
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        where = f"{source}:{mark.line + 1}" if mark is not None else source
        raise ConfigError(f"{where}: invalid YAML ({getattr(e, 'problem', e)})") from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    return data, root


def _number(v: _Validator, value, kind, *keys: str):
    if isinstance(value, bool):
        v.fail(f"'{'.'.join(keys)}' must be a number, got {value!r}", *keys)
    try:
        return kind(value)
    except (TypeError, ValueError):
        v.fail(f"'{'.'.join(keys)}' must be a number, got {value!r}", *keys)


def _build(data: dict, v: _Validator, overrides: Dict[str, Any]) -> ExperimentConfig:
    unknown = set(data) - _TOP_LEVEL_KEYS
    if unknown:
        key = sorted(unknown)[0]
        v.fail(f"unknown key '{key}'", key)

    # مدل
    model_block = data.get('model')
    if isinstance(model_block, str):
        model_block = {'type': model_block}
    if not isinstance(model_block, dict) or 'type' not in model_block:
        v.fail("'model' must be a mapping with a 'type' field", 'model')
    model = model_block['type']
    if model not in config.DEFAULT_MODEL_PARAMS:
        v.fail(f"unknown model '{model}' (expected one of {sorted(config.DEFAULT_MODEL_PARAMS)})", 'model', 'type')
    params = dict(config.DEFAULT_MODEL_PARAMS[model])
    for key, value in model_block.items():
        if key == 'type':
            continue
        if key not in params:
            v.fail(f"unknown parameter '{key}' for model '{model}'", 'model', key)
        params[key] = _number(v, value, float, 'model', key)

    # شبکه
    lattice_block = data.get('lattice')
    if not isinstance(lattice_block, dict) or 'dims' not in lattice_block:
        v.fail("'lattice' must be a mapping with 'dims'", 'lattice')
    dims = lattice_block['dims']
    if isinstance(dims, int):
        dims = [dims]
    if not isinstance(dims, list):
        v.fail("'lattice.dims' must be a list of extents", 'lattice', 'dims')
    dims = tuple(_number(v, d, int, 'lattice', 'dims') for d in dims)
    periodic = lattice_block.get('periodic', True)
    periodic = tuple(periodic) if isinstance(periodic, list) else (bool(periodic),) * len(dims)
    try:
        lattice = LatticeSpec(dims, periodic)
    except InvalidLatticeError as e:
        v.fail(str(e), 'lattice')
    if any(p and d == 2 for d, p in zip(lattice.dims, lattice.periodic)):
        v.fail("periodic extent 2 would create duplicate bonds", 'lattice', 'periodic')
    if lattice.n_sites > config.MAX_BITSTRING_SITES:
        v.fail(f"{lattice.n_sites} sites exceed the bitstring limit of {config.MAX_BITSTRING_SITES}",
               'lattice', 'dims')

    # حالت اولیه
    initial = str(data.get('initial_state', 'checkerboard' if model == 'fermi' else 'all_right'))
    if initial not in config.INITIAL_STATES:
        if len(initial) != lattice.n_sites or set(initial) - {"0", "1"}:
            v.fail(f"initial_state must be one of {config.INITIAL_STATES} or a 0/1 string "
                   f"of length {lattice.n_sites}", 'initial_state')
    if model == 'fermi' and initial == 'all_right':
        v.fail("'all_right' is a spin state; fermi runs need checkerboard or a bitstring", 'initial_state')

    integrator = data.get('integrator') or {}
    if not isinstance(integrator, dict):
        v.fail("'integrator' must be a mapping", 'integrator')

    verify_block = data.get('verify') or {}
    if not isinstance(verify_block, dict):
        v.fail("'verify' must be a mapping", 'verify')
    verify = VerifyOptions()
    for key, value in verify_block.items():
        if not hasattr(verify, key):
            v.fail(f"unknown verify option '{key}'", 'verify', key)
        setattr(verify, key, value)
    bad = set(verify.checks) - set(config.VERIFY_CHECKS)
    if bad:
        v.fail(f"unknown checks {sorted(bad)}", 'verify', 'checks')
    bad = set(verify.analytic) - {"slater", "coherent", "mixed"}
    if bad:
        v.fail(f"unknown analytic constructions {sorted(bad)}", 'verify', 'analytic')

    raw = {
        'dt': data.get('dt', config.DEFAULT_DT[model]),
        'chi': data.get('chi', 16),
        'time': data.get('time', 1.0),
        'oracle': data.get('oracle', 'none'),
        'output': data.get('output', str(config.RESULTS_DIR / str(data.get('name', 'experiment')))),
        'seed': data.get('seed', 0),
        'threads': data.get('threads'),
    }
    env_threads = os.getenv("QGN_THREADS")
    if env_threads is not None:
        raw['threads'] = env_threads
    for flag, key in _OVERRIDE_KEYS.items():
        if overrides.get(flag) is not None:
            raw[key] = overrides[flag]
            logger.debug(f"🔧 override {key} = {overrides[flag]!r}")
    if raw['threads'] is None:
        raw['threads'] = config.DEFAULT_THREADS

    cfg = ExperimentConfig(
        name=str(data.get('name', 'experiment')),
        model=model,
        params=params,
        dims=lattice.dims,
        periodic=lattice.periodic,
        initial_state=initial,
        chi=_number(v, raw['chi'], int, 'chi'),
        dt=_number(v, raw['dt'], float, 'dt'),
        time=_number(v, raw['time'], float, 'time'),
        observables=data.get('observables'),
        sites=data.get('sites'),
        oracle=str(raw['oracle']),
        output=Path(raw['output']),
        seed=_number(v, raw['seed'], int, 'seed'),
        threads=_number(v, raw['threads'], int, 'threads'),
        mode=str(integrator.get('mode', 'modified')),
        stride=_number(v, integrator.get('stride', config.SAMPLE_STRIDE), int, 'integrator', 'stride'),
        checkpoint_every=_number(v, data.get('checkpoint_every', config.CHECKPOINT_EVERY), int,
                                 'checkpoint_every'),
        verify=verify,
        source=v.source,
    )
    _validate(cfg, v)
    return cfg


def _validate(cfg: ExperimentConfig, v: _Validator):
    if not cfg.dt > 0:
        v.fail(f"dt must be positive, got {cfg.dt}", 'dt')
    if cfg.time < 0:
        v.fail(f"time must be non-negative, got {cfg.time}", 'time')
    steps = round(cfg.time / cfg.dt)
    if abs(steps * cfg.dt - cfg.time) > 1e-9 * max(1.0, cfg.time):
        v.fail(f"time {cfg.time} is not a multiple of dt {cfg.dt}", 'time')
    if cfg.chi < 1:
        v.fail(f"chi must be >= 1, got {cfg.chi}", 'chi')
    if cfg.oracle not in config.ORACLE_MODES:
        v.fail(f"oracle must be one of {config.ORACLE_MODES}, got '{cfg.oracle}'", 'oracle')
    if cfg.oracle in ("dense", "krylov") and cfg.lattice().n_sites > config.MAX_SITES:
        v.fail(f"{cfg.oracle} oracle is limited to {config.MAX_SITES} sites", 'oracle')
    if cfg.oracle == "dense" and cfg.full_dimension() > config.DENSE_ORACLE_MAX_DIM:
        v.fail(f"dense oracle needs full dimension <= {config.DENSE_ORACLE_MAX_DIM}, "
               f"got {cfg.full_dimension()}", 'oracle')
    if cfg.oracle == "free-fermion" and not cfg.free_fermion:
        v.fail("free-fermion oracle needs a fermi model with V = 0", 'oracle')
    if cfg.mode not in config.INTEGRATOR_MODES:
        v.fail(f"integrator mode must be one of {config.INTEGRATOR_MODES}", 'integrator', 'mode')
    if cfg.stride < 1:
        v.fail("integrator.stride must be >= 1", 'integrator', 'stride')
    if cfg.threads < 1:
        v.fail(f"threads must be >= 1, got {cfg.threads}", 'threads')
    if cfg.checkpoint_every < 0:
        v.fail("checkpoint_every must be >= 0", 'checkpoint_every')

    allowed = ["n"] if cfg.model == "fermi" else ["sx", "sy", "sz"]
    if cfg.observables is not None:
        if not isinstance(cfg.observables, list) or set(cfg.observables) - set(allowed):
            v.fail(f"observables for '{cfg.model}' must be a subset of {allowed}", 'observables')
    if cfg.sites is not None:
        n = cfg.lattice().n_sites
        if not isinstance(cfg.sites, list) or any(not isinstance(s, int) or not 0 <= s < n for s in cfg.sites):
            v.fail(f"sites must be integers in [0, {n})", 'sites')


def experiment_from_dict(data: dict, overrides: Dict[str, Any] = None,
                         source: str = "<dict>") -> ExperimentConfig:
    """برای آزمون‌ها و پیکربندی‌های ساخته‌شده در کد"""
    return _build(dict(data), _Validator(source, None), overrides or {})


def load_experiment(path, overrides: Dict[str, Any] = None) -> ExperimentConfig:
    """
    خواندن و اعتبارسنجی فایل آزمایش

    overrides: مقادیر پرچم‌های CLI (dt, chi, time, oracle, out, seed, threads)؛ None نادیده گرفته می‌شود
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"experiment file not found: {path}")
    text = path.read_text(encoding='utf-8')
    data, root = _parse(text, str(path))
    cfg = _build(data, _Validator(str(path), root), overrides or {})
    logger.info(f"✅ Loaded experiment '{cfg.name}' from {path}")
    return cfg
