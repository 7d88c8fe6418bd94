# core/serialization.py
"""
ذخیره و بازیابی QGN و MPS

قالب: فایل npz با آرایه‌های مختلط و یک رشته JSON به نام 'meta'.
- QGN: psi_{I} ، V_{I}_{J} ، op_{I}_{k} (نام عملگرها در meta)
- MPS: t_{i} با شکل (χ_i, d_i, χ_{i+1})
"""

import json
import logging
import zipfile
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from core.error_handler import ContainerError
from core.gauge_network import QGN
from core.lattice import PatchGraph

logger = logging.getLogger(__name__)

FORMAT_TAG = "qgn-npz-1"

PathLike = Union[str, Path]


def _write(path: PathLike, meta: dict, arrays: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as f:
        np.savez_compressed(f, meta=np.array(json.dumps(meta)), **arrays)
    logger.info(f"📦 Saved {meta['type']} container: {path}")
    return path


def _read(path: PathLike, expected_type: str):
    path = Path(path)
    if not path.exists():
        raise ContainerError(f"container not found: {path}")
    try:
        data = np.load(path, allow_pickle=False)
        meta = json.loads(str(data['meta']))
    except (OSError, ValueError, KeyError, zipfile.BadZipFile, json.JSONDecodeError) as e:
        raise ContainerError(f"cannot read {path}: {e}") from e

    if meta.get('format') != FORMAT_TAG:
        raise ContainerError(f"{path}: unknown format tag {meta.get('format')!r}")
    if meta.get('type') != expected_type:
        raise ContainerError(f"{path}: holds a {meta.get('type')!r}, expected {expected_type!r}")
    return data, meta


def _array(data, key: str, path: PathLike) -> np.ndarray:
    try:
        return np.asarray(data[key])
    except KeyError as e:
        raise ContainerError(f"{path}: missing array '{key}'") from e


# ==================== QGN ====================

def save_qgn(qgn: QGN, path: PathLike) -> Path:
    meta = {
        'format': FORMAT_TAG,
        'type': 'qgn',
        'kind': qgn.kind,
        'time': qgn.time,
        'graph': qgn.graph.to_dict(),
        'chis': qgn.chis,
        'edges': [list(e) for e in sorted(qgn.connections)],
        'operators': [sorted(table) for table in qgn.operators],
        'metadata': qgn.metadata,
    }
    arrays = {f"psi_{i}": p for i, p in enumerate(qgn.psi)}
    arrays.update({f"V_{i}_{j}": v for (i, j), v in qgn.connections.items()})
    for patch, names in enumerate(meta['operators']):
        for k, name in enumerate(names):
            arrays[f"op_{patch}_{k}"] = qgn.operators[patch][name]
    return _write(path, meta, arrays)


def load_qgn(path: PathLike) -> QGN:
    data, meta = _read(path, 'qgn')
    try:
        graph = PatchGraph.from_dict(meta['graph'])
        chis = meta['chis']
        psi = [_array(data, f"psi_{i}", path).astype(complex) for i in range(len(chis))]
        for i, (vec, chi) in enumerate(zip(psi, chis)):
            if vec.shape != (chi,):
                raise ContainerError(f"{path}: psi_{i} has shape {vec.shape}, declared chi {chi}")
        connections = {
            (i, j): _array(data, f"V_{i}_{j}", path).astype(complex) for i, j in meta['edges']
        }
        operators = []
        for patch, names in enumerate(meta['operators']):
            operators.append({
                name: _array(data, f"op_{patch}_{k}", path).astype(complex) for k, name in enumerate(names)
            })
        return QGN(graph=graph, psi=psi, connections=connections, operators=operators,
                   kind=meta['kind'], time=float(meta['time']), metadata=meta.get('metadata', {}))
    except ContainerError:
        raise
    except Exception as e:
        raise ContainerError(f"{path}: inconsistent QGN container ({e})") from e


# ==================== MPS ====================

def save_mps(tensors: Sequence[np.ndarray], path: PathLike) -> Path:
    """تنسورهای سایت با شکل (χ_i, d_i, χ_{i+1})"""
    meta = {
        'format': FORMAT_TAG,
        'type': 'mps',
        'n_sites': len(tensors),
        'shapes': [list(t.shape) for t in tensors],
    }
    arrays = {f"t_{i}": np.asarray(t, dtype=complex) for i, t in enumerate(tensors)}
    return _write(path, meta, arrays)


def load_mps(path: PathLike) -> List[np.ndarray]:
    data, meta = _read(path, 'mps')
    shapes = meta.get('shapes')
    if not isinstance(shapes, list) or not shapes or len(shapes) != meta.get('n_sites'):
        raise ContainerError(f"{path}: shape table does not match n_sites")

    tensors = []
    for i, shape in enumerate(shapes):
        tensor = _array(data, f"t_{i}", path).astype(complex)
        if list(tensor.shape) != list(shape) or tensor.ndim != 3:
            raise ContainerError(f"{path}: t_{i} has shape {tensor.shape}, declared {shape}")
        tensors.append(tensor)

    if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
        raise ContainerError(f"{path}: boundary bond dimensions must be 1")
    for i in range(len(tensors) - 1):
        if tensors[i].shape[2] != tensors[i + 1].shape[0]:
            raise ContainerError(f"{path}: bond {i} dimensions disagree")
    return tensors
