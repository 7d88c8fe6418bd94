# utils/checkpoint.py
"""
ذخیره دوره‌ای QGN در حین تحول زمانی
- هر checkpoint یک فایل zip شامل qgn.npz و checkpoint_info.json
- checksum MD5 برای هر فایل
- نگه داشتن فقط K فایل آخر
"""

import hashlib
import json
import logging
import tempfile
import zipfile
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional

import config
from core.error_handler import ContainerError
from core.gauge_network import QGN
from core.serialization import load_qgn, save_qgn

logger = logging.getLogger(__name__)


class CheckpointManager:
    """
    مدیریت checkpoint های یک اجرا
    """

    def __init__(self, checkpoint_dir: Path = None, run_name: str = "run", keep: int = None):
        self.checkpoint_dir = Path(checkpoint_dir or config.CHECKPOINT_DIR)
        self.run_name = run_name
        self.keep = keep if keep is not None else config.KEEP_CHECKPOINTS
        self.checkpoint_dir.mkdir(parents=True, exist_ok=True)

        self.stats = {
            'total_checkpoints': 0,
            'last_checkpoint': None,
            'history': [],
        }
        logger.info(f"📦 CheckpointManager initialized: {self.checkpoint_dir}")

    def save(self, qgn: QGN, step: int, extra: Optional[dict] = None) -> Dict:
        """
        نوشتن یک checkpoint

        Returns:
            اطلاعات فایل (مسیر، md5، اندازه)
        """
        name = f"{self.run_name}_step{step:07d}"
        archive = self.checkpoint_dir / f"{name}.zip"

        with tempfile.TemporaryDirectory() as tmp:
            npz_path = save_qgn(qgn, Path(tmp) / "qgn.npz")
            info = {
                'run': self.run_name,
                'step': step,
                'time': qgn.time,
                'chis': qgn.chis,
                'datetime': datetime.now().isoformat(),
                'extra': extra or {},
            }
            with zipfile.ZipFile(archive, 'w', zipfile.ZIP_DEFLATED) as zipf:
                zipf.write(npz_path, "qgn.npz")
                zipf.writestr("checkpoint_info.json", json.dumps(info, indent=2, default=str))

        with open(archive, 'rb') as f:
            md5 = hashlib.md5(f.read()).hexdigest()
        size_mb = archive.stat().st_size / (1024 * 1024)

        self.stats['total_checkpoints'] += 1
        self.stats['last_checkpoint'] = datetime.now().isoformat()
        self.stats['history'].append({'name': name, 'step': step, 'md5': md5})
        if len(self.stats['history']) > 100:
            self.stats['history'] = self.stats['history'][-100:]

        logger.info(f"✅ Checkpoint saved: {archive.name} (t={qgn.time:.4g}, {size_mb:.2f} MB)")
        self.cleanup()
        return {'file': str(archive), 'name': name, 'md5': md5, 'size_mb': round(size_mb, 3)}

    def list_checkpoints(self) -> List[Dict]:
        """checkpoint های این اجرا، جدیدترین اول"""
        checkpoints = []
        for archive in sorted(self.checkpoint_dir.glob(f"{self.run_name}_step*.zip"), reverse=True):
            info = {}
            try:
                with zipfile.ZipFile(archive, 'r') as zipf:
                    if 'checkpoint_info.json' in zipf.namelist():
                        info = json.loads(zipf.read('checkpoint_info.json'))
            except zipfile.BadZipFile:
                logger.warning(f"⚠️ Unreadable checkpoint: {archive.name}")
            checkpoints.append({'file': str(archive), 'name': archive.stem, **info})
        return checkpoints

    def load(self, archive: Path) -> QGN:
        archive = Path(archive)
        try:
            with zipfile.ZipFile(archive, 'r') as zipf, tempfile.TemporaryDirectory() as tmp:
                zipf.extract("qgn.npz", tmp)
                qgn = load_qgn(Path(tmp) / "qgn.npz")
        except (KeyError, zipfile.BadZipFile, OSError) as e:
            raise ContainerError(f"cannot restore checkpoint {archive}: {e}") from e
        logger.info(f"✅ Restored checkpoint: {archive.name} (t={qgn.time:.4g})")
        return qgn

    def latest(self) -> Optional[QGN]:
        checkpoints = self.list_checkpoints()
        return self.load(Path(checkpoints[0]['file'])) if checkpoints else None

    def cleanup(self) -> int:
        """پاک کردن checkpoint های قدیمی؛ خروجی تعداد فایل‌های حذف‌شده"""
        archives = sorted(self.checkpoint_dir.glob(f"{self.run_name}_step*.zip"), reverse=True)
        deleted = 0
        for archive in archives[self.keep:]:
            archive.unlink()
            deleted += 1
            logger.debug(f"🗑️ Deleted old checkpoint: {archive.name}")
        return deleted
