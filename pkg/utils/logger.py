# utils/logger.py
"""
سیستم لاگینگ شبیه‌ساز:
- نمایش رنگی در کنسول
- ذخیره در فایل با چرخش خودکار
- فایل جدا برای خطاها
- زمان‌سنجی مراحل و لاگ JSON گزارش‌ها
"""

import json
import logging
import sys
import time
from datetime import datetime
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Dict, Optional

from colorama import Back, Fore, Style, init

import config

init(autoreset=True)

# ==================== فرمت‌های رنگی ====================

class ColoredFormatter(logging.Formatter):
    """فرمتر رنگی برای کنسول (فقط سطح لاگ رنگی می‌شود)"""

    COLORS = {
        'DEBUG': Fore.CYAN,
        'INFO': Fore.GREEN,
        'WARNING': Fore.YELLOW,
        'ERROR': Fore.RED,
        'CRITICAL': Back.RED + Fore.WHITE,
    }

    def format(self, record: logging.LogRecord) -> str:
        original = record.levelname
        color = self.COLORS.get(original)
        if color:
            record.levelname = f"{color}{original}{Style.RESET_ALL}"
        try:
            return super().format(record)
        finally:
            record.levelname = original


def setup_logger(name: str, log_level: str = None,
                 log_dir: Optional[Path] = None,
                 console: bool = True,
                 file_stem: Optional[str] = None) -> logging.Logger:
    """
    راه‌اندازی logger با کنسول رنگی و فایل‌های چرخشی

    Args:
        name: نام logger (معمولاً نام بسته یا 'qgn')
        log_level: سطح لاگ؛ پیش‌فرض از config.LOG_LEVEL
        log_dir: پوشه فایل‌ها؛ پیش‌فرض config.LOGS_DIR
        console: نمایش در کنسول
        file_stem: پیشوند نام فایل‌ها (برای root logger که نام خالی دارد)

    Returns:
        logging.Logger
    """
    level_name = (log_level or config.LOG_LEVEL).upper()
    level = getattr(logging, level_name, logging.INFO)

    log_dir = Path(log_dir or config.LOGS_DIR)
    log_dir.mkdir(parents=True, exist_ok=True)
    today = datetime.now().strftime("%Y-%m-%d")
    stem = file_stem or name or config.PROJECT_NAME

    logger = logging.getLogger(name)
    logger.setLevel(level)
    if logger.handlers:
        logger.handlers.clear()

    file_formatter = logging.Formatter(
        '%(asctime)s | %(levelname)-8s | %(name)s | %(filename)s:%(lineno)d | %(message)s',
        datefmt=config.LOG_DATE_FORMAT,
    )

    # ==================== هندلر فایل ====================
    file_handler = RotatingFileHandler(
        log_dir / f"{stem}_{today}.log",
        maxBytes=10 * 1024 * 1024,
        backupCount=5,
        encoding='utf-8',
    )
    file_handler.setFormatter(file_formatter)
    file_handler.setLevel(logging.DEBUG)
    logger.addHandler(file_handler)

    # ==================== هندلر خطا ====================
    error_handler = RotatingFileHandler(
        log_dir / f"{stem}_error.log",
        maxBytes=5 * 1024 * 1024,
        backupCount=3,
        encoding='utf-8',
    )
    error_handler.setFormatter(file_formatter)
    error_handler.setLevel(logging.ERROR)
    logger.addHandler(error_handler)

    # ==================== هندلر کنسول ====================
    if console:
        console_handler = logging.StreamHandler(sys.stdout)
        console_handler.setFormatter(ColoredFormatter(config.LOG_FORMAT, datefmt='%H:%M:%S'))
        console_handler.setLevel(level)
        logger.addHandler(console_handler)

    logger.debug(f"📝 Logger initialized: {stem} (level: {level_name})")
    return logger


class PerformanceLogger:
    """زمان‌سنج مراحل (ساخت، تحول زمانی، اوراکل)"""

    def __init__(self, logger: logging.Logger):
        self.logger = logger
        self.start_times: Dict[str, float] = {}
        self.timings: Dict[str, float] = {}

    def start(self, operation: str):
        self.start_times[operation] = time.perf_counter()
        self.logger.debug(f"⏱ Started: {operation}")

    def end(self, operation: str) -> float:
        """پایان اندازه‌گیری؛ زمان بر حسب ثانیه"""
        started = self.start_times.pop(operation, None)
        if started is None:
            return 0.0
        elapsed = time.perf_counter() - started
        self.timings[operation] = self.timings.get(operation, 0.0) + elapsed
        self.logger.debug(f"⏱ Completed: {operation} ({elapsed:.3f}s)")
        return elapsed

    def end_and_log(self, operation: str, level: str = "INFO") -> float:
        elapsed = self.end(operation)
        getattr(self.logger, level.lower())(f"⏱ {operation} completed in {elapsed:.3f}s")
        return elapsed


class JsonLogger:
    """لاگ رکوردهای ساخت‌یافته، هر رکورد یک خط JSON"""

    def __init__(self, logger: logging.Logger):
        self.logger = logger

    def _entry(self, kind: str, data: dict) -> str:
        return json.dumps({
            'timestamp': datetime.now().isoformat(),
            'type': kind,
            'data': data,
        }, default=str)

    def log_report(self, report: dict):
        self.logger.info(f"📊 REPORT: {self._entry('report', report)}")

    def log_check(self, check: dict):
        log_func = self.logger.info if check.get('passed') else self.logger.error
        log_func(f"🧪 CHECK: {self._entry('check', check)}")
