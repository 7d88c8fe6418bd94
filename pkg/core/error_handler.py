#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
خطاهای دامنه و مدیریت سراسری خطا
"""

import logging
import traceback
from functools import wraps
from typing import Any, Callable, Dict, List, Optional

logger = logging.getLogger(__name__)

# ==================== Exceptions ====================

class QGNError(Exception):
    """ریشه همه خطاهای شبیه‌ساز"""


class InvalidLatticeError(QGNError):
    pass


class UnsupportedPathError(QGNError):
    pass


class InvalidSectorError(QGNError):
    pass


class KindMismatchError(QGNError):
    pass


class ContractViolation(QGNError):
    """پیش‌شرط یک عملیات برقرار نیست"""


class ToleranceError(QGNError):
    pass


class InvalidImageError(QGNError):
    pass


class RankError(QGNError):
    pass


class ConstructionError(QGNError):
    pass


class MissingOperatorError(QGNError, KeyError):
    pass


class MissingConnectionError(QGNError, KeyError):
    pass


class IntegratorError(QGNError):
    pass


class ConfigError(QGNError):
    pass


class ContainerError(QGNError):
    """فایل MPS یا QGN خراب یا ناقص"""


# ==================== Warnings ====================

class IdentityNotApplicableWarning(UserWarning):
    """باقیمانده Vψ بزرگ است؛ مقدار مستقیم برگردانده شد"""


class NonHermitianDensityWarning(UserWarning):
    pass


# ==================== ErrorHandler ====================

class ErrorHandler:
    """
    ثبت خطاها با context و نمایش راهنما برای کاربر CLI
    """

    def __init__(self, history_size: int = 100):
        self.error_count = 0
        self.error_history: List[Dict[str, Any]] = []
        self.history_size = history_size
        self.recovery_strategies: Dict[str, Callable] = {}
        logger.debug("🔰 ErrorHandler initialized")

    def handle_error(self, error: Exception, context: dict = None) -> Dict[str, Any]:
        """ثبت یک خطا و اجرای استراتژی ثبت‌شده برای نوع آن"""

        self.error_count += 1
        error_type = type(error).__name__

        error_info = {
            'type': error_type,
            'message': str(error),
            'traceback': traceback.format_exc(),
            'context': context or {},
            'count': self.error_count,
            'hint': None,
        }

        self.error_history.append(error_info)
        if len(self.error_history) > self.history_size:
            self.error_history = self.error_history[-self.history_size:]

        logger.error(f"❌ Error #{self.error_count}: {error_type} - {error}")

        error_info['hint'] = self.try_recovery(error, context)
        return error_info

    def try_recovery(self, error: Exception, context: dict = None) -> Optional[str]:
        """اجرای استراتژی بازیابی؛ خروجی یک پیام راهنما است"""

        for klass in type(error).__mro__:
            strategy = self.recovery_strategies.get(klass.__name__)
            if strategy is None:
                continue
            try:
                hint = strategy(error, context)
                if hint:
                    logger.warning(f"⚠️ {hint}")
                return hint
            except Exception as e:
                logger.error(f"❌ Recovery failed: {e}")
                return None
        return None

    def register_recovery(self, error_type: str, strategy: Callable):
        self.recovery_strategies[error_type] = strategy

    def get_stats(self) -> dict:
        error_types: Dict[str, int] = {}
        for err in self.error_history:
            error_types[err['type']] = error_types.get(err['type'], 0) + 1

        return {
            'total_errors': self.error_count,
            'error_types': error_types,
            'recent_errors': self.error_history[-5:],
        }

    def reset(self):
        self.error_count = 0
        self.error_history = []


# نمونه سراسری
error_handler = ErrorHandler()

# ==================== Decorators ====================

def safe_execute(default_return=None, log_error=True, handler: ErrorHandler = None):
    """
    دکوریتور اجرای ایمن

    اگر default_return قابل فراخوانی باشد، با (exception, error_info) صدا زده می‌شود
    تا خروجی جایگزین بسازد (مثلاً نتیجه رد شدن یک check).
    """
    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except Exception as e:
                info = None
                if log_error:
                    info = (handler or error_handler).handle_error(e, {
                        'function': func.__name__,
                        'args': str(args)[:100],
                        'kwargs': str(kwargs)[:100],
                    })
                if callable(default_return):
                    return default_return(e, info)
                return default_return
        return wrapper
    return decorator

# ==================== استراتژی‌های پیش‌فرض ====================

def hint_config_error(error, context):
    return "Check the experiment YAML at the reported line (see configs/ for working examples)."


def hint_tolerance_error(error, context):
    return "Krylov propagation did not converge; try a larger krylov_dim or a shorter oracle time step."


def hint_integrator_error(error, context):
    return "The RK generator lost Hermiticity; reduce --dt or inspect the operator tables for NaN entries."


def hint_container_error(error, context):
    return "The container is malformed; re-export it with save_mps/save_qgn (format 'qgn-npz-1')."


def hint_lattice_error(error, context):
    return "Lattice extents must be >= 2 for bond patches, and periodic extents must be >= 3."


error_handler.register_recovery('ConfigError', hint_config_error)
error_handler.register_recovery('ToleranceError', hint_tolerance_error)
error_handler.register_recovery('IntegratorError', hint_integrator_error)
error_handler.register_recovery('ContainerError', hint_container_error)
error_handler.register_recovery('InvalidLatticeError', hint_lattice_error)
