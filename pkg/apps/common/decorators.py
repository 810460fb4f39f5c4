from functools import wraps
import logging
import time

from django.core.management.base import CommandError

from .exceptions import MotionBenchError


def log_command(action_type):
    """
    Decorator to log management command runs for provenance
    """
    def decorator(handle):
        @wraps(handle)
        def wrapped_handle(self, *args, **options):
            logger = logging.getLogger('motionbench')
            shown = {key: value for key, value in options.items()
                     if key not in ('stdout', 'stderr', 'skip_checks') and value not in (None, False, [])}
            logger.info(f"Command: {action_type} - Options: {shown}")

            started = time.perf_counter()
            result = handle(self, *args, **options)
            logger.info(f"Command: {action_type} - Finished in {time.perf_counter() - started:.2f}s")
            return result
        return wrapped_handle
    return decorator


def usage_errors(handle):
    """
    Decorator turning domain and I/O errors into exit code 2
    """
    @wraps(handle)
    def wrapped_handle(self, *args, **options):
        try:
            return handle(self, *args, **options)
        except CommandError:
            raise
        except (MotionBenchError, OSError) as exc:
            raise CommandError(str(exc), returncode=2) from exc
    return wrapped_handle
