"""
Production settings: ablation rows are dispatched to Celery workers.
"""

from .base import *

DEBUG = False

CELERY_TASK_ALWAYS_EAGER = config('CELERY_TASK_ALWAYS_EAGER', default=False, cast=bool)

MOTIONBENCH_WORKERS = config('MOTIONBENCH_WORKERS', default=4, cast=int)
