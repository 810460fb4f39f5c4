"""
Development settings for motionbench project.
"""

from .base import *

DEBUG = True

# Run ablation tasks synchronously in development
CELERY_TASK_ALWAYS_EAGER = True
CELERY_TASK_EAGER_PROPAGATES = True
