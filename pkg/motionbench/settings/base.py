"""
Django settings for the motionbench project.
"""

from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent

SECRET_KEY = config('SECRET_KEY', default='motionbench-local-only')

DEBUG = config('DEBUG', default=True, cast=bool)

# Application definition
LOCAL_APPS = [
    'apps.common',
    'apps.tensor',
    'apps.shift',
    'apps.cmem',
    'apps.clim',
    'apps.network',
    'apps.videos',
    'apps.training',
    'apps.verification',
]

INSTALLED_APPS = LOCAL_APPS

# No ORM models: everything persists to versioned binary files.
DATABASES = {}

TIME_ZONE = "UTC"

USE_TZ = True

# Celery Configuration
CELERY_BROKER_URL = config('CELERY_BROKER_URL', default='redis://localhost:6379/0')
CELERY_RESULT_BACKEND = config('CELERY_RESULT_BACKEND', default='redis://localhost:6379/0')
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = TIME_ZONE
CELERY_TASK_ALWAYS_EAGER = config('CELERY_TASK_ALWAYS_EAGER', default=True, cast=bool)
CELERY_TASK_EAGER_PROPAGATES = True
CELERY_TASK_TRACK_STARTED = True
CELERY_TASK_TIME_LIMIT = 60 * 60  # 1 hour per ablation row

# Experiment defaults
MOTIONBENCH = {
    # CMEM
    'REDUCTION_RATIO': 16,
    'ALPHA': 0.5,
    'BETA': 0.5,
    'ATTENTION_FORM': 'shifted-sigmoid',
    'COSINE_EPS': 1e-8,
    # Temporal shift
    'SHIFT_MODE': 'pretrained',
    'RANDOM_SHIFT_SCALE': 1.0 / 3 ** 0.5,
    # Normalization
    'BN_EPS': 1e-5,
    'BN_MOMENTUM': 0.1,
    # Verification
    'GRADCHECK_EPS': 1e-4,
    'GRADCHECK_TOLERANCE': 1e-5,
    # Synthetic video
    'SPRITE_SIZE': 3,
    'NOISE_STD': 0.05,
}

# Worker threads for data prefetch and evaluation sharding
MOTIONBENCH_WORKERS = config('MOTIONBENCH_WORKERS', default=1, cast=int)

# Logging
LOG_LEVEL = config('LOG_LEVEL', default='INFO')
LOG_FILE = config('LOG_FILE', default='')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'level': LOG_LEVEL,
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': True,
        },
        'motionbench': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': True,
        },
    },
}

if LOG_FILE:
    LOGGING['handlers']['file'] = {
        'level': LOG_LEVEL,
        'class': 'logging.FileHandler',
        'filename': LOG_FILE,
        'formatter': 'verbose',
    }
    LOGGING['loggers']['motionbench']['handlers'].append('file')
