"""
Test settings for motionbench project
"""
from .base import *

# Test-specific settings
DEBUG = False

# Run Celery tasks inline during testing
CELERY_TASK_ALWAYS_EAGER = True
CELERY_TASK_EAGER_PROPAGATES = True
CELERY_BROKER_URL = 'memory://'
CELERY_RESULT_BACKEND = 'cache+memory://'

# Disable logging during tests
LOGGING = {
    'version': 1,
    'disable_existing_loggers': True,
    'handlers': {
        'null': {
            'class': 'logging.NullHandler',
        },
    },
    'root': {
        'handlers': ['null'],
    },
}

# Test-specific secret key
SECRET_KEY = 'test-secret-key-for-testing-only'

MOTIONBENCH_WORKERS = 1
