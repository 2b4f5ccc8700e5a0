"""
Django settings for the plume surrogate project.

The project has no web surface: Django provides the management-command CLI,
the provenance registry (ORM over sqlite) and the test runner. Process-level
options are read from the environment (or a .env file) with python-decouple.
"""

import os
from decouple import config

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# only used by Django internals, nothing here is signed or served
SECRET_KEY = config('SECRET_KEY', default='plume-surrogate-local-development-key')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'rest_framework',
    'dispersion',
    'corpus',
    'surrogates',
    'evaluation',
    'sensors',
    'experiments',
]


# Plume surrogate options

# root directory for corpora, checkpoints, reports and figures
PLUME_OUTPUT_DIR = config('PLUME_OUTPUT_DIR', default=os.path.join(BASE_DIR, 'output'))

# default worker processes for simulating corpus runs
PLUME_WORKERS = config('PLUME_WORKERS', default=1, cast=int)

# torch device used for training and inference
PLUME_DEVICE = config('PLUME_DEVICE', default='cpu')

PLUME_LOG_LEVEL = config('PLUME_LOG_LEVEL', default='INFO')


# Database
# the provenance registry of runs and artifacts

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': config('PLUME_DB_PATH', default=os.path.join(BASE_DIR, 'db.sqlite3')),
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.AutoField'


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        app: {'handlers': ['console'], 'level': PLUME_LOG_LEVEL, 'propagate': False}
        for app in ('dispersion', 'corpus', 'surrogates', 'evaluation', 'sensors', 'experiments')
    },
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True
