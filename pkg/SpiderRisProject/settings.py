"""
Django settings for SpiderRisProject project.

Проект не обслуживает HTTP-запросы: Django используется как каркас для
настроек, management-команд и тестового раннера симулятора Spider RIS.

For more information on this file, see
https://docs.djangoproject.com/en/5.1/topics/settings/
"""
from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='spiderris-local-simulation-key')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'rest_framework',
    'spiderris',
]

# Симулятор не хранит результаты в базе данных
DATABASES = {}


# Internationalization
# https://docs.djangoproject.com/en/5.1/topics/i18n/

LANGUAGE_CODE = "ru-ru"

TIME_ZONE = "UTC"

USE_I18N = True

USE_TZ = True


# Simulation
SPIDERRIS_OUTPUT_DIR = Path(config('SPIDERRIS_OUTPUT_DIR', default=str(BASE_DIR / 'results')))

# Размер пула процессов для Монте-Карло испытаний (1 - без пула)
SPIDERRIS_WORKERS = config('SPIDERRIS_WORKERS', default=1, cast=int)

SPIDERRIS_DEFAULT_TRIALS = config('SPIDERRIS_DEFAULT_TRIALS', default=50, cast=int)


# Logging
LOG_LEVEL = config('LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'spiderris': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}
