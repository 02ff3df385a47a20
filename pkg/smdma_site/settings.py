"""
Django settings for smdma_site project.

The project hosts the ``semcom`` app: a desk-scale S-MDMA (sensitivity-aware
model-division multiple access) simulator driven through management commands.

For more information on this file, see
https://docs.djangoproject.com/en/4.2/topics/settings/
"""

from pathlib import Path
import os
import dj_database_url  # Update database configuration from $DATABASE_URL.

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('DJANGO_SECRET_KEY', 'smdma-local-3w!t7u0k$f2x#q9v+1m@c8r)z_e5h&j4p6n')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.environ.get('DJANGO_DEBUG', '') != 'False'

ALLOWED_HOSTS = ['127.0.0.1']

# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',  # required by the ORM for generic relations
    # the simulator app
    'semcom.apps.SemcomConfig',  # this object is initialized in the
    # semcom/apps.py file
]

MIDDLEWARE = []

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,  # semcom/templates holds the SVG plot template
        'OPTIONS': {
            'context_processors': [],
        },
    },
]


# Database
# https://docs.djangoproject.com/en/4.2/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

# Update database configuration from $DATABASE_URL.
db_from_env = dj_database_url.config(conn_max_age=500)
DATABASES['default'].update(db_from_env)


# Internationalization
# https://docs.djangoproject.com/en/4.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


# Default primary key field type
# https://docs.djangoproject.com/en/4.2/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Logging
# https://docs.djangoproject.com/en/4.2/topics/logging/

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {name} {message}',
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
        'semcom': {
            'handlers': ['console'],
            'level': os.environ.get('SMDMA_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}


# Simulator defaults (Table V "Simulation Parameters" plus the toy-codec sizes).
# Config files and command-line flags override these; keys are `section.key`.

SMDMA_VERSION = '1.0.0'

SMDMA_DEFAULTS = {
    'seed.base': '2024',
    # synthetic data
    'data.dir': 'data',
    'data.size': '32',
    'data.channels': '1',
    'data.count': '32',
    'data.edit_fraction': '0.25',
    'data.shapes': '4',
    # stage-1 semantic codec
    'semantic.hidden': '256',
    'semantic.feature_dim': '64',
    'semantic.epochs': '100',
    'semantic.learning_rate': '0.001',
    # Table IV channel codec
    'channel_codec.encoder_widths': '64,128',
    'channel_codec.decoder_widths': '64,1',
    'channel_codec.kernel_size': '3',
    # fusion sort encoder
    'fusion.tau': '0.05',
    'ranking.mode': 'calibrated',
    'ranking.epsilon': '0.01',
    'crop.ratio': '0.5',
    'ortho.u1': '0.5,-0.5,0.5,-0.5',
    'ortho.u2': '0.5,0.5,-0.5,-0.5',
    # Shadowed-Rician link
    'channel.mode': 'sr_fading',
    'channel.b0': '0.158',
    'channel.m': '19.4',
    'channel.omega': '1.29',
    'channel.equalize': 'off',
    # Algorithm 2
    'train.batch_size': '8',
    'train.epochs': '100',
    'train.learning_rate': '0.0001',
    'train.combiner': 'geometric',
    'train.user1_snr': '-10:0',
    'train.user2_snr': '0:10',
    'train.per_user_decoders': 'off',
    'sweep.workers': '1',
}
