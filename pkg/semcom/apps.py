from django.apps import AppConfig


class SemcomConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'semcom'
    verbose_name = 'S-MDMA semantic communication simulator'
