from django.apps import AppConfig


class SurrogatesConfig(AppConfig):
    name = 'surrogates'
