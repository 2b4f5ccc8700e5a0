from django.apps import AppConfig


class CorpusAppConfig(AppConfig):
    name = 'corpus'
