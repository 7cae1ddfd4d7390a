from django.apps import AppConfig


class SpiderrisConfig(AppConfig):
    name = "spiderris"
    verbose_name = "Симулятор Spider RIS"
