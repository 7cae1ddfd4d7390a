class SpiderRisError(Exception):
    """Базовая ошибка симулятора."""


class InvalidConfigError(SpiderRisError):
    """
    Конфигурация нарушает инварианты.

    issues - список найденных нарушений (см. scenario.ConfigIssue)
    """

    def __init__(self, issues):
        self.issues = list(issues)
        details = "; ".join(str(issue) for issue in self.issues)
        super().__init__(f"Некорректная конфигурация: {details}")


class DegenerateGeometryError(SpiderRisError):
    """Совпадающие концы линии, углы не определены."""


class DimensionMismatchError(SpiderRisError):
    """Размерности матриц не согласованы."""


class InvalidBeamError(SpiderRisError):
    """Квантованная пара углов лежит вне единичного круга."""


class GridTooLargeError(SpiderRisError):
    """Перебор по сетке превышает допустимое число точек."""

    def __init__(self, count, limit):
        self.count = count
        self.limit = limit
        super().__init__(f"Сетка из {count} точек превышает предел {limit}")


class ResultsError(SpiderRisError):
    """Таблицу результатов нельзя записать или отрисовать."""
