class SteinerLabError(Exception):
    """Base class for all errors raised by fractal_steiner."""


class SceneError(SteinerLabError, ValueError):
    pass


class PackingError(SceneError):
    def __init__(self, j: int, message: str):
        super().__init__(f"shelf packing failed at j={j}: {message}")
        self.j = j


class GridError(SteinerLabError, ValueError):
    pass


class ContourError(GridError):
    """Level set touches the grid boundary; enlarge the margin."""


class BundleError(SteinerLabError, ValueError):
    pass


class DivergenceError(SteinerLabError, ValueError):
    """Evaluation requested at or left of the abscissa of convergence."""


class PoleError(SteinerLabError, ValueError):
    pass


class FitError(SteinerLabError, ValueError):
    pass
