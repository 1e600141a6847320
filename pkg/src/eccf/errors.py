"""Exception types raised across the package."""


class DataError(ValueError):
    """Input data is malformed or violates a referential constraint."""


class ColdStartError(DataError):
    """A user has no ratings, so no mean is defined."""


class TrainingDivergence(ArithmeticError):
    """SGD produced non-finite parameters."""

    def __init__(self, epoch: int):
        super().__init__(f"SGD diverged (non-finite parameters) during epoch {epoch}")
        self.epoch = epoch
