"""Exception hierarchy shared by every stage of the pipeline."""


class SkesimError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(SkesimError, ValueError):
    pass


class InvalidInputError(SkesimError, ValueError):
    pass


class MultipleComponentsError(InvalidInputError):
    def __init__(self, sizes):
        self.sizes = list(sizes)
        super().__init__(
            f"skeleton has {len(self.sizes)} connected components (sizes: {self.sizes})"
        )


class InvalidRootError(InvalidInputError):
    pass


class EmptySkeletonError(InvalidInputError):
    pass


class InsufficientDataError(InvalidInputError):
    pass


class InvalidInsertionError(SkesimError, ValueError):
    pass


class DomainError(SkesimError, ValueError):
    pass


class InvalidTemplateError(SkesimError, ValueError):
    pass


class InvalidOutlineError(SkesimError, ValueError):
    pass


class ConfigError(SkesimError, ValueError):
    pass
