"""Exception hierarchy shared by all arsent modules."""


class ArsentError(Exception):
    """Base class for every error raised by this package."""


class MarkupError(ArsentError):
    """Malformed corpus markup (e.g. an element that is never closed)."""


class ContractError(ArsentError, ValueError):
    """A documented precondition was violated by the caller."""


class EmptyVocabularyError(ArsentError):
    pass


class OutOfVocabularyError(ArsentError, KeyError):
    def __init__(self, word):
        super().__init__(word)
        self.word = word

    def __str__(self):
        return f"word not in vocabulary: {self.word!r}"


class NonFiniteError(ArsentError, FloatingPointError):
    pass


class FormatError(ArsentError, ValueError):
    """A file did not match the expected on-disk format."""


class LexiconError(FormatError):
    pass


class MissingAnnotationError(ArsentError):
    def __init__(self, missing):
        self.missing = tuple(missing)
        super().__init__("unannotated neighbour words: " + ", ".join(self.missing))


class DimensionError(ArsentError, ValueError):
    pass


class DatasetError(FormatError):
    pass
