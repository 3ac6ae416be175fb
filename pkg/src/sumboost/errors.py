"""Exception hierarchy.

Every error raised on purpose by the library derives from ``SumboostError`` so
the CLI can map whole families onto exit codes.
"""


class SumboostError(Exception):
    pass


# -- data -------------------------------------------------------------------

class DataError(SumboostError):
    """Malformed input data or configuration."""


class MissingTarget(DataError):
    pass


class UnknownClass(DataError):
    pass


class RaggedRow(DataError):
    pass


class MissingCell(DataError):
    pass


class TooFewRows(DataError):
    pass


class EmptyColumn(DataError):
    pass


class NotFitted(DataError):
    pass


class MissingPlaceholder(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class EmptyClass(DataError):
    pass


class SampleTooLarge(DataError):
    pass


class EmptyDirective(DataError):
    pass


class EmptyTrainSet(DataError):
    pass


class LengthMismatch(DataError):
    pass


# -- provider ---------------------------------------------------------------

class ProviderError(SumboostError):
    """The LLM provider failed, or the cache could not serve an offline run."""


class ContextOverflow(ProviderError):
    pass


class CacheCorruption(ProviderError):
    pass


class NoPatternMatch(ProviderError):
    pass


# -- learning ---------------------------------------------------------------

class LearningError(SumboostError):
    pass


class MappingFailure(LearningError):
    """A completion could not be mapped onto exactly one class."""

    def __init__(self, completion, hits=()):
        self.completion = completion
        self.hits = tuple(hits)
        if self.hits:
            msg = f"ambiguous answer {completion!r}: matches {', '.join(self.hits)}"
        else:
            msg = f"no class found in answer {completion!r}"
        super().__init__(msg)


class LengthExhausted(LearningError):
    pass


class AllCandidatesFailed(LearningError):
    pass


class RoundResampleExhausted(LearningError):
    pass


class DegenerateError(LearningError):
    pass


class AllRoundsAbstained(LearningError):
    pass


class EmptySummary(LearningError):
    pass
