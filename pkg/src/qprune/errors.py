"""Exception types shared across the toolkit."""


class QpruneError(Exception):
    """Base class for all toolkit errors."""


class CorpusFormatError(QpruneError):
    """A corpus, score, triples, queries, or qrels record could not be parsed."""

    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class DuplicateDocnoError(QpruneError):
    """The same docno appeared twice where identifiers must be unique."""


class EmptyCorpusError(QpruneError):
    """An operation that needs at least one passage received none."""


class UndefinedScoreError(QpruneError):
    """The estimator cannot assign a score to this passage (e.g. it is empty)."""


class MissingTermError(QpruneError):
    """A passage term is absent from the language model vocabulary."""


class MissingScoreError(QpruneError):
    """A corpus docno has no entry in the score set handed to the pruner."""


class DivergenceError(QpruneError):
    """Training produced a non-finite loss."""

    def __init__(self, step, message="non-finite loss"):
        self.step = step
        super().__init__(f"{message} at step {step}")


class DegenerateLabelsError(QpruneError):
    """ROC/AUC needs at least one positive and one negative label."""


class PairingError(QpruneError):
    """Two per-query vectors do not cover the same query ids."""


class InsufficientDataError(QpruneError):
    """Not enough paired observations for the requested statistical test."""
