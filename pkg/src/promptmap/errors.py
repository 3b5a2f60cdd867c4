"""Exception hierarchy shared by all promptmap modules.

Every error carries enough context to be mapped onto an HTTP (status, code)
pair by the API layer; see promptmap.api.ERROR_MAP.
"""


class PromptmapError(Exception):
    """Base class for all promptmap errors."""


# corpus ---------------------------------------------------------------

class MalformedManifest(PromptmapError):
    def __init__(self, line_no, reason):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"manifest line {line_no}: {reason}")


class DuplicateId(PromptmapError):
    def __init__(self, record_id):
        self.record_id = record_id
        super().__init__(f"duplicate record id {record_id!r}")


class RowOutOfRange(PromptmapError):
    def __init__(self, record_id, row, rows):
        self.record_id = record_id
        super().__init__(f"record {record_id!r}: row {row} out of range (matrix has {rows} rows)")


class BadMagic(PromptmapError):
    def __init__(self, path):
        self.path = path
        super().__init__(f"{path}: not a PMEB file (bad magic)")


class DimensionMismatch(PromptmapError):
    pass


class BadNorm(PromptmapError):
    def __init__(self, row, norm):
        self.row = row
        self.norm = norm
        super().__init__(f"feature row {row} has L2 norm {norm:.6g}, more than 1e-3 away from 1")


class NotFound(PromptmapError):
    def __init__(self, record_id):
        self.record_id = record_id
        super().__init__(f"no record with id {record_id!r}")


class IoError(PromptmapError):
    pass


# backends -------------------------------------------------------------

class BackendUnavailable(PromptmapError):
    pass


class BackendTimeout(PromptmapError):
    pass


class UndecodableImage(PromptmapError):
    pass


class InvalidRange(PromptmapError):
    pass


class PartialFailure(PromptmapError):
    """Some generation requests succeeded, others failed.

    `succeeded` holds the completed GenerationResults, `failed` holds
    (request, exception) pairs.
    """

    def __init__(self, succeeded, failed):
        self.succeeded = succeeded
        self.failed = failed
        super().__init__(f"{len(failed)} of {len(succeeded) + len(failed)} generations failed")


# retrieval / projection ----------------------------------------------

class ZeroVector(PromptmapError):
    pass


class EmptyCorpus(PromptmapError):
    pass


class CorpusNotLoaded(PromptmapError):
    pass


class NonFiniteInput(PromptmapError):
    pass


class ShapeMismatch(PromptmapError):
    pass


# clustering -----------------------------------------------------------

class NonFinitePoint(PromptmapError):
    pass


# keywords -------------------------------------------------------------

class UnknownCluster(PromptmapError):
    pass


class UnknownTerm(PromptmapError):
    pass


class EmptySelection(PromptmapError):
    pass


# evaluation -----------------------------------------------------------

class EmptyKeyword(PromptmapError):
    pass


# layout ---------------------------------------------------------------

class NoOccurrences(PromptmapError):
    pass


# session --------------------------------------------------------------

class UnknownRecord(PromptmapError):
    def __init__(self, record_id):
        self.record_id = record_id
        super().__init__(f"record {record_id!r} is not part of this session")


class VersionMismatch(PromptmapError):
    pass


class PipelineFailure(PromptmapError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"pipeline stage {stage!r} failed: {cause}")
