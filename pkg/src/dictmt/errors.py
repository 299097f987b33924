class DataError(Exception):
    """Raised for malformed or inconsistent input data.

    The CLI maps this to exit code 2.
    """


class CorpusError(DataError):
    pass


class DictionaryError(DataError):
    pass


class AnnotationError(DataError):
    pass


class SegmentationError(DataError):
    pass


class PipelineError(Exception):
    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
