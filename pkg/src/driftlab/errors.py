"""Exception types shared across the package.

Every error carries a stable machine-readable ``code`` so CLI and service
layers can map failures without string matching.
"""


class DriftlabError(Exception):
    code = "error"


class ParseError(DriftlabError):
    code = "parse_error"


class OrphanFileError(ParseError):
    code = "orphan_file_error"


class ValidationError(DriftlabError):
    """Raised when a trial fails invariant checks; carries the violations."""

    code = "validation_error"

    def __init__(self, violations, source=""):
        self.violations = list(violations)
        detail = "; ".join(f"{v.code}: {v.detail}" for v in self.violations)
        prefix = f"{source}: " if source else ""
        super().__init__(f"{prefix}{detail}")


class ParamError(DriftlabError):
    code = "param_error"


class ShapeMismatchError(DriftlabError):
    code = "shape_mismatch"


class DegenerateStimulusError(DriftlabError):
    code = "degenerate_stimulus"


class ZeroVarianceError(DriftlabError):
    code = "zero_variance_feature"


class CorpusTooShortError(DriftlabError):
    code = "corpus_too_short"


class EmptyEnsembleError(DriftlabError):
    code = "empty_ensemble"


class BadMaxLineError(DriftlabError):
    code = "bad_max_line"


class InconsistentPoolError(DriftlabError):
    code = "inconsistent_pool"


class EmptyDatasetError(DriftlabError):
    code = "empty_dataset"


class MetricError(DriftlabError):
    code = "metric_error"
