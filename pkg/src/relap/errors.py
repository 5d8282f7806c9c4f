"""Exception types shared by all pipeline stages.

Anything that should abort a CLI stage with exit code 1 derives from
PipelineError; any other exception escaping a stage is a bug.
"""


class PipelineError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class ConfigError(PipelineError):
    pass


# file / schema

class MissingFile(PipelineError):
    pass


class SchemaError(PipelineError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonMonotoneFrames(PipelineError):
    pass


class DuplicateSceneId(PipelineError):
    pass


class LengthError(PipelineError):
    pass


class DecodeError(PipelineError):
    pass


# geometry / tracking

class DegenerateBox(PipelineError):
    pass


class NonFiniteCost(PipelineError):
    pass


class MixedFrameInput(PipelineError):
    pass


# scene building

class TooShort(PipelineError):
    pass


class NoPeriodicity(PipelineError):
    pass


# features / similarity

class EmptyForeground(PipelineError):
    pass


class ZeroVector(PipelineError):
    pass


class LengthMismatch(PipelineError):
    pass


class ZeroVariance(PipelineError):
    pass


class LambdaOutOfRange(PipelineError):
    pass


class MissingFeature(PipelineError):
    def __init__(self, scene_id, feature):
        self.scene_id = scene_id
        self.feature = feature
        super().__init__(f"scene {scene_id!r} is missing feature {feature!r}")


# evaluation

class NoPositives(PipelineError):
    pass


class LabelMissing(PipelineError):
    pass


# synthetic data

class SpecInvalid(PipelineError):
    pass
