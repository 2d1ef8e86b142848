"""
mabcs Error Hierarchy

Provides a structured error framework for consistent error handling across the toolkit.
All custom exceptions include error categories, recoverability flags, and error codes.
"""

from enum import Enum
from typing import Optional, Dict, Any


class ErrorCategory(str, Enum):
    """Categories of errors for grouping and reporting"""
    INSTANCE = "instance"
    INGESTION = "ingestion"
    SAMPLING = "sampling"
    POLICY = "policy"
    BOUNDS = "bounds"
    EXPERIMENT = "experiment"
    STORAGE = "storage"
    VALIDATION = "validation"
    CONFIGURATION = "configuration"


class MabcsError(Exception):
    """
    Base exception for all mabcs errors.

    Attributes:
        category: Error category for grouping
        recoverable: Whether the error can be recovered from
        error_code: Unique error code for tracking
        context: Additional context about the error
    """
    category: ErrorCategory = ErrorCategory.VALIDATION
    error_code: str = "UNKNOWN"

    def __init__(
        self,
        message: str,
        recoverable: bool = False,
        context: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message)
        self.recoverable = recoverable
        self.context = context or {}

    def __reduce__(self):
        # Subclass constructors take domain arguments, not the message;
        # rebuild from the finished state when crossing a process boundary
        return (_rebuild_error, (type(self), str(self), self.recoverable, self.context))

    def to_dict(self) -> Dict[str, Any]:
        """Convert error to dictionary for logging/CLI error lines"""
        return {
            "error_code": self.error_code,
            "category": self.category.value,
            "message": str(self),
            "recoverable": self.recoverable,
            "context": self.context
        }


def _rebuild_error(cls, message: str, recoverable: bool, context: Dict[str, Any]) -> MabcsError:
    error = cls.__new__(cls)
    MabcsError.__init__(error, message, recoverable=recoverable, context=context)
    return error


# ============================================================================
# Validation Errors
# ============================================================================

class ValidationError(MabcsError):
    """Base class for validation errors"""
    category = ErrorCategory.VALIDATION
    error_code = "VALIDATION_ERROR"

    def __init__(self, message: str, field: Optional[str] = None, **kwargs):
        super().__init__(message, recoverable=False, **kwargs)
        if field:
            self.context["field"] = field


# ============================================================================
# Instance Errors
# ============================================================================

class InstanceError(MabcsError):
    """Base class for bandit instance errors"""
    category = ErrorCategory.INSTANCE
    error_code = "INSTANCE_ERROR"


class InstanceValidationError(InstanceError):
    """Bandit instance built from invalid values"""
    error_code = "INSTANCE_INVALID"

    def __init__(self, message: str, field: Optional[str] = None, **kwargs):
        super().__init__(message, recoverable=False, **kwargs)
        if field:
            self.context["field"] = field


class InstanceParseError(InstanceError):
    """Instance file could not be parsed"""
    error_code = "INSTANCE_PARSE"

    def __init__(
        self,
        message: str,
        line_number: Optional[int] = None,
        line: Optional[str] = None,
        **kwargs
    ):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message, recoverable=False, **kwargs)
        self.line_number = line_number
        if line_number is not None:
            self.context["line_number"] = line_number
        if line is not None:
            self.context["line"] = line


class MalformedLineError(InstanceParseError):
    """Line does not match the instance file grammar"""
    error_code = "INSTANCE_MALFORMED_LINE"


class TooFewArmsError(InstanceParseError):
    """Instance declares or contains fewer than two arms"""
    error_code = "INSTANCE_TOO_FEW_ARMS"


class MeanOutOfRangeError(InstanceParseError):
    """Arm mean outside [0, 1]"""
    error_code = "INSTANCE_MEAN_RANGE"


class NegativeCostError(InstanceParseError):
    """Arm cost below zero"""
    error_code = "INSTANCE_NEGATIVE_COST"


class AlphaOutOfRangeError(InstanceParseError):
    """Subsidy factor outside the open interval (0, 1)"""
    error_code = "INSTANCE_ALPHA_RANGE"


# ============================================================================
# Ingestion Errors
# ============================================================================

class IngestionError(MabcsError):
    """Base class for ratings ingestion errors"""
    category = ErrorCategory.INGESTION
    error_code = "INGESTION_ERROR"


class EmptyRatingsError(IngestionError):
    """No usable ratings in the input"""
    error_code = "INGESTION_EMPTY"

    def __init__(self, message: str = "No ratings matched any genre", **kwargs):
        super().__init__(message, **kwargs)


class RatingOutOfRangeError(IngestionError):
    """Rating outside (0, scale_max]"""
    error_code = "INGESTION_RATING_RANGE"

    def __init__(self, rating: float, scale_max: float, **kwargs):
        super().__init__(
            f"Rating {rating} outside (0, {scale_max}]",
            **kwargs
        )
        self.context["rating"] = rating
        self.context["scale_max"] = scale_max


# ============================================================================
# Sampling Errors
# ============================================================================

class SamplingError(MabcsError):
    """Base class for reward sampling and arm statistics errors"""
    category = ErrorCategory.SAMPLING
    error_code = "SAMPLING_ERROR"


class UninitializedArmError(SamplingError):
    """Confidence radius requested for an arm that has never been sampled"""
    error_code = "ARM_UNINITIALIZED"

    def __init__(self, message: str = "Confidence radius needs n >= 1", **kwargs):
        super().__init__(message, **kwargs)


class RewardValueError(SamplingError):
    """Observed reward is not Bernoulli"""
    error_code = "REWARD_VALUE"

    def __init__(self, reward: Any, **kwargs):
        super().__init__(f"Reward must be 0 or 1, got {reward!r}", **kwargs)
        self.context["reward"] = str(reward)


# ============================================================================
# Policy Errors
# ============================================================================

class PolicyError(MabcsError):
    """Base class for policy stepping errors"""
    category = ErrorCategory.POLICY
    error_code = "POLICY_ERROR"


class HorizonExceededError(PolicyError):
    """Policy asked for an arm at or beyond the horizon"""
    error_code = "HORIZON_EXCEEDED"

    def __init__(self, t: int, horizon: int, **kwargs):
        super().__init__(f"Timestep {t} is not below horizon {horizon}", **kwargs)
        self.context["t"] = t
        self.context["horizon"] = horizon


class UnknownAlgorithmError(PolicyError):
    """Algorithm name not recognised"""
    error_code = "UNKNOWN_ALGORITHM"

    def __init__(self, name: str, **kwargs):
        super().__init__(f"Unknown algorithm: {name}", **kwargs)
        self.context["algorithm"] = name


# ============================================================================
# Bounds Errors
# ============================================================================

class BoundsError(MabcsError):
    """Base class for theoretical bound calculator errors"""
    category = ErrorCategory.BOUNDS
    error_code = "BOUNDS_ERROR"


class ArmClassError(BoundsError):
    """Arm does not belong to the class a calculator requires"""
    error_code = "ARM_CLASS"

    def __init__(self, arm: int, expected: str, **kwargs):
        super().__init__(f"Arm {arm + 1} is not a {expected} arm", **kwargs)
        self.context["arm"] = arm + 1
        self.context["expected"] = expected


class ScanLimitExceededError(BoundsError):
    """Exact tau scan ran past its limit without satisfying the constraint"""
    error_code = "TAU_SCAN_LIMIT"

    def __init__(self, arm: int, limit: int, **kwargs):
        super().__init__(
            f"No n <= {limit} satisfies the elimination constraint for arm {arm + 1}",
            **kwargs
        )
        self.context["arm"] = arm + 1
        self.context["limit"] = limit


# ============================================================================
# Experiment Errors
# ============================================================================

class ExperimentError(MabcsError):
    """Base class for sweep and aggregation errors"""
    category = ErrorCategory.EXPERIMENT
    error_code = "EXPERIMENT_ERROR"


class CheckpointGridMismatchError(ExperimentError):
    """Run traces use different checkpoint grids"""
    error_code = "CHECKPOINT_GRID_MISMATCH"

    def __init__(self, run_id: str, reason: str = "differs from the first trace", **kwargs):
        super().__init__(f"Checkpoint grid of {run_id} {reason}", **kwargs)
        self.context["run_id"] = run_id
        self.context["reason"] = reason


class RunFailedError(ExperimentError):
    """A single run of the sweep failed"""
    error_code = "RUN_FAILED"

    def __init__(self, algorithm: str, alpha: float, run_index: int, reason: str, **kwargs):
        super().__init__(
            f"Run {run_index} of {algorithm} at alpha={alpha} failed: {reason}",
            **kwargs
        )
        self.context["algorithm"] = algorithm
        self.context["alpha"] = alpha
        self.context["run_index"] = run_index


class TraceFormatError(ExperimentError):
    """Trace file does not have the expected columns"""
    error_code = "TRACE_FORMAT"

    def __init__(self, path: str, reason: str, **kwargs):
        super().__init__(f"Malformed trace {path}: {reason}", **kwargs)
        self.context["path"] = path


# ============================================================================
# Storage Errors
# ============================================================================

class StorageError(MabcsError):
    """Base class for flat-file storage errors"""
    category = ErrorCategory.STORAGE
    error_code = "STORAGE_ERROR"


class TraceIOError(StorageError):
    """Reading or writing a result file failed"""
    error_code = "TRACE_IO"

    def __init__(self, path: str, reason: str, **kwargs):
        super().__init__(f"I/O failure on {path}: {reason}", recoverable=True, **kwargs)
        self.context["path"] = path


# ============================================================================
# Configuration Errors
# ============================================================================

class ConfigurationError(MabcsError):
    """Base class for configuration errors"""
    category = ErrorCategory.CONFIGURATION
    error_code = "CONFIG_ERROR"

    def __init__(self, message: str, **kwargs):
        super().__init__(message, recoverable=False, **kwargs)


class MissingConfigError(ConfigurationError):
    """Required configuration missing"""
    error_code = "CONFIG_MISSING"

    def __init__(self, config_key: str, **kwargs):
        super().__init__(f"Missing required config: {config_key}", **kwargs)
        self.context["config_key"] = config_key


class InvalidConfigError(ConfigurationError):
    """Configuration value is invalid"""
    error_code = "CONFIG_INVALID"

    def __init__(self, config_key: str, value: Any, reason: str, **kwargs):
        super().__init__(
            f"Invalid config '{config_key}' = {value}: {reason}",
            **kwargs
        )
        self.context["config_key"] = config_key
        self.context["value"] = str(value)
        self.context["reason"] = reason
