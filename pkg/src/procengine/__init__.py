"""Engine-order analysis, timbre tables and annotated engine sound synthesis."""

__version__ = "0.1.0"

from .core import AudioBuffer, ControlTrace, FrameSpec, segment_frames  # noqa: E402
from .errors import (DomainError, EngineError, FormatError, InputError,  # noqa: E402
                     ParameterError, RangeError, StorageError)
from .orders import AnalysisConfig, analyze_frame  # noqa: E402
from .repitch import resample_to_constant_pitch  # noqa: E402
from .synth import SynthesisParams, synthesize  # noqa: E402
from .table import TimbreTable, build_table, load_table, save_table  # noqa: E402

__all__ = [
    "AnalysisConfig", "AudioBuffer", "ControlTrace", "DomainError", "EngineError",
    "FormatError", "FrameSpec", "InputError", "ParameterError", "RangeError",
    "StorageError", "SynthesisParams", "TimbreTable", "analyze_frame", "build_table",
    "load_table", "resample_to_constant_pitch", "save_table", "segment_frames",
    "synthesize",
]
