from ._semtrack import (
    BoundingBox,
    DetectionRecord,
    FusionModel,
    IoError,
    ValidationError,
    degrade_sequence,
    evaluate,
    hungarian,
    iou,
    parse_mot,
    read_mot,
    synth,
    track,
    write_mot,
)

__all__ = [
    "BoundingBox",
    "DetectionRecord",
    "FusionModel",
    "IoError",
    "ValidationError",
    "degrade_sequence",
    "evaluate",
    "hungarian",
    "iou",
    "parse_mot",
    "read_mot",
    "synth",
    "track",
    "write_mot",
]
