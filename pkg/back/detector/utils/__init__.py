from back.detector.utils.enums import (
    BaseEnum,
    Label,
    CouplerVariant,
    WellLabel,
    JpmLevel,
    AxisScale,
    Subcommand,
)

__all__ = [
    "BaseEnum",
    "Label",
    "CouplerVariant",
    "WellLabel",
    "JpmLevel",
    "AxisScale",
    "Subcommand",
]
