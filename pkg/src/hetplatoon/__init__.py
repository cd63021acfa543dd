"""Platoon-forming access control for an intersection with cars and trucks."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    CAR,
    TRUCK,
    ScenarioConfig,
    SeparationTable,
    VehicleKind,
    VehicleParams,
    build_separation_table,
    load_config,
    tau_cross_lane,
    tau_same_lane,
)
