"""Config files, telemetry export, SVG plots and the command-line interface."""

from .config import PRESETS, config_from_dict, config_to_dict, dumps_config, load_config, load_preset, loads_config
from .main import main
from .telemetry_io import CSV_COLUMNS, read_telemetry_csv, write_telemetry_csv

__all__ = [
    "PRESETS",
    "CSV_COLUMNS",
    "config_from_dict",
    "config_to_dict",
    "dumps_config",
    "load_config",
    "load_preset",
    "loads_config",
    "main",
    "read_telemetry_csv",
    "write_telemetry_csv",
]
