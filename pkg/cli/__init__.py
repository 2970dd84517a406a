"""Command handlers for the eptrap command line"""

from .commands import (
    cmd_eig,
    cmd_sweep,
    cmd_ep_find,
    cmd_ep_cycle,
    cmd_observe,
    cmd_scenario,
    cmd_selftest,
    write_bundle,
)
from .common import show_notification, format_scenario_result, print_progress
from .output import jsonable, to_json, atomic_write, branches_csv, series_csv, series_svg
from .selftest import SelfTestRunner

__all__ = [
    "cmd_eig",
    "cmd_sweep",
    "cmd_ep_find",
    "cmd_ep_cycle",
    "cmd_observe",
    "cmd_scenario",
    "cmd_selftest",
    "write_bundle",
    "show_notification",
    "format_scenario_result",
    "print_progress",
    "jsonable",
    "to_json",
    "atomic_write",
    "branches_csv",
    "series_csv",
    "series_svg",
    "SelfTestRunner",
]
