import logging
import sys

from scenarios.base import ScenarioResult

logger = logging.getLogger(__name__)

STATUS_EMOJI = {
    "PASS": "✅",
    "FAIL": "❌",
    "SYSTEM_ERROR": "🚨",
}


def show_notification(message: str, type: str = "info"):
    """Print a user-facing line on stdout and mirror it to the log"""
    prefix = {"success": "✅", "error": "❌", "warning": "⚠️"}.get(type, "ℹ️")
    print(f"{prefix} {message}", file=sys.stdout)
    if type == "error":
        logger.error(f"❌ {message}")
    elif type == "warning":
        logger.warning(f"⚠️ {message}")
    else:
        logger.debug(f"{prefix} {message}")


def format_scenario_result(result: ScenarioResult) -> str:
    """One summary line plus one line per failed check"""
    lines = [f"{STATUS_EMOJI.get(result.status, '❓')} {result.scenario}: {result.message}"]
    for outcome in result.failed:
        lines.append(f"    ❌ {outcome.name}: {outcome.detail}")
    return "\n".join(lines)


def print_progress(current, total, current_job, description, icon):
    """Progress callback for multi-step runs"""
    print(f"[{current}/{total}] {icon} {current_job}: {description}", file=sys.stderr)
