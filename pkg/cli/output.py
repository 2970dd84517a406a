import io
import json
import logging
import math
import os
import tempfile
from typing import Any, Dict, List, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from pydantic import BaseModel  # noqa: E402

from eptrap.observables import ObservableSeries  # noqa: E402

logger = logging.getLogger(__name__)

BRANCH_COLUMNS = ["param", "branch", "re_z", "im_z", "gamma", "a_k", "r_k"]
FLOAT_FORMAT = "%.17g"

# =============================================================================
# SERIALIZATION
# =============================================================================


def jsonable(obj: Any) -> Any:
    """Plain JSON data for models, arrays and complex numbers (complex as [re, im])"""
    if isinstance(obj, BaseModel):
        return {name: jsonable(getattr(obj, name)) for name in type(obj).model_fields}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return jsonable(obj.item())
    if isinstance(obj, complex):
        return [jsonable(obj.real), jsonable(obj.imag)]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def to_json(obj: Any) -> str:
    return json.dumps(jsonable(obj), indent=2, ensure_ascii=False) + "\n"


def _csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def branches_csv(rows: Sequence[Dict[str, Any]]) -> str:
    return _csv(pd.DataFrame(list(rows), columns=BRANCH_COLUMNS))


def series_csv(series: ObservableSeries) -> str:
    model = series.provenance.get("model")
    kind = model.get("kind", "n/a") if isinstance(model, dict) else "n/a"
    header = f"# {series.name} [{series.units}] vs {series.x_label}; model {kind}\n"
    return header + _csv(pd.DataFrame({"x": series.x, "value": series.values}))


def series_svg(series: ObservableSeries) -> str:
    """Plain polyline plot of one series"""
    plt.rcParams["svg.hashsalt"] = "eptrap"
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(series.x, series.values, linewidth=1.2)
    ax.set_xlabel(series.x_label)
    ax.set_ylabel(f"{series.name} [{series.units}]")
    ax.set_title(series.name)
    ax.grid(True, linewidth=0.3)
    buffer = io.StringIO()
    fig.savefig(buffer, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buffer.getvalue()


# =============================================================================
# FILES
# =============================================================================


def atomic_write(path: str, text: str) -> str:
    """Write through a temporary file in the target directory, then rename"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".eptrap-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    logger.debug(f"🔍 Wrote {path}")
    return path


def write_series(directory: str, series: Sequence[ObservableSeries], svg: bool = False) -> List[str]:
    """One CSV (and optionally one SVG) per series"""
    written = []
    for s in series:
        written.append(atomic_write(os.path.join(directory, f"{s.name}.csv"), series_csv(s)))
        if svg:
            written.append(atomic_write(os.path.join(directory, f"{s.name}.svg"), series_svg(s)))
    return written


def write_json(path: str, obj: Any) -> str:
    return atomic_write(path, to_json(obj))


def write_branches(path: str, rows: Sequence[Dict[str, Any]]) -> str:
    return atomic_write(path, branches_csv(rows))
