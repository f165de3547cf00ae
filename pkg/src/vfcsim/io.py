"""Output files: atomic writes, run manifests and simulation reports."""

from __future__ import annotations

import json
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import __version__
from .engine import SERIES_FIELDS, SimResult

TIMESERIES_HEADER = "replicate," + ",".join(SERIES_FIELDS)


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def lines_text(lines: Iterable[str]) -> str:
    return "".join(line + "\n" for line in lines)


def timeseries_csv(results: Sequence[SimResult]) -> str:
    out = [TIMESERIES_HEADER]
    for res in results:
        for step, avg_apps, avg_vfc, new, own, collab, sat in res.series:
            out.append(f"{res.replicate},{step},{avg_apps!r},{avg_vfc!r},{new},{own},{collab},{sat}")
    return "\n".join(out) + "\n"


def _now() -> float:
    # reproducible builds convention: pin timestamps when requested
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    return float(epoch) if epoch else time.time()


def _iso(ts: float) -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(ts))


@dataclass
class RunManifest:
    command: str
    config: Mapping
    seeds: Sequence[int]
    outputs: list[str] = field(default_factory=list)
    tool_version: str = __version__
    started: str = field(default_factory=lambda: _iso(_now()))
    finished: str | None = None

    def finish(self, path: str | os.PathLike) -> None:
        self.finished = _iso(_now())
        atomic_write_text(path, dumps_json(asdict(self)))
