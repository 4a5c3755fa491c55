"""CSV/JSON writers (atomic, 17 significant digits) and run manifests."""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


@contextmanager
def atomic_open(path, mode="w"):
    """Write to a temporary sibling and rename over ``path`` on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode, encoding="utf-8", newline="") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def write_csv(path, header, rows) -> None:
    with atomic_open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def to_jsonable(obj):
    """Plain JSON types; NaN becomes null and infinities become ``"inf"``/``"-inf"``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, obj) -> None:
    with atomic_open(path) as fh:
        json.dump(to_jsonable(obj), fh, indent=2)
        fh.write("\n")


def write_table(out_dir, stem, header, rows, format="csv") -> Path:
    """Write a table as ``stem.csv`` or, for ``format='json'``, a list of records."""
    out_dir = Path(out_dir)
    if format == "json":
        path = out_dir / f"{stem}.json"
        write_json(path, [dict(zip(header, row)) for row in rows])
    else:
        path = out_dir / f"{stem}.csv"
        write_csv(path, header, rows)
    return path


@dataclass(frozen=True)
class RunManifest:
    command: str
    config: dict
    seed: int
    tool_version: str = __version__
    timestamp: str = ""

    @classmethod
    def create(cls, command, config, seed) -> "RunManifest":
        stamp = datetime.now(timezone.utc).replace(microsecond=0).isoformat()
        return cls(command, dict(config), int(seed), __version__, stamp)

    def to_dict(self) -> dict:
        return asdict(self)

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / "manifest.json"
        write_json(path, self.to_dict())
        return path

    @classmethod
    def load(cls, path) -> "RunManifest":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(
            command=data["command"],
            config=data.get("config", {}),
            seed=int(data.get("seed", 0)),
            tool_version=data.get("tool_version", ""),
            timestamp=data.get("timestamp", ""),
        )
