"""Serialization and file-format helpers for the experiment harness.

Conventions kept deliberately boring:

* JSON documents carry a top-level ``{"version": 1}`` stamp and loading
  rejects versions we do not know how to read.
* Floats are written with ``repr``, the shortest string that round-trips
  to the identical double, so repeated runs produce byte-identical files.
* Configs are TOML first (JSON accepted for tooling that prefers it).
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path
from typing import Iterable, Sequence, Union

from ..errors import ParseError
from ..moe_core import MoeNetwork, moe_network_from_dict, moe_network_to_dict
from ..nn_core import FfnNetwork, ffn_from_dict, ffn_to_dict

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised only on 3.10
    import tomli as tomllib

FORMAT_VERSION = 1

CSV_HEADER = ("m", "error", "active_params", "construction", "target", "seed")

AnyNetwork = Union[MoeNetwork, FfnNetwork]


def save_network(path, net: AnyNetwork) -> Path:
    """Write a routed or dense network to ``path`` as versioned JSON."""
    if isinstance(net, MoeNetwork):
        doc = {"version": FORMAT_VERSION, "kind": "moe", "network": moe_network_to_dict(net)}
    elif isinstance(net, FfnNetwork):
        doc = {"version": FORMAT_VERSION, "kind": "ffn", "network": ffn_to_dict(net)}
    else:
        raise TypeError(f"cannot serialize {type(net).__name__}")
    return dump_json(path, doc)


def load_network(path) -> AnyNetwork:
    """Inverse of :func:`save_network`; raises ``ParseError`` on bad input."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "version" not in doc:
        raise ParseError(f"{path}: missing version stamp")
    if doc["version"] != FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported format version {doc['version']!r}")
    kind = doc.get("kind")
    if kind == "moe":
        return moe_network_from_dict(doc["network"])
    if kind == "ffn":
        return ffn_from_dict(doc["network"])
    raise ParseError(f"{path}: unknown network kind {kind!r}")


def _normalize_floats(obj):
    # json.dump writes repr-equivalent shortest strings for Python floats
    # already; this pass only converts numpy scalars/arrays that may have
    # leaked into report dicts.
    import numpy as np

    if isinstance(obj, dict):
        return {k: _normalize_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize_floats(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_normalize_floats(v) for v in obj.tolist()]
    return obj


def dump_json(path, obj: dict) -> Path:
    """Write ``obj`` as deterministic JSON (sorted keys, 2-space indent)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(_normalize_floats(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_config(path) -> dict:
    """Load an experiment config from a TOML (preferred) or JSON file."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"config file not found: {path}")
    suffix = path.suffix.lower()
    if suffix == ".toml":
        with path.open("rb") as fh:
            try:
                return tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ParseError(f"{path}: {exc}") from None
    if suffix == ".json":
        with path.open("r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise ParseError(f"{path}: config root must be a table/object")
        return data
    raise ParseError(f"{path}: unsupported config extension {suffix!r} (use .toml or .json)")


def write_sweep_csv(path, rows: Iterable[Sequence]) -> Path:
    """Write width-sweep rows under the canonical header.

    Each row is ``(m, error, active_params, construction, target, seed)``.
    Floats go through ``repr`` so identical runs yield identical bytes.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            m, error, active, construction, target, seed = row
            writer.writerow(
                [int(m), repr(float(error)), int(active), str(construction), str(target), int(seed)]
            )
    return path


def read_sweep_csv(path) -> list[dict]:
    """Read rows written by :func:`write_sweep_csv` back into dicts."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != CSV_HEADER:
            raise ParseError(f"{path}: unexpected CSV header {header!r}")
        out = []
        for row in reader:
            if len(row) != len(CSV_HEADER):
                raise ParseError(f"{path}: malformed row {row!r}")
            out.append(
                {
                    "m": int(row[0]),
                    "error": float(row[1]),
                    "active_params": int(row[2]),
                    "construction": row[3],
                    "target": row[4],
                    "seed": int(row[5]),
                }
            )
    return out
