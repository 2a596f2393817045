"""JSON ingestion for channels and run configs, with field-level diagnostics.

Channel files::

    {"w_atoms": [{"label": "a", "coords": [0.5]}, ...],
     "s_atoms": [{"label": "x", "coords": [0.0]}, ...],
     "joint": [[...], ...]}

``joint`` is row-major with one row per W atom. A file may instead hold
``{"channels": [<channel>, ...]}`` (one channel per sample index) or a
super-sample channel::

    {"x_atoms": [...], "w_atoms": [...],
     "sstar": [[[i0, i1], ...], ...],        # (n_sstar, m, 2) indices into x_atoms
     "joint": [[[...], ...], ...]}           # (n_w, n_sstar, 2^m)

or ``{"supersamples": [<super-sample channel with m = 1>, ...]}``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .distributions import JointChannel, SuperSampleChannel
from .errors import ChainBoundsError, ConfigError


def _fail(where: str, msg: str) -> ConfigError:
    return ConfigError("PARSE_ERROR", f"{where}: {msg}")


def read_json(path: str | Path) -> Any:
    """Parse a JSON file; syntax errors report the line and column."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("IO_ERROR", f"{path}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("PARSE_ERROR", f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        if x in ("inf", "+inf"):
            return math.inf
        raise _fail(where, f"expected a number, got {json.dumps(x)}")
    return float(x)


def _atoms(data: dict, key: str, where: str) -> tuple[list[str], np.ndarray | None]:
    if key not in data:
        raise _fail(where, f"missing field {key!r}")
    atoms = data[key]
    if not isinstance(atoms, list) or not atoms:
        raise _fail(f"{where}.{key}", "expected a non-empty list of atoms")
    labels, coords = [], []
    for i, atom in enumerate(atoms):
        here = f"{where}.{key}[{i}]"
        if not isinstance(atom, dict):
            raise _fail(here, "expected an object with 'label' and optional 'coords'")
        if "label" not in atom:
            raise _fail(here, "missing field 'label'")
        labels.append(str(atom["label"]))
        c = atom.get("coords")
        if c is None:
            coords.append(None)
            continue
        if not isinstance(c, list):
            c = [c]
        coords.append([_number(v, f"{here}.coords[{j}]") for j, v in enumerate(c)])
    present = [c is not None for c in coords]
    if any(present) and not all(present):
        raise _fail(f"{where}.{key}[{present.index(False)}]", "coords missing while other atoms have them")
    if not any(present):
        return labels, None
    dims = {len(c) for c in coords}
    if len(dims) != 1:
        raise _fail(f"{where}.{key}", f"coords have mixed dimensions {sorted(dims)}")
    return labels, np.asarray(coords, dtype=float)


def _matrix(values, shape: tuple[int, ...], where: str) -> np.ndarray:
    def walk(v, depth, path):
        if depth == len(shape):
            return _number(v, path)
        if not isinstance(v, list) or len(v) != shape[depth]:
            size = len(v) if isinstance(v, list) else "a scalar"
            raise _fail(path, f"expected a list of length {shape[depth]}, got {size}")
        return [walk(x, depth + 1, f"{path}[{i}]") for i, x in enumerate(v)]

    return np.asarray(walk(values, 0, where), dtype=float)


def _wrap(fn, where: str):
    try:
        return fn()
    except ChainBoundsError as exc:
        if exc.code == "PARSE_ERROR":
            raise
        raise ConfigError(exc.code, f"{where}: {exc.message}") from None


def channel_from_dict(data: dict, where: str = "$") -> JointChannel:
    if not isinstance(data, dict):
        raise _fail(where, "expected an object")
    w_labels, w_coords = _atoms(data, "w_atoms", where)
    s_labels, s_coords = _atoms(data, "s_atoms", where)
    if "joint" not in data:
        raise _fail(where, "missing field 'joint'")
    joint = _matrix(data["joint"], (len(w_labels), len(s_labels)), f"{where}.joint")
    return _wrap(lambda: JointChannel(w_labels, s_labels, joint, w_coords, s_coords), where)


def supersample_from_dict(data: dict, where: str = "$") -> SuperSampleChannel:
    if not isinstance(data, dict):
        raise _fail(where, "expected an object")
    x_labels, x_coords = _atoms(data, "x_atoms", where)
    w_labels, w_coords = _atoms(data, "w_atoms", where)
    for key in ("sstar", "joint"):
        if key not in data:
            raise _fail(where, f"missing field {key!r}")
    raw = data["sstar"]
    if not isinstance(raw, list) or not raw or not isinstance(raw[0], list):
        raise _fail(f"{where}.sstar", "expected a list of m index pairs per super-sample")
    m = len(raw[0])
    sstar = _matrix(raw, (len(raw), m, 2), f"{where}.sstar")
    if np.any(sstar != np.round(sstar)):
        raise _fail(f"{where}.sstar", "indices must be integers")
    joint = _matrix(data["joint"], (len(w_labels), len(raw), 2**m), f"{where}.joint")
    return _wrap(
        lambda: SuperSampleChannel(x_labels, sstar.astype(int), w_labels, joint, x_coords, w_coords), where
    )


def load_channel_file(path: str | Path):
    """Return ``("channel", JointChannel)``, ``("channels", [...])``, ``("supersample", ssc)`` or ``("supersamples", [...])``."""
    data = read_json(path)
    where = str(path)
    if not isinstance(data, dict):
        raise _fail(where, "top level must be an object")
    if "channels" in data:
        items = data["channels"]
        if not isinstance(items, list) or not items:
            raise _fail(f"{where}.channels", "expected a non-empty list")
        return "channels", [channel_from_dict(c, f"{where}.channels[{i}]") for i, c in enumerate(items)]
    if "supersamples" in data:
        items = data["supersamples"]
        if not isinstance(items, list) or not items:
            raise _fail(f"{where}.supersamples", "expected a non-empty list")
        return "supersamples", [supersample_from_dict(c, f"{where}.supersamples[{i}]") for i, c in enumerate(items)]
    if "sstar" in data:
        return "supersample", supersample_from_dict(data, where)
    return "channel", channel_from_dict(data, where)


def _atoms_out(labels, coords) -> list[dict]:
    out = []
    for i, lab in enumerate(labels):
        atom: dict = {"label": lab}
        if coords is not None:
            atom["coords"] = [float(v) for v in coords[i]]
        out.append(atom)
    return out


def channel_to_dict(ch: JointChannel) -> dict:
    return {
        "w_atoms": _atoms_out(ch.w_labels, ch.w_coords),
        "s_atoms": _atoms_out(ch.s_labels, ch.s_coords),
        "joint": ch.joint.tolist(),
    }


def write_channel_file(ch: JointChannel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(channel_to_dict(ch)) + "\n")


def load_config(path: str | Path | None) -> dict:
    """A flat JSON object of option values; ``None`` gives an empty config."""
    if path is None:
        return {}
    data = read_json(path)
    if not isinstance(data, dict):
        raise _fail(str(path), "config must be a JSON object")
    return data
