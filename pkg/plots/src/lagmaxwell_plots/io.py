"""Readers for the artifacts a run directory contains.

These parse the documented file formats directly so the plots package works on
any run directory without importing the solver:

* residual CS: header ``iteration,relative_residual``, one row per iteration,
  row 0 being the initial guess;
* field PGM: plain ASCII ``P2``, maxval 255, top image row first;
* ``manifest.json``: JSON object carrying ``scenario_id`` and the scenario
  config snapshot.

All failures raise :class:`MalformedInputError` (a ``ValueError``) naming the
offending file; mixing files from different scenarios raises
:class:`MixedScenarioError`.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class MalformedInputError(ValueError):
    """An input file is missing, unparseable, or violates its format."""


class MixedScenarioError(ValueError):
    """Input files come from more than one scenario (manifest ids differ)."""


_RESIDUAL_NAME = re.compile(r"^residual_(?P<mode>[a-z_]+)_(?P<frac>\d+\.\d{4})pi\.csv$")
_FIELD_NAME = re.compile(r"^field_magnitude_(?P<frac>\d+\.\d{4})pi\.pgm$")


@dataclass(frozen=True)
class ResidualCurve:
    """One residual history plus the identity parsed from its filename."""

    path: Path
    mode: str
    alpha_token: str  # e.g. "0.0500pi"
    alpha: float      # in radians
    history: np.ndarray


@dataclass(frozen=True)
class FieldDump:
    path: Path
    alpha_token: str
    alpha: float
    pixels: np.ndarray  # (ny, nx) ints, row 0 = bottom of the domain
    manifest: dict


def read_history(path) -> np.ndarray:
    """Parse a residual CSV into a 1-D float array."""
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise MalformedInputError(f"{path}: cannot read ({exc})") from exc
    lines = raw.splitlines()
    if not lines or lines[0].strip().replace(" ", "") != "iteration,relative_residual":
        head = lines[0].strip() if lines else "<empty>"
        raise MalformedInputError(f"{path}: unexpected residual CSV header {head!r}")
    vals = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise MalformedInputError(f"{path}:{ln}: expected 'iteration,value'")
        try:
            vals.append(float(parts[1]))
        except ValueError as exc:
            raise MalformedInputError(f"{path}:{ln}: bad residual value {parts[1]!r}") from exc
    if not vals:
        raise MalformedInputError(f"{path}: residual CSV has no data rows")
    hist = np.asarray(vals, dtype=float)
    if not np.all(np.isfinite(hist)):
        raise MalformedInputError(f"{path}: residual history contains non-finite values")
    return hist


def read_pgm(path) -> np.ndarray:
    """Parse a plain-ASCII (P2) PGM.  Returns ints with row 0 = bottom."""
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise MalformedInputError(f"{path}: cannot read ({exc})") from exc
    # strip comments, then tokenize
    body = re.sub(r"#[^\n]*", " ", raw)
    tokens = body.split()
    if not tokens or tokens[0] != "P2":
        magic = tokens[0] if tokens else "<empty>"
        raise MalformedInputError(f"{path}: expected plain PGM magic 'P2', got {magic!r}")
    if len(tokens) < 4:
        raise MalformedInputError(f"{path}: truncated PGM header")
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        pix = np.asarray([int(t) for t in tokens[4:]], dtype=int)
    except ValueError as exc:
        raise MalformedInputError(f"{path}: non-integer PGM token") from exc
    if w <= 0 or h <= 0:
        raise MalformedInputError(f"{path}: bad PGM dimensions {w}x{h}")
    if maxval != 255:
        raise MalformedInputError(f"{path}: expected maxval 255, got {maxval}")
    if pix.size != w * h:
        raise MalformedInputError(
            f"{path}: expected {w * h} pixels, found {pix.size}")
    if pix.min(initial=0) < 0 or pix.max(initial=0) > maxval:
        raise MalformedInputError(f"{path}: pixel value out of range [0, {maxval}]")
    # file stores the top row first; flip so row 0 is the bottom of the domain
    return pix.reshape(h, w)[::-1]


def read_manifest(run_dir) -> dict:
    path = Path(run_dir) / "manifest.json"
    try:
        man = json.loads(path.read_text())
    except OSError as exc:
        raise MalformedInputError(f"{path}: manifest missing ({exc})") from exc
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"{path}: manifest is not valid JSON ({exc})") from exc
    if not isinstance(man, dict) or not isinstance(man.get("scenario_id"), str):
        raise MalformedInputError(f"{path}: manifest lacks a scenario_id")
    return man


def scenario_id_of(artifact_path) -> str:
    """Scenario id from the manifest sitting next to an artifact file."""
    return read_manifest(Path(artifact_path).parent)["scenario_id"]


def require_single_scenario(paths) -> str:
    """All artifacts must belong to one scenario; returns its id."""
    ids = {}
    for p in paths:
        ids.setdefault(scenario_id_of(p), []).append(Path(p).name)
    if len(ids) > 1:
        listing = "; ".join(f"{sid}: {', '.join(names)}" for sid, names in sorted(ids.items()))
        raise MixedScenarioError(f"inputs span {len(ids)} scenarios ({listing})")
    return next(iter(ids))


def _alpha_from_token(frac: str) -> float:
    return float(frac) * np.pi


def load_residual_curve(path) -> ResidualCurve:
    path = Path(path)
    m = _RESIDUAL_NAME.match(path.name)
    if m is None:
        raise MalformedInputError(
            f"{path}: not a residual CSV name (expected residual_<mode>_<angle>pi.csv)")
    token = m.group("frac") + "pi"
    return ResidualCurve(path=path, mode=m.group("mode"), alpha_token=token,
                         alpha=_alpha_from_token(m.group("frac")),
                         history=read_history(path))


def load_field_dump(path) -> FieldDump:
    path = Path(path)
    m = _FIELD_NAME.match(path.name)
    if m is None:
        raise MalformedInputError(
            f"{path}: not a field dump name (expected field_magnitude_<angle>pi.pgm)")
    token = m.group("frac") + "pi"
    return FieldDump(path=path, alpha_token=token,
                     alpha=_alpha_from_token(m.group("frac")),
                     pixels=read_pgm(path),
                     manifest=read_manifest(path.parent))
