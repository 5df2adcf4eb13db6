from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from anyonlt.errors import InvalidInputError
from anyonlt.methods.core_model import AnyonParams, Configuration, SquareDomain

FORMAT_VERSION = 1


def configuration_to_dict(config: Configuration, params: Optional[AnyonParams] = None) -> dict:
    doc = {
        "version": FORMAT_VERSION,
        "square": {"corner": list(config.domain.corner), "side": config.domain.side},
        "inside": config.inside.tolist(),
        "outside": config.outside.tolist(),
    }
    if params is not None:
        doc["alpha"] = params.alpha
        doc["radius"] = params.radius
    return doc


def configuration_from_dict(doc: dict) -> Tuple[Configuration, Optional[AnyonParams]]:
    """Inverse of configuration_to_dict; `alpha` and `radius` travel together or not at all."""
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise InvalidInputError(f"unsupported configuration version {version!r}")
    try:
        square = doc["square"]
        domain = SquareDomain(corner=tuple(square.get("corner", (0.0, 0.0))), side=float(square.get("side", 1.0)))
        config = Configuration(domain=domain, inside=doc["inside"], outside=doc.get("outside", []))
    except KeyError as exc:
        raise InvalidInputError(f"configuration is missing {exc.args[0]!r}") from None
    if ("alpha" in doc) != ("radius" in doc):
        raise InvalidInputError("configuration needs both alpha and radius, or neither")
    params = AnyonParams(alpha=float(doc["alpha"]), radius=float(doc["radius"])) if "alpha" in doc else None
    return config, params


def load_configuration(path: str | Path) -> Tuple[Configuration, Optional[AnyonParams]]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return configuration_from_dict(doc)


def dump_configuration(config: Configuration, path: str | Path, params: Optional[AnyonParams] = None) -> None:
    Path(path).write_text(json.dumps(configuration_to_dict(config, params), indent=2, sort_keys=True) + "\n")


def load_outside_points(path: str | Path) -> np.ndarray:
    """Y_m from a JSON list of [x, y] pairs, or from the "outside" entry of an object."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc.strerror}") from None
    if isinstance(doc, dict):
        if "outside" not in doc:
            raise InvalidInputError(f"{path}: object has no 'outside' entry")
        doc = doc["outside"]
    try:
        points = np.asarray(doc, dtype=float) if doc != [] else np.zeros((0, 2))
    except (TypeError, ValueError):
        points = np.zeros(0)
    if points.ndim != 2 or points.shape[1] != 2 or not np.all(np.isfinite(points)):
        raise InvalidInputError(f"{path}: expected a list of finite [x, y] pairs")
    return points
