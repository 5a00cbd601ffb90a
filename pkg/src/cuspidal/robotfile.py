"""Robot spec files: named D-H parameter sets in JSON."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .dh import DhParams, validate_params
from .errors import CuspidalError, RobotFileSyntaxError, RobotValidationError

_ENTRY_KEYS = {"d", "a", "alpha"}


@dataclass(frozen=True)
class RobotSpecFile:
    """Parsed robot file: an ordered name -> DhParams mapping."""

    robots: dict

    def get(self, name: str | None) -> tuple[str, DhParams]:
        if name is None:
            if len(self.robots) == 1:
                return next(iter(self.robots.items()))
            raise RobotValidationError(
                "<unnamed>", f"file defines {len(self.robots)} robots; pass --name "
                             f"(one of: {', '.join(self.robots)})")
        if name not in self.robots:
            raise RobotValidationError(name, "not found in robot file")
        return name, self.robots[name]


def _as_triple(name: str, key: str, value) -> list:
    if (not isinstance(value, list) or len(value) != 3
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise RobotValidationError(name, f"{key} must be a list of 3 numbers")
    if not all(math.isfinite(float(v)) for v in value):
        raise RobotValidationError(name, f"{key} must be finite")
    return [float(v) for v in value]


def parse_robot_file(path: str) -> RobotSpecFile:
    """Parse and validate a robot spec file.

    Angles are radians; alpha[2] must be exactly 0; unknown keys are
    rejected so typos cannot silently change a robot.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RobotFileSyntaxError(path, exc.lineno, exc.msg) from exc
    if not isinstance(doc, dict) or not doc:
        raise RobotFileSyntaxError(path, 1, "expected a non-empty object of robot entries")
    robots = {}
    for name, entry in doc.items():
        if not isinstance(entry, dict):
            raise RobotValidationError(name, "entry must be an object")
        unknown = set(entry) - _ENTRY_KEYS
        if unknown:
            raise RobotValidationError(name, f"unknown keys: {', '.join(sorted(unknown))}")
        missing = _ENTRY_KEYS - set(entry)
        if missing:
            raise RobotValidationError(name, f"missing keys: {', '.join(sorted(missing))}")
        d = _as_triple(name, "d", entry["d"])
        a = _as_triple(name, "a", entry["a"])
        alpha = _as_triple(name, "alpha", entry["alpha"])
        if alpha[2] != 0.0:
            raise RobotValidationError(name, "alpha[2] must be 0 (it does not affect position)")
        params = DhParams.from_arrays(d, a, alpha)
        try:
            validate_params(params)
        except CuspidalError as exc:
            raise RobotValidationError(name, str(exc)) from exc
        robots[name] = params
    return RobotSpecFile(robots)
