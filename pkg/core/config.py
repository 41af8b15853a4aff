"""Settings loader for tolerances, grids and figure parameters.

Loads ``config/defaults.yaml``, optionally deep-merges an overlay file on
top of it, and applies the ``LAME_SUSY_TOL`` scale factor to every
tolerance.  Library functions never read settings themselves; the CLI
resolves values here and passes them down explicitly.
"""

from __future__ import annotations

import logging
import math
import os
from copy import deepcopy
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from core.errors import DomainError

logger = logging.getLogger(__name__)

# ── Constants ──────────────────────────────────────────────────────────

_PROJECT_ROOT = Path(__file__).resolve().parent.parent
_DEFAULT_CONFIG_PATH = _PROJECT_ROOT / "config" / "defaults.yaml"

TOL_ENV_VAR = "LAME_SUSY_TOL"


def _parse_scale(raw: Optional[str]) -> float:
    if raw is None or not raw.strip():
        return 1.0
    try:
        scale = float(raw)
    except ValueError:
        raise DomainError(f"{TOL_ENV_VAR} must be a positive number, got '{raw}'") from None
    if not (math.isfinite(scale) and scale > 0.0):
        raise DomainError(f"{TOL_ENV_VAR} must be a positive number, got '{raw}'")
    return scale


# ── Settings ───────────────────────────────────────────────────────────


class Settings:
    """Typed access to the YAML defaults.

    Parameters
    ----------
    config_path : str or Path, optional
        Base YAML file.  Defaults to ``config/defaults.yaml`` relative to
        the project root.
    overlay_path : str or Path or None, optional
        YAML file deep-merged on top of the base configuration.
    env : mapping, optional
        Environment used to read ``LAME_SUSY_TOL`` (``os.environ`` by
        default).

    Raises
    ------
    FileNotFoundError
        If a requested configuration file does not exist.
    ValueError
        If a file does not hold a YAML mapping.
    """

    def __init__(
        self,
        config_path: str | Path | None = None,
        overlay_path: str | Path | None = None,
        env: Optional[Mapping[str, str]] = None,
    ) -> None:
        self._config_path = Path(config_path) if config_path else _DEFAULT_CONFIG_PATH
        self._raw: dict[str, Any] = self._load(self._config_path)

        if overlay_path is not None:
            self._apply_overlay(Path(overlay_path))

        env = os.environ if env is None else env
        self.tolerance_scale = _parse_scale(env.get(TOL_ENV_VAR))
        if self.tolerance_scale != 1.0:
            logger.info("Scaling all tolerances by %s=%g", TOL_ENV_VAR, self.tolerance_scale)
        logger.debug("Settings loaded from %s", self._config_path)

    # ── Loading / merging ──────────────────────────────────────────

    @staticmethod
    def _load(path: Path) -> dict[str, Any]:
        if not path.is_file():
            raise FileNotFoundError(f"Configuration not found: {path}")
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"Expected a YAML mapping at the top level in {path}")
        return data

    def _apply_overlay(self, overlay_path: Path) -> None:
        overlay = self._load(overlay_path)
        self._raw = self._deep_merge(self._raw, overlay)
        logger.info("Applied configuration overlay from %s", overlay_path)

    @staticmethod
    def _deep_merge(base: dict, overlay: dict) -> dict:
        """Recursively merge *overlay* into a copy of *base*; overlay wins."""
        result = deepcopy(base)
        for key, value in overlay.items():
            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = Settings._deep_merge(result[key], value)
            else:
                result[key] = deepcopy(value)
        return result

    # ── Accessors ──────────────────────────────────────────────────

    def section(self, name: str) -> dict[str, Any]:
        """Return a copy of a top-level section (empty if absent)."""
        value = self._raw.get(name, {})
        return deepcopy(value) if isinstance(value, dict) else {}

    def tolerance(self, name: str) -> float:
        """Tolerance *name*, scaled by ``LAME_SUSY_TOL``."""
        tolerances = self._raw.get("tolerances", {})
        if name not in tolerances:
            raise KeyError(f"Unknown tolerance '{name}'")
        return float(tolerances[name]) * self.tolerance_scale

    def grid(self, name: str) -> int:
        grids = self._raw.get("grids", {})
        if name not in grids:
            raise KeyError(f"Unknown grid setting '{name}'")
        return int(grids[name])

    def figure(self, name: str) -> dict[str, Any]:
        """Parameters of a named figure (``figure1`` or ``figure2``)."""
        figures = self._raw.get("figures", {})
        if name not in figures:
            raise DomainError(
                f"Unknown figure '{name}'; available: {', '.join(sorted(figures))}"
            )
        return deepcopy(figures[name])

    @property
    def figure_names(self) -> list[str]:
        return sorted(self._raw.get("figures", {}))

    @property
    def log_file(self) -> Path:
        section = self.section("logging")
        return Path(section.get("directory", "logs")) / section.get("file", "lame-susy.log")
