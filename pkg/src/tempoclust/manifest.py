"""Flat key-value run manifests driving the pipeline.

Format: one ``key = value`` pair per line; ``#`` starts a comment.
Archetype keys for the simulate stage use dotted names, e.g.
``archetype.early.count = 20``.  The full key reference lives in the
project README.
"""

from __future__ import annotations

import logging
from pathlib import Path

from .synth import ArchetypeSpec

logger = logging.getLogger(__name__)

_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}

# key -> (type tag, default); defaults of None mean "required where used"
KNOWN_KEYS: dict[str, tuple[str, object]] = {
    "events_csv": ("path", None),
    "catalog_csv": ("path", None),
    "grades_csv": ("path", None),
    "labels_csv": ("path", None),
    "event_format": ("str", "completion"),
    "course_start": ("float", 0.0),
    "course_end": ("float", None),
    "missing_policy": ("str", "sentinel_end_of_course"),
    "sigma_rule": ("str", "median_distance"),
    "sigma2": ("float", None),
    "sparsifier": ("str", "rmst"),
    "rmst_gamma": ("float", 0.5),
    "rmst_k": ("int", 1),
    "knn_k": ("int", 10),
    "laplacian": ("str", "combinatorial"),
    "t_min": ("float", 1e-2),
    "t_max": ("float", 1e2),
    "n_times": ("int", 100),
    "ell": ("int", 100),
    "linearised": ("bool", False),
    "min_plateau_decades": ("float", 0.5),
    "vi_dip_quantile": ("float", 0.25),
    "vi_block_max": ("float", 0.05),
    "level_tol": ("float", 0.5),
    "gp_axis": ("str", "task_index"),
    "gp_max_tasks": ("int", 60),
    "gp_restarts": ("int", 2),
    "run_gpr": ("bool", True),
    "grade_low": ("float", 60.0),
    "grade_high": ("float", 70.0),
    "seed": ("int", 0),
    "output_dir": ("path", None),
    "synth_tasks": ("int", 240),
    "synth_span": ("float", 70.0),
}

_ARCHETYPE_FIELDS = {
    "count": int,
    "offset": float,
    "jitter": float,
    "skip_prob": float,
    "skip_shared": float,
    "binge_block": int,
    "binge_gap": float,
    "ordered": None,  # bool, handled separately
}


class ManifestError(ValueError):
    pass


class RunManifest:
    """Typed view over the flat key-value pairs of a manifest file."""

    def __init__(self, values: dict[str, str], base_dir: Path | None = None):
        self.values = dict(values)
        self.base_dir = Path(base_dir) if base_dir else Path.cwd()
        for key in self.values:
            if key not in KNOWN_KEYS and not key.startswith("archetype."):
                logger.warning("manifest: unknown key %r (ignored)", key)

    @classmethod
    def from_file(cls, path) -> "RunManifest":
        path = Path(path)
        values: dict[str, str] = {}
        try:
            text = path.read_text()
        except OSError as exc:
            raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ManifestError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not key:
                raise ManifestError(f"{path}:{lineno}: empty key")
            if key in values:
                raise ManifestError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = value
        return cls(values, base_dir=path.parent)

    def _raw(self, key: str):
        if key in self.values:
            return self.values[key]
        if key in KNOWN_KEYS:
            return KNOWN_KEYS[key][1]
        return None

    def get_str(self, key: str, default: str | None = None) -> str | None:
        raw = self._raw(key)
        return default if raw is None else str(raw)

    def get_float(self, key: str, default: float | None = None) -> float | None:
        raw = self._raw(key)
        if raw is None:
            return default
        try:
            return float(raw)
        except (TypeError, ValueError):
            raise ManifestError(f"manifest key {key!r}: expected a number, got {raw!r}")

    def get_int(self, key: str, default: int | None = None) -> int | None:
        raw = self._raw(key)
        if raw is None:
            return default
        try:
            return int(str(raw))
        except (TypeError, ValueError):
            raise ManifestError(f"manifest key {key!r}: expected an integer, got {raw!r}")

    def get_bool(self, key: str, default: bool = False) -> bool:
        raw = self._raw(key)
        if raw is None:
            return default
        if isinstance(raw, bool):
            return raw
        try:
            return _BOOL[str(raw).lower()]
        except KeyError:
            raise ManifestError(f"manifest key {key!r}: expected a boolean, got {raw!r}")

    def get_path(self, key: str) -> Path | None:
        raw = self._raw(key)
        if raw is None:
            return None
        p = Path(str(raw))
        return p if p.is_absolute() else self.base_dir / p

    def require_path(self, key: str) -> Path:
        p = self.get_path(key)
        if p is None:
            raise ManifestError(f"manifest key {key!r} is required")
        return p

    def seed(self) -> int:
        return self.get_int("seed", 0)

    def archetypes(self) -> list[ArchetypeSpec]:
        """ArchetypeSpec list from dotted ``archetype.<name>.<field>`` keys."""
        grouped: dict[str, dict[str, str]] = {}
        order: list[str] = []
        for key, value in self.values.items():
            if not key.startswith("archetype."):
                continue
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in _ARCHETYPE_FIELDS:
                raise ManifestError(f"malformed archetype key {key!r}")
            _, name, fieldname = parts
            if name not in grouped:
                grouped[name] = {}
                order.append(name)
            grouped[name][fieldname] = value
        specs: list[ArchetypeSpec] = []
        for name in order:
            fields = grouped[name]
            kwargs: dict[str, object] = {"name": name}
            for fieldname, raw in fields.items():
                caster = _ARCHETYPE_FIELDS[fieldname]
                if caster is None:
                    kwargs[fieldname] = _BOOL[str(raw).lower()]
                else:
                    kwargs[fieldname] = caster(raw)
            spec = ArchetypeSpec(**kwargs)
            spec.validate()
            specs.append(spec)
        return specs

    def config_digest_text(self, keys: list[str]) -> str:
        """Stable text of selected effective values, for cache digests."""
        parts = []
        for key in sorted(keys):
            parts.append(f"{key}={self._raw(key)!r}")
        return ";".join(parts)
