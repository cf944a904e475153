"""
Centralized paths, config loading, and parameter validation.
Single source of truth -- all modules import from here.
"""
import json
import logging
import os
import stat
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

from src.utils import limits

log = logging.getLogger("config")


def get_real_user_home():
    """Return the real user's home directory, even under sudo.

    When running with ``sudo``, ``os.path.expanduser("~")`` returns
    ``/root`` instead of the invoking user's home.  The ``SUDO_USER``
    environment variable points at the right account.
    """
    sudo_user = os.environ.get("SUDO_USER")
    if sudo_user:
        try:
            import pwd
            return pwd.getpwnam(sudo_user).pw_dir
        except (KeyError, ImportError):
            pass
    return os.path.expanduser("~")


# ── Canonical Paths ──────────────────────────────────────────
BASE_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

CONFIG_PATH = os.path.join(BASE_DIR, 'config.json')


_UNSET = object()

_VALID_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

# (section, key, minimum) for every positive-integer setting
_INT_SETTINGS = (
    ("solver", "max_exact_vertices", 1),
    ("solver", "max_ilp_vertices", 1),
    ("solver", "max_lp_vertices", 1),
    ("solver", "max_independent_sets", 1),
    ("codec", "random_trials", 1),
    ("codec", "verify_width", 1),
)


@dataclass
class ConfigValidationError:
    """Structured validation error with severity.

    Severity levels:
        error  : Config is unusable; runs will fail or be misconfigured.
        warning: Config is suboptimal; runs may be slow or surprising.
        info   : Informational note; no action required.
    """
    field: str
    message: str
    severity: str = "error"  # "error", "warning", or "info"

    def __str__(self):
        return f"[{self.severity.upper()}] {self.field}: {self.message}"


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


def parse_rational(text):
    """Parse ``"1"``, ``"0.25"`` or ``"3/4"`` into an exact Fraction.

    Raises:
        ValueError: text is not a rational literal.
    """
    if isinstance(text, Fraction):
        return text
    if _is_int(text):
        return Fraction(text)
    if not isinstance(text, str) or not text.strip():
        raise ValueError(f"not a rational number: {text!r}")
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"not a rational number: {text!r}") from e


def validate_params(n, m, M, L):
    """Validate caching system parameters.

    Returns:
        (ok: bool, error_message: str)
    """
    for name, value in (("n", n), ("m", m), ("L", L)):
        if not _is_int(value):
            return False, f"{name} must be an integer, got {type(value).__name__}"
        if value < 1:
            return False, f"{name} must be positive, got {value}"
    try:
        cache = parse_rational(M)
    except ValueError as e:
        return False, f"M: {e}"
    if cache < 0 or cache > m:
        return False, f"M must satisfy 0 <= M <= m={m}, got {cache}"
    if L > m:
        return False, f"L must satisfy 1 <= L <= m={m}, got {L}"
    return True, ""


def validate_field_degree(q):
    """Validate a GF(2^q) extension degree.

    Returns:
        (ok: bool, error_message: str)
    """
    if not _is_int(q):
        return False, f"field degree must be an integer, got {type(q).__name__}"
    if q < 2 or q > limits.MAX_FIELD_DEGREE:
        return False, f"field degree must be 2-{limits.MAX_FIELD_DEGREE}, got {q}"
    return True, ""


def check_config_permissions(path):
    """Warn if config file is world-writable (Linux/POSIX only).

    Returns a list of warning strings (empty when permissions are fine).
    """
    warnings = []
    if os.name != 'posix':
        return warnings
    try:
        mode = os.stat(path).st_mode
        if mode & stat.S_IWOTH:
            warnings.append(
                f"{path} is world-writable (mode {oct(mode)}). "
                "Consider: chmod 644 " + path
            )
    except OSError:
        pass
    return warnings


def validate_config_strict(cfg):
    """Validate config and return structured ConfigValidationError list.

    Returns:
        list[ConfigValidationError]
    """
    errors = []
    if not isinstance(cfg, dict):
        errors.append(ConfigValidationError("config", "Config is not a JSON object"))
        return errors

    for section in ("solver", "codec", "sweep", "logging"):
        value = cfg.get(section, {})
        if not isinstance(value, dict):
            errors.append(ConfigValidationError(section, f"{section} section must be a JSON object"))

    for section, key, minimum in _INT_SETTINGS:
        sect = cfg.get(section, {})
        if not isinstance(sect, dict):
            continue
        val = sect.get(key)
        if val is None:
            continue
        if not _is_int(val) or val < minimum:
            errors.append(ConfigValidationError(
                f"{section}.{key}",
                f"must be an integer >= {minimum}, got {val!r}",
            ))

    solver = cfg.get("solver", {})
    if isinstance(solver, dict):
        exact = solver.get("max_exact_vertices")
        if _is_int(exact) and exact > 48:
            errors.append(ConfigValidationError(
                "solver.max_exact_vertices",
                f"{exact} vertices may take hours of branch-and-bound",
                severity="warning",
            ))

    codec = cfg.get("codec", {})
    if isinstance(codec, dict):
        for key in ("field_degree", "random_field_degree"):
            val = codec.get(key)
            if val is not None:
                ok, err = validate_field_degree(val)
                if not ok:
                    errors.append(ConfigValidationError(f"codec.{key}", err))

    sweep = cfg.get("sweep", {})
    if isinstance(sweep, dict):
        workers = sweep.get("workers")
        if workers is not None and (not _is_int(workers) or workers < 1):
            errors.append(ConfigValidationError(
                "sweep.workers", f"must be null or an integer >= 1, got {workers!r}",
            ))

    logging_cfg = cfg.get("logging", {})
    if isinstance(logging_cfg, dict):
        level = logging_cfg.get("level")
        if level is not None and str(level).upper() not in _VALID_LOG_LEVELS:
            errors.append(ConfigValidationError(
                "logging.level", f"must be one of {_VALID_LOG_LEVELS}, got {level!r}",
            ))
        structured = logging_cfg.get("structured")
        if structured is not None and not isinstance(structured, bool):
            errors.append(ConfigValidationError(
                "logging.structured", f"must be true or false, got {type(structured).__name__}",
            ))

    return errors


def validate_config(cfg):
    """Validate config structure and return a list of warning strings.

    Returns an empty list when the config is valid.
    """
    return [f"{e.field}: {e.message}" for e in validate_config_strict(cfg)]


def load_config(fallback=_UNSET, path=None):
    """Load config.json, returning *fallback* on failure.

    Args:
        fallback: Value to return if config cannot be loaded.
                  Defaults to empty dict {} when not specified.
        path: Override for ``CONFIG_PATH``.
    """
    if fallback is _UNSET:
        fallback = {}
    path = path or CONFIG_PATH
    try:
        with open(path, 'r') as f:
            cfg = json.load(f)
    except (FileNotFoundError, json.JSONDecodeError, PermissionError):
        return fallback

    for warning in check_config_permissions(path):
        log.warning(warning)
    for warning in validate_config(cfg):
        log.warning(warning)
    return cfg


# ── Resolved Settings ────────────────────────────────────────

@dataclass(frozen=True)
class Settings:
    """Effective run settings after merging defaults, config and flags."""
    max_exact_vertices: int = limits.MAX_EXACT_VERTICES
    max_ilp_vertices: int = limits.MAX_ILP_VERTICES
    max_lp_vertices: int = limits.MAX_LP_VERTICES
    max_independent_sets: int = limits.MAX_INDEPENDENT_SETS
    field_degree: int = limits.DEFAULT_FIELD_DEGREE
    random_field_degree: int = limits.RANDOM_FIELD_DEGREE
    random_trials: int = limits.RANDOM_TRIALS
    verify_width: int = limits.VERIFY_WIDTH
    workers: Optional[int] = None
    structured_logging: bool = False
    log_level: str = "INFO"


_SETTING_KEYS = {
    ("solver", "max_exact_vertices"): "max_exact_vertices",
    ("solver", "max_ilp_vertices"): "max_ilp_vertices",
    ("solver", "max_lp_vertices"): "max_lp_vertices",
    ("solver", "max_independent_sets"): "max_independent_sets",
    ("codec", "field_degree"): "field_degree",
    ("codec", "random_field_degree"): "random_field_degree",
    ("codec", "random_trials"): "random_trials",
    ("codec", "verify_width"): "verify_width",
    ("sweep", "workers"): "workers",
    ("logging", "structured"): "structured_logging",
    ("logging", "level"): "log_level",
}


def resolve_settings(cfg=None, **overrides):
    """Merge *cfg* (a loaded config dict) and keyword *overrides*.

    Invalid config entries (per ``validate_config_strict`` errors) are
    ignored with a warning; ``None`` overrides are skipped.
    """
    settings = Settings()
    cfg = cfg if isinstance(cfg, dict) else {}
    bad_fields = {e.field for e in validate_config_strict(cfg) if e.severity == "error"}

    values = {}
    for (section, key), attr in _SETTING_KEYS.items():
        sect = cfg.get(section)
        if not isinstance(sect, dict) or key not in sect:
            continue
        if f"{section}.{key}" in bad_fields:
            log.warning("Ignoring invalid config value %s.%s=%r", section, key, sect[key])
            continue
        values[attr] = sect[key]
    if "log_level" in values:
        values["log_level"] = str(values["log_level"]).upper()

    values.update({k: v for k, v in overrides.items() if v is not None})
    return replace(settings, **values)


# ── Config Templates ─────────────────────────────────────────

def config_template():
    """Return a fully populated config dict with the built-in defaults."""
    return {
        "solver": {
            "max_exact_vertices": limits.MAX_EXACT_VERTICES,
            "max_ilp_vertices": limits.MAX_ILP_VERTICES,
            "max_lp_vertices": limits.MAX_LP_VERTICES,
            "max_independent_sets": limits.MAX_INDEPENDENT_SETS,
        },
        "codec": {
            "field_degree": limits.DEFAULT_FIELD_DEGREE,
            "random_field_degree": limits.RANDOM_FIELD_DEGREE,
            "random_trials": limits.RANDOM_TRIALS,
            "verify_width": limits.VERIFY_WIDTH,
        },
        "sweep": {
            "workers": None,
        },
        "logging": {
            "structured": False,
            "level": "INFO",
        },
    }
