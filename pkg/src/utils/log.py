"""
Centralized logging configuration for coded-groupcast.

Call setup_logging() once at startup (the CLI does this).  Modules obtain
their own loggers via logging.getLogger() with a descriptive name.

Console output goes to stderr; stdout carries only JSON/CSV reports.
An optional JSON formatter emits one object per line and carries the
experiment context passed through ``extra=``.
"""
import json
import logging
import logging.handlers
import os
import sys
import time
import traceback
from datetime import datetime, timezone

from src.utils.limits import LOG_DIR_ENV_VAR, RUN_LOG_BACKUPS, RUN_LOG_MAX_BYTES
from version import __version__

_log = logging.getLogger("log")

_configured = False

# Record attributes copied into JSON entries when present
CONTEXT_FIELDS = ("n", "m", "M", "L", "t", "vertices", "chi_l", "demand", "workers")


class JsonFormatter(logging.Formatter):
    """Structured JSON log formatter for machine parsing.

    Each log record becomes a single JSON line::

        {"ts":"2025-01-15T12:00:00Z","level":"INFO","logger":"bounds","msg":"...","n":3}
    """

    def format(self, record):
        entry = {
            "ts": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(record.created)),
            "level": record.levelname,
            "logger": record.name,
            "msg": record.getMessage(),
        }
        for key in CONTEXT_FIELDS:
            if hasattr(record, key):
                entry[key] = getattr(record, key)
        if record.exc_info and record.exc_info[0]:
            entry["exception"] = self.formatException(record.exc_info)
        # Fractions and tuples fall back to str()
        return json.dumps(entry, default=str)


def _formatter(structured):
    if structured:
        return JsonFormatter()
    return logging.Formatter("%(asctime)s [%(levelname)s] %(name)s: %(message)s",
                             datefmt="%Y-%m-%d %H:%M:%S")


def setup_logging(level=logging.INFO, log_file=None, console_level=None,
                  structured=False):
    """Attach the stderr handler, and optionally a run log, to the root logger.

    Only the first call has an effect.  The console handler is added
    last, so ``logging.getLogger().handlers[-1]`` is always stderr.

    Args:
        level: Root logger level (default INFO).
        log_file: Optional rotating run log; missing directories are created.
        console_level: stderr level, e.g. WARNING for quiet sweeps.
                       Defaults to *level*.
        structured: One JSON object per line instead of plain text.
    """
    global _configured
    if _configured:
        return
    _configured = True

    root = logging.getLogger()
    root.setLevel(level)
    formatter = _formatter(structured)

    handlers = []
    if log_file:
        path = os.path.abspath(log_file)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        run_log = logging.handlers.RotatingFileHandler(
            path, maxBytes=RUN_LOG_MAX_BYTES, backupCount=RUN_LOG_BACKUPS, encoding="utf-8",
        )
        run_log.setLevel(level)
        handlers.append(run_log)

    console = logging.StreamHandler(sys.stderr)
    console.setLevel(console_level or level)
    handlers.append(console)

    for handler in handlers:
        handler.setFormatter(formatter)
        root.addHandler(handler)
    if log_file:
        _log.debug("Run log at %s", path)


def default_log_dir():
    """Directory for run and crash logs, created on first use.

    ``CODED_GROUPCAST_LOG_DIR`` wins when set.  Otherwise
    ``~/.config/coded-groupcast/logs`` under the real user's home, so
    ``sudo`` runs still log next to the user's config.
    """
    override = os.environ.get(LOG_DIR_ENV_VAR, "").strip()
    if override:
        log_dir = os.path.abspath(os.path.expanduser(override))
    else:
        from src.utils.common import get_real_user_home
        log_dir = os.path.join(get_real_user_home(), ".config", "coded-groupcast", "logs")
    os.makedirs(log_dir, exist_ok=True)
    return log_dir


def install_crash_handler():
    """Append uncaught exceptions, with version and argv, to ``crash.log``.

    Ctrl-C goes straight to the default hook without a crash entry.
    """
    crash_log = os.path.join(default_log_dir(), "crash.log")

    def handler(exc_type, exc_value, exc_tb):
        if not issubclass(exc_type, KeyboardInterrupt):
            stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
            try:
                with open(crash_log, "a", encoding="utf-8") as f:
                    f.write(f"\n--- {stamp} coded-groupcast {__version__} ---\n")
                    f.write(f"argv: {' '.join(sys.argv)}\n")
                    f.writelines(traceback.format_exception(exc_type, exc_value, exc_tb))
            except OSError as e:
                _log.warning("Could not write %s: %s", crash_log, e)
        sys.__excepthook__(exc_type, exc_value, exc_tb)

    sys.excepthook = handler
