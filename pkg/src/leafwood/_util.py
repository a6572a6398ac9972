"""Small shared helpers: atomic file writes and worker-count control."""

import os
import tempfile
from contextlib import contextmanager


def worker_count() -> int:
    """Number of parallel workers for neighbor queries.

    Capped by the LEAFWOOD_THREADS environment variable; -1 (all cores)
    when the variable is unset.
    """
    raw = os.environ.get("LEAFWOOD_THREADS")
    if raw is None:
        return -1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"LEAFWOOD_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise ValueError(f"LEAFWOOD_THREADS must be >= 1, got {n}")
    return min(n, os.cpu_count() or 1)


@contextmanager
def atomic_write(path, mode: str = "w"):
    """Write to a temp file in the target directory, then rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, mode) as handle:
            yield handle
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
