"""Cached download of economic time series CSVs.

The cache directory is authoritative: a hit returns the stored bytes without
touching the network, so offline reruns are deterministic. Writes go through
a temp file and an atomic rename, serializing concurrent fetchers per file.
"""
from __future__ import annotations

import os
import tempfile
import urllib.error
import urllib.parse
import urllib.request
from pathlib import Path

from .errors import FetchError

CACHE_ENV = "SPREADSCOPE_CACHE_DIR"


def cache_path(series_id: str, cache_dir: str | Path) -> Path:
    return Path(cache_dir) / f"{series_id}.csv"


def _build_url(endpoint: str, series_id: str) -> str:
    if "{id}" in endpoint:
        return endpoint.replace("{id}", urllib.parse.quote(series_id, safe=","))
    sep = "&" if "?" in endpoint else "?"
    return f"{endpoint}{sep}id={urllib.parse.quote(series_id, safe=',')}"


def fetch_series(series_id: str, endpoint: str, cache_dir: str | Path) -> str:
    """Return the CSV body for series_id, from cache or the endpoint.

    A fresh download is stored under ``<cache_dir>/<series_id>.csv`` before
    being returned, so the next call is a pure cache read.

    Raises:
        FetchError: no cached copy and the endpoint is unreachable, times
            out, or answers with a non-200 status.
    """
    path = cache_path(series_id, cache_dir)
    if path.exists():
        return path.read_text(encoding="utf-8")
    url = _build_url(endpoint, series_id)
    try:
        with urllib.request.urlopen(url, timeout=30) as response:
            status = getattr(response, "status", 200)
            if status != 200:
                raise FetchError(f"{series_id}: HTTP {status} from {url}")
            body = response.read().decode("utf-8")
    except urllib.error.HTTPError as exc:
        raise FetchError(f"{series_id}: HTTP {exc.code} from {url}") from exc
    except (urllib.error.URLError, OSError, TimeoutError) as exc:
        raise FetchError(f"{series_id}: cannot reach {url}: {exc}") from exc
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{series_id}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(body)
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return body


def default_cache_dir() -> Path:
    """Cache directory from the environment, else a per-user default."""
    configured = os.environ.get(CACHE_ENV)
    if configured:
        return Path(configured)
    return Path.home() / ".cache" / "spreadscope"
