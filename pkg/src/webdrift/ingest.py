"""Access-log parsing and navigation (session) reconstruction."""

from __future__ import annotations

import gzip
import io
import re
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Sequence
from urllib.parse import unquote, urlsplit

import numpy as np

SESSION_TIMEOUT = 30 * 60
MIN_REQUESTS = 10
MIN_DURATION = 60
MIN_RATIO = 4.0
LOG_FORMATS = ("common", "combined")

_COMMON = (
    r'(?P<host>\S+) (?P<ident>\S+) (?P<authuser>\S+) \[(?P<time>[^\]]+)\] '
    r'"(?P<request>[^"]*)" (?P<status>\d{3}) (?P<bytes>\d+|-)'
)
_PATTERNS = {
    "common": re.compile(_COMMON + r'(?:\s.*)?$'),
    "combined": re.compile(_COMMON + r' "(?P<referer>[^"]*)" "(?P<agent>[^"]*)"\s*$'),
}
_TIME_FORMAT = "%d/%b/%Y:%H:%M:%S %z"


@dataclass(frozen=True)
class RawRequest:
    timestamp: int          # UTC epoch seconds
    user_key: str
    resource: str
    status: int
    bytes: int = 0

    def __post_init__(self):
        if self.bytes < 0:
            raise ValueError("bytes must be non-negative")


@dataclass(frozen=True)
class Navigation:
    id: int
    user_key: str
    requests: tuple[RawRequest, ...]

    @property
    def start(self) -> int:
        return self.requests[0].timestamp

    @property
    def end(self) -> int:
        return self.requests[-1].timestamp

    @property
    def duration(self) -> int:
        return self.end - self.start

    def __len__(self) -> int:
        return len(self.requests)


@dataclass
class ParseResult:
    requests: list[RawRequest] = field(default_factory=list)
    malformed: int = 0
    malformed_lines: list[int] = field(default_factory=list)   # 1-based, first 20 only


def normalize_resource(target: str) -> str:
    """Path part of a request target: no scheme/host, query or fragment."""
    path = urlsplit(target).path or "/"
    return unquote(path)


def parse_line(line: str, fmt: str = "combined") -> RawRequest | None:
    m = _PATTERNS[fmt].match(line.rstrip("\r\n"))
    if m is None:
        return None
    parts = m["request"].split()
    if len(parts) < 2:
        return None
    try:
        ts = int(datetime.strptime(m["time"], _TIME_FORMAT).timestamp())
    except ValueError:
        return None
    agent = m.groupdict().get("agent") or ""
    user_key = f"{m['host']}|{agent}" if agent not in ("", "-") else m["host"]
    size = 0 if m["bytes"] == "-" else int(m["bytes"])
    return RawRequest(ts, user_key, normalize_resource(parts[1]), int(m["status"]), size)


def parse_log(stream: Iterable, fmt: str = "combined") -> ParseResult:
    """Parse Common/Combined Log Format lines; malformed lines are skipped and counted."""
    if fmt not in _PATTERNS:
        raise ValueError(f"unknown log format {fmt!r}; expected one of {LOG_FORMATS}")
    result = ParseResult()
    for lineno, line in enumerate(stream, 1):
        if isinstance(line, bytes):
            line = line.decode("utf-8", errors="replace")
        if not line.strip():
            continue
        req = parse_line(line, fmt)
        if req is None:
            result.malformed += 1
            if len(result.malformed_lines) < 20:
                result.malformed_lines.append(lineno)
        else:
            result.requests.append(req)
    return result


def open_log(path: str | Path) -> io.TextIOBase:
    """Open a plain or gzip-compressed log as text."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"\x1f\x8b":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", errors="replace")
    return open(path, encoding="utf-8", errors="replace")


def read_log(path: str | Path, fmt: str = "combined") -> ParseResult:
    with open_log(path) as fh:
        return parse_log(fh, fmt)


def sessionize(requests: Iterable[RawRequest], timeout: float = SESSION_TIMEOUT) -> list[Navigation]:
    """Split each user's requests into navigations.

    A new navigation starts when the gap to the user's previous request is
    strictly greater than ``timeout`` seconds. Navigations are numbered from 1
    in order of (start, user_key); same-second requests keep input order.
    """
    if timeout <= 0:
        raise ValueError("timeout must be positive")
    per_user: dict[str, list[RawRequest]] = defaultdict(list)
    for req in requests:
        per_user[req.user_key].append(req)

    runs: list[tuple[str, list[RawRequest]]] = []
    for user, reqs in per_user.items():
        reqs.sort(key=lambda r: r.timestamp)  # stable
        current = [reqs[0]]
        for prev, req in zip(reqs, reqs[1:]):
            if req.timestamp - prev.timestamp > timeout:
                runs.append((user, current))
                current = []
            current.append(req)
        runs.append((user, current))

    runs.sort(key=lambda run: (run[1][0].timestamp, run[0]))
    return [Navigation(i, user, tuple(reqs)) for i, (user, reqs) in enumerate(runs, 1)]


def keep_navigation(nav: Navigation, min_requests: int = MIN_REQUESTS,
                    min_duration: float = MIN_DURATION, min_ratio: float = MIN_RATIO) -> bool:
    count = len(nav)
    duration = nav.duration
    return count >= min_requests and duration >= min_duration and duration / count >= min_ratio


def filter_navigations(navs: Sequence[Navigation], min_requests: int = MIN_REQUESTS,
                       min_duration: float = MIN_DURATION,
                       min_ratio: float = MIN_RATIO) -> list[Navigation]:
    """Keep long, human-paced navigations.

    The default ratio of 4 s/request caps the rate at 15 requests per minute.
    """
    return [nav for nav in navs if keep_navigation(nav, min_requests, min_duration, min_ratio)]


def drop_outliers(navs: Sequence[Navigation], quantile: float = 0.99) -> list[Navigation]:
    """Drop navigations whose total duration or total size exceeds the given quantile."""
    if not 0 < quantile <= 1:
        raise ValueError("quantile must be in (0, 1]")
    if not navs:
        return []
    durations = np.array([nav.duration for nav in navs], dtype=np.float64)
    sizes = np.array([sum(r.bytes for r in nav.requests) for nav in navs], dtype=np.float64)
    dmax = np.quantile(durations, quantile)
    smax = np.quantile(sizes, quantile)
    return [nav for nav, d, s in zip(navs, durations, sizes) if d <= dmax and s <= smax]
