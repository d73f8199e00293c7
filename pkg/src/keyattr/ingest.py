"""CSV loading and timestamp parsing for raw event tables.

Everything downstream works on EventLog: an ordered list of named string
columns. Cells are never typed at load time; timestamp interpretation is a
separate, column-level step so that candidate columns can be probed cheaply.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone

DEFAULT_MAX_ROWS = 1000

# Epoch-second bounds: 1990-01-01T00:00:00Z .. 2100-01-01T00:00:00Z.
_EPOCH_S_MIN = 631152000
_EPOCH_S_MAX = 4102444800

_DELIMITERS = (",", ";", "\t")


class IngestError(ValueError):
    """Raised for unreadable files and empty tables."""


@dataclass
class EventLog:
    """An immutable-by-convention table of string cells.

    columns holds (name, cells) pairs in file order. Missing cells are the
    empty string. Row count >= 1 is enforced here; the three-key-column
    assumption is checked by the identification pipeline, not the container,
    since feature extraction is defined for any column count.
    """

    columns: list[tuple[str, list[str]]]
    source: str = "synthetic"
    ragged_rows: int = 0

    def __post_init__(self):
        if not self.columns:
            raise IngestError("log has no columns")
        n = len(self.columns[0][1])
        if n < 1:
            raise IngestError("log has no rows")
        names = [name for name, _ in self.columns]
        if len(set(names)) != len(names):
            raise IngestError("duplicate column names: %r" % (names,))
        for name, cells in self.columns:
            if len(cells) != n:
                raise IngestError("column %r has %d cells, expected %d" % (name, len(cells), n))

    @property
    def n_rows(self) -> int:
        return len(self.columns[0][1])

    @property
    def column_names(self) -> list[str]:
        return [name for name, _ in self.columns]

    def column(self, name: str) -> list[str]:
        for col_name, cells in self.columns:
            if col_name == name:
                return cells
        raise KeyError(name)

    def truncated(self, max_rows: int) -> "EventLog":
        """First max_rows rows, in file order. Returns self when small enough."""
        if self.n_rows <= max_rows:
            return self
        cols = [(name, cells[:max_rows]) for name, cells in self.columns]
        return EventLog(columns=cols, source=self.source, ragged_rows=self.ragged_rows)


@dataclass
class TimestampParse:
    """Per-cell sortable keys for one column.

    keys are milliseconds since epoch, None where the cell did not parse.
    All parsed cells in a column share one format (format_id); parsed_fraction
    is parsed cells over all cells.
    """

    keys: list[int | None]
    parsed_fraction: float
    format_id: str | None = None


def _dedupe_names(names: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for name in names:
        if name not in seen:
            seen[name] = 1
            out.append(name)
        else:
            seen[name] += 1
            candidate = "%s#%d" % (name, seen[name])
            while candidate in seen:
                seen[name] += 1
                candidate = "%s#%d" % (name, seen[name])
            seen[candidate] = 1
            out.append(candidate)
    return out


def _detect_delimiter(sample_lines: list[str]) -> str:
    """Pick the delimiter whose field counts are most consistent over the sample.

    A delimiter that never splits any line scores as absent rather than as
    perfectly consistent, so ragged rows cannot flip detection to a delimiter
    the file does not use. Among splitting delimiters: agreement with the
    modal field count first, then the field count itself, then the fixed
    delimiter order as final tie-break.
    """
    best = None
    for delim in _DELIMITERS:
        counts = []
        for row in csv.reader(sample_lines, delimiter=delim):
            counts.append(len(row))
        if not counts:
            continue
        modal = max(set(counts), key=lambda c: (counts.count(c), c))
        agreement = counts.count(modal)
        score = (modal > 1, agreement, modal)
        if best is None or score > best[0]:
            best = (score, delim)
    return best[1] if best else ","


def load_csv(path: str, max_rows: int = DEFAULT_MAX_ROWS) -> EventLog:
    """Load an RFC-4180 CSV with a header row into an EventLog.

    The delimiter is auto-detected among comma, semicolon and tab using the
    first 10 lines. Duplicate header names get #2, #3 suffixes. Ragged rows
    are padded (or trimmed) to the header width and counted. At most max_rows
    data rows are kept, in file order.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            head = []
            for _ in range(10):
                line = fh.readline()
                if not line:
                    break
                head.append(line)
            fh.seek(0)
            delim = _detect_delimiter(head)
            reader = csv.reader(fh, delimiter=delim)
            try:
                header = next(reader)
            except StopIteration:
                raise IngestError("%s: file is empty" % path) from None
            names = _dedupe_names([h.strip() for h in header])
            width = len(names)
            rows: list[list[str]] = []
            ragged = 0
            for row in reader:
                if len(rows) >= max_rows:
                    break
                if not row:
                    continue
                if len(row) != width:
                    ragged += 1
                    row = (row + [""] * width)[:width]
                rows.append(row)
    except OSError as exc:
        raise IngestError("%s: %s" % (path, exc)) from exc
    if not rows:
        raise IngestError("%s: no data rows" % path)
    cols = [(names[j], [row[j] for row in rows]) for j in range(width)]
    return EventLog(columns=cols, source=path, ragged_rows=ragged)


# --- timestamp formats -------------------------------------------------------

_ISO_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})[T ](\d{2}):(\d{2})(?::(\d{2})(\.\d{1,6})?)?"
    r"(Z|[+-]\d{2}:?\d{2})?$"
)
_SLASH_24H_RE = re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{4}) (\d{1,2}):(\d{2})(?::(\d{2}))?$")
_SLASH_AMPM_RE = re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{4}) (\d{1,2}):(\d{2})(AM|PM)$")
_YMD_SLASH_RE = re.compile(r"^(\d{4})/(\d{1,2})/(\d{1,2}) (\d{1,2}):(\d{2}):(\d{2})$")
_DMY_DASH_RE = re.compile(r"^(\d{1,2})-(\d{1,2})-(\d{4}) (\d{1,2}):(\d{2}):(\d{2})$")
_EPOCH_RE = re.compile(r"^\d{1,13}$")


_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def _instant_ms(year, month, day, hour, minute, second, micro=0, offset_minutes=None):
    try:
        dt = datetime(year, month, day, hour, minute, second, micro, tzinfo=timezone.utc)
    except ValueError:
        return None
    delta = dt - _EPOCH
    ms = delta.days * 86400000 + delta.seconds * 1000 + delta.microseconds // 1000
    if offset_minutes is not None:
        ms -= offset_minutes * 60 * 1000
    return ms


def _valid_date(year: int, month: int, day: int) -> bool:
    try:
        datetime(year, month, day)
        return True
    except ValueError:
        return False


def _parse_iso(cell: str) -> int | None:
    m = _ISO_RE.match(cell)
    if not m:
        return None
    y, mo, d, h, mi = (int(m.group(i)) for i in range(1, 6))
    s = int(m.group(6)) if m.group(6) else 0
    frac = m.group(7)
    micro = int(round(float(frac) * 1_000_000)) if frac else 0
    tz = m.group(8)
    offset = None
    if tz and tz != "Z":
        sign = 1 if tz[0] == "+" else -1
        tz_digits = tz[1:].replace(":", "")
        offset = sign * (int(tz_digits[:2]) * 60 + int(tz_digits[2:]))
    if h > 23 or mi > 59 or s > 59:
        return None
    return _instant_ms(y, mo, d, h, mi, s, micro, offset)


def _parse_slash_24h(cell: str, dayfirst: bool) -> int | None:
    m = _SLASH_24H_RE.match(cell)
    if not m:
        return None
    a, b, y, h, mi = (int(m.group(i)) for i in range(1, 6))
    s = int(m.group(6)) if m.group(6) else 0
    day, month = (a, b) if dayfirst else (b, a)
    if h > 23 or mi > 59 or s > 59:
        return None
    return _instant_ms(y, month, day, h, mi, s)


def _parse_slash_ampm(cell: str, dayfirst: bool) -> int | None:
    m = _SLASH_AMPM_RE.match(cell)
    if not m:
        return None
    a, b, y, h, mi = (int(m.group(i)) for i in range(1, 6))
    meridiem = m.group(6)
    day, month = (a, b) if dayfirst else (b, a)
    if not 1 <= h <= 12 or mi > 59:
        return None
    if meridiem == "AM":
        h = 0 if h == 12 else h
    else:
        h = 12 if h == 12 else h + 12
    return _instant_ms(y, month, day, h, mi, 0)


def _slash_orders(cell: str, regex) -> tuple[bool, bool]:
    """(valid as dd/mm, valid as mm/dd) for one slashed-date cell."""
    m = regex.match(cell)
    if not m:
        return (False, False)
    a, b, y = int(m.group(1)), int(m.group(2)), int(m.group(3))
    return (_valid_date(y, b, a), _valid_date(y, a, b))


def _parse_ymd_slash(cell: str) -> int | None:
    m = _YMD_SLASH_RE.match(cell)
    if not m:
        return None
    y, mo, d, h, mi, s = (int(m.group(i)) for i in range(1, 7))
    if h > 23 or mi > 59 or s > 59:
        return None
    return _instant_ms(y, mo, d, h, mi, s)


def _parse_dmy_dash(cell: str) -> int | None:
    m = _DMY_DASH_RE.match(cell)
    if not m:
        return None
    d, mo, y, h, mi, s = (int(m.group(i)) for i in range(1, 7))
    if h > 23 or mi > 59 or s > 59:
        return None
    return _instant_ms(y, mo, d, h, mi, s)


def _parse_epoch_s(cell: str) -> int | None:
    if not _EPOCH_RE.match(cell):
        return None
    value = int(cell)
    if _EPOCH_S_MIN <= value <= _EPOCH_S_MAX:
        return value * 1000
    return None


def _parse_epoch_ms(cell: str) -> int | None:
    if not _EPOCH_RE.match(cell):
        return None
    value = int(cell)
    if _EPOCH_S_MIN * 1000 <= value <= _EPOCH_S_MAX * 1000:
        return value
    return None


# Probe order is the priority order: the first format with the best sample hit
# rate wins. Slashed formats carry a day/month ambiguity resolved per column.
TIMESTAMP_FORMAT_IDS = (
    "iso8601",
    "slash_24h",
    "slash_ampm",
    "ymd_slash",
    "dmy_dash",
    "epoch_s",
    "epoch_ms",
)

_AMBIGUOUS = {"slash_24h": _SLASH_24H_RE, "slash_ampm": _SLASH_AMPM_RE}


def _probe(format_id: str, cell: str) -> bool:
    """True when the cell parses under the format in at least one day order."""
    if format_id == "iso8601":
        return _parse_iso(cell) is not None
    if format_id == "slash_24h":
        return any(_parse_slash_24h(cell, df) is not None for df in (True, False))
    if format_id == "slash_ampm":
        return any(_parse_slash_ampm(cell, df) is not None for df in (True, False))
    if format_id == "ymd_slash":
        return _parse_ymd_slash(cell) is not None
    if format_id == "dmy_dash":
        return _parse_dmy_dash(cell) is not None
    if format_id == "epoch_s":
        return _parse_epoch_s(cell) is not None
    if format_id == "epoch_ms":
        return _parse_epoch_ms(cell) is not None
    raise ValueError(format_id)


def _parse_with(format_id: str, cell: str, dayfirst: bool) -> int | None:
    if format_id == "iso8601":
        return _parse_iso(cell)
    if format_id == "slash_24h":
        return _parse_slash_24h(cell, dayfirst)
    if format_id == "slash_ampm":
        return _parse_slash_ampm(cell, dayfirst)
    if format_id == "ymd_slash":
        return _parse_ymd_slash(cell)
    if format_id == "dmy_dash":
        return _parse_dmy_dash(cell)
    if format_id == "epoch_s":
        return _parse_epoch_s(cell)
    if format_id == "epoch_ms":
        return _parse_epoch_ms(cell)
    raise ValueError(format_id)


def parse_timestamp_column(cells: list[str], sample_size: int = 50) -> TimestampParse:
    """Interpret a column as timestamps under the best single format.

    The format is chosen by hit rate over the first sample_size non-empty
    cells (probe order breaks ties). For slashed dates the day/month order is
    decided by the first cell where exactly one order is a valid calendar
    date; columns that never disambiguate are read day-first.
    """
    sample = [c for c in cells if c != ""][:sample_size]
    if not sample:
        return TimestampParse(keys=[None] * len(cells), parsed_fraction=0.0, format_id=None)
    best_id, best_hits = None, 0
    for format_id in TIMESTAMP_FORMAT_IDS:
        hits = sum(1 for c in sample if _probe(format_id, c))
        if hits > best_hits:
            best_id, best_hits = format_id, hits
    if best_id is None:
        return TimestampParse(keys=[None] * len(cells), parsed_fraction=0.0, format_id=None)
    dayfirst = True
    if best_id in _AMBIGUOUS:
        regex = _AMBIGUOUS[best_id]
        for cell in cells:
            if cell == "":
                continue
            as_dmy, as_mdy = _slash_orders(cell, regex)
            if as_dmy != as_mdy:
                dayfirst = as_dmy
                break
    keys = [None if c == "" else _parse_with(best_id, c, dayfirst) for c in cells]
    parsed = sum(1 for k in keys if k is not None)
    return TimestampParse(
        keys=keys,
        parsed_fraction=parsed / len(cells) if cells else 0.0,
        format_id=best_id,
    )


# --- rendering (inverse of parsing, used by the synthetic generator) ---------


def render_timestamp(format_id: str, epoch_ms: int) -> str:
    """Render an instant in one of the parseable formats (second precision)."""
    dt = datetime.fromtimestamp(epoch_ms / 1000.0, tz=timezone.utc)
    if format_id == "iso8601":
        return "%04d-%02d-%02dT%02d:%02d:%02d" % (
            dt.year, dt.month, dt.day, dt.hour, dt.minute, dt.second)
    if format_id == "slash_24h":
        return "%02d/%02d/%04d %d:%02d:%02d" % (
            dt.day, dt.month, dt.year, dt.hour, dt.minute, dt.second)
    if format_id == "slash_ampm":
        h = dt.hour % 12
        h = 12 if h == 0 else h
        meridiem = "AM" if dt.hour < 12 else "PM"
        return "%02d/%02d/%04d %d:%02d%s" % (dt.month, dt.day, dt.year, h, dt.minute, meridiem)
    if format_id == "ymd_slash":
        return "%04d/%02d/%02d %02d:%02d:%02d" % (
            dt.year, dt.month, dt.day, dt.hour, dt.minute, dt.second)
    if format_id == "dmy_dash":
        return "%02d-%02d-%04d %02d:%02d:%02d" % (
            dt.day, dt.month, dt.year, dt.hour, dt.minute, dt.second)
    if format_id == "epoch_s":
        return str(epoch_ms // 1000)
    if format_id == "epoch_ms":
        return str(epoch_ms)
    raise ValueError(format_id)
