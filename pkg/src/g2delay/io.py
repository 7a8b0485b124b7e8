"""On-disk formats for timestamp streams and histograms.

Timestamps travel in a small binary container (magic ``PHSTAMP1``) so a
10^7-event run stays an 80 MB file instead of a 200 MB text dump:

    bytes 0..7    magic "PHSTAMP1"
    bytes 8..15   u64 little-endian  resolution in ps per tick
    bytes 16..23  u64 little-endian  record count
    bytes 24..31  u64 little-endian  acquisition duration in ps
    then          count * u64 little-endian tick values, non-decreasing

A plain text form (one picosecond integer per line) is accepted too, for
hand-made fixtures; readers sniff the magic to pick the parser.  Histograms
are exchanged as CSV so they can be plotted with anything.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .correlator import CorrelationHistogram, Estimator
from .errors import BadMagicError, NonMonotonicError, StreamFormatError, TruncatedFileError
from .streams import StreamOrigin, TimestampStream

MAGIC = b"PHSTAMP1"
_HEADER = struct.Struct("<8sQQQ")


def write_stream(path: str | Path, stream: TimestampStream, resolution_ps: int = 1) -> None:
    """Write the binary container.  ``resolution_ps`` coarsens the ticks."""
    if resolution_ps < 1:
        raise StreamFormatError("resolution_ps must be >= 1")
    times = stream.times_ps
    if resolution_ps != 1:
        times = times // resolution_ps
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, resolution_ps, len(times), stream.duration_ps))
        fh.write(times.astype("<u8").tobytes())


def write_stream_text(path: str | Path, stream: TimestampStream) -> None:
    np.savetxt(path, stream.times_ps, fmt="%d")


def _check_monotonic(times: np.ndarray) -> None:
    if times.size > 1:
        bad = np.flatnonzero(np.diff(times) < 0)
        if bad.size:
            raise NonMonotonicError(int(bad[0]) + 1)


def read_stream(
    path: str | Path,
    origin: StreamOrigin = StreamOrigin.DETECTION,
    duration_ps: int | None = None,
) -> TimestampStream:
    """Read either format back; sniffs the binary magic.

    ``duration_ps`` overrides (text) or cross-checks nothing for binary --
    the binary header carries its own duration.  Text files need it; when
    omitted the last timestamp is used.
    """
    path = Path(path)
    with path.open("rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) >= len(MAGIC) and head[: len(MAGIC)] == MAGIC:
            if len(head) < _HEADER.size:
                raise TruncatedFileError(f"{path.name}: header cut short")
            _, resolution, count, file_duration = _HEADER.unpack(head)
            payload = fh.read()
            if len(payload) < 8 * count:
                raise TruncatedFileError(
                    f"{path.name}: header promises {count} records, "
                    f"payload holds {len(payload) // 8}"
                )
            ticks = np.frombuffer(payload[: 8 * count], dtype="<u8").astype(np.int64)
            times = ticks * int(resolution)
            _check_monotonic(times)
            return TimestampStream(
                times_ps=times,
                origin=origin,
                duration_ps=int(file_duration),
            )
    # Not binary: reparse as text.
    try:
        raw = np.loadtxt(path, dtype=np.int64, ndmin=1)
    except ValueError as exc:
        raise BadMagicError(
            f"{path.name}: neither a {MAGIC.decode()} container nor integer text"
        ) from exc
    _check_monotonic(raw)
    if duration_ps is None:
        duration_ps = int(raw[-1]) if raw.size else 0
    return TimestampStream(times_ps=raw, origin=origin, duration_ps=duration_ps)


# --- histograms -------------------------------------------------------------

_CSV_HEADER = "bin_center_ns,counts,g2"


def write_histogram_csv(path: str | Path, hist: CorrelationHistogram) -> None:
    lines = [_CSV_HEADER]
    centers = hist.centers_ps
    for i in range(hist.n_bins):
        g2 = f"{hist.g2[i]:.6f}" if hist.normalized else ""
        lines.append(f"{centers[i] / 1000.0:.6f},{hist.counts[i]},{g2}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_histogram_csv(
    path: str | Path,
    *,
    total_events: int = 0,
    total_time_ps: int = 0,
    estimator: Estimator = Estimator.START_STOP,
) -> CorrelationHistogram:
    """Rebuild a histogram from its CSV.

    Counts round-trip exactly.  The axis is reconstructed from the first two
    bin centres; totals are not stored in the CSV, so pass them back in if a
    later normalization needs them.
    """
    text = Path(path).read_text().strip().splitlines()
    if not text or text[0].strip() != _CSV_HEADER:
        raise StreamFormatError(f"{Path(path).name}: expected header '{_CSV_HEADER}'")
    rows = [line.split(",") for line in text[1:] if line.strip()]
    if len(rows) < 2:
        raise StreamFormatError("histogram CSV needs at least two bins")
    centers = np.array([float(r[0]) * 1000.0 for r in rows])
    counts = np.array([int(r[1]) for r in rows], dtype=np.int64)
    g2_cells = [r[2].strip() for r in rows]
    has_g2 = all(c != "" for c in g2_cells)
    bin_width = int(round(centers[1] - centers[0]))
    t_min = int(round(centers[0] - bin_width / 2))
    hist = CorrelationHistogram(
        bin_width_ps=bin_width,
        t_min_ps=t_min,
        t_max_ps=t_min + bin_width * len(rows),
        counts=counts,
        total_events=total_events,
        total_time_ps=total_time_ps,
        estimator=estimator,
    )
    if has_g2:
        g2 = np.array([float(c) for c in g2_cells])
        # variance is not serialized; reconstruct the Poisson estimate
        with np.errstate(divide="ignore", invalid="ignore"):
            var = np.where(counts > 0, g2 * g2 / np.maximum(counts, 1), 0.0)
        from dataclasses import replace

        hist = replace(hist, normalized=True, g2=g2, g2_var=var)
    return hist
