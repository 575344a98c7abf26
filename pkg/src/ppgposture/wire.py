"""Device-to-host streaming protocol over TCP.

Every data point travels as a 32-bit carrier written in ASCII decimal and
terminated by a comma. Bit 31 of the carrier marks a time record
(milliseconds since session start); otherwise the carrier is a raw sensor
sample. The device emits one time record before every block of
``BEACON_EVERY`` sensor records.
"""

from __future__ import annotations

import enum
import logging
import socket
import threading
import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .recording import ActivityClass, Recording, write_recording

log = logging.getLogger(__name__)

TIME_BIT = 1 << 31
VALUE_LIMIT = 1 << 31
BEACON_EVERY = 10
DEFAULT_LIMIT_S = 60.0
MAX_TOKEN_BYTES = 32
RECV_BYTES = 65536


class WireError(ValueError):
    pass


class WireKind(str, enum.Enum):
    TIME = "Time"
    SENSOR = "Sensor"


@dataclass(frozen=True)
class WireRecord:
    kind: WireKind
    value: int

    def __post_init__(self):
        object.__setattr__(self, "kind", WireKind(self.kind))
        v = self.value
        if isinstance(v, (bool, float)) or not isinstance(v, (int, np.integer)):
            raise WireError(f"record value must be an integer, got {v!r}")
        if not 0 <= v < VALUE_LIMIT:
            raise WireError(f"record value {v} outside [0, 2^31)")
        object.__setattr__(self, "value", int(v))

    @property
    def carrier(self):
        return self.value | TIME_BIT if self.kind is WireKind.TIME else self.value

    @classmethod
    def from_carrier(cls, carrier):
        if carrier & TIME_BIT:
            return cls(WireKind.TIME, carrier & ~TIME_BIT)
        return cls(WireKind.SENSOR, carrier)


def Sensor(value):
    return WireRecord(WireKind.SENSOR, value)


def Time(value):
    return WireRecord(WireKind.TIME, value)


def encode(record):
    """``WireRecord`` -> ``b"<carrier>,"``."""
    return b"%d," % record.carrier


def encode_many(records):
    return b"".join(b"%d," % r.carrier for r in records)


class StreamDecoder:
    """Incremental decoder that tolerates arbitrary chunk boundaries.

    Bytes after the last comma are held until the next chunk completes the
    token. Malformed tokens are counted in ``malformed`` and skipped. A run
    of more than ``MAX_TOKEN_BYTES`` bytes without a comma is discarded up to
    the next comma and counted once.
    """

    def __init__(self):
        self._buf = bytearray()
        self._skipping = False
        self.malformed = 0
        self.n_bytes = 0

    def feed(self, chunk):
        self.n_bytes += len(chunk)
        if self._skipping:
            cut = chunk.find(b",")
            if cut < 0:
                return []
            self._skipping = False
            self.malformed += 1
            chunk = chunk[cut + 1 :]
        self._buf += chunk
        if b"," not in chunk:
            if len(self._buf) > MAX_TOKEN_BYTES:
                self._buf.clear()
                self._skipping = True
            return []
        carriers, bad, consumed = kernels.parse_tokens(bytes(self._buf))
        del self._buf[:consumed]
        self.malformed += bad
        if len(self._buf) > MAX_TOKEN_BYTES:
            self._buf.clear()
            self._skipping = True
        return [WireRecord.from_carrier(c) for c in carriers]

    @property
    def pending(self):
        """Bytes of an incomplete trailing token."""
        return len(self._buf) + (1 if self._skipping else 0)


def decode_stream(chunks, decoder=None):
    """Decode an ordered sequence of byte chunks into records."""
    dec = decoder if decoder is not None else StreamDecoder()
    out = []
    for c in chunks:
        out.extend(dec.feed(bytes(c)))
    return out


def records_for_values(values, sample_rate, beacon_every=BEACON_EVERY):
    """Interleave time beacons with sensor samples, clamping samples to the carrier range."""
    vals = np.clip(np.asarray(values, dtype=np.int64), 0, VALUE_LIMIT - 1)
    for i, v in enumerate(vals.tolist()):
        if i % beacon_every == 0:
            yield Time(int(round(1000.0 * i / sample_rate)))
        yield Sensor(v)


# ----------------------------------------------------------------- device side


@dataclass
class SessionConfig:
    host: str = "127.0.0.1"
    port: int = 0
    limit_seconds: float = DEFAULT_LIMIT_S
    sample_rate: float = 100.0
    values: object = None  # sensor samples to stream (synthetic scenario or replay)
    speed: float = 1.0  # >1 streams faster than real time; inf disables pacing
    source_name: str = "synthetic"

    def __post_init__(self):
        if not self.limit_seconds > 0:
            raise WireError("session limit must be positive")
        if not self.sample_rate > 0:
            raise WireError("sample_rate must be positive")
        if not self.speed > 0:
            raise WireError("speed must be positive")


@dataclass
class SessionOutcome:
    sensor_records: int
    time_records: int
    reason: str
    wall_seconds: float


def _stream_session(conn, config):
    vals = np.asarray(config.values)
    n_limit = int(round(config.limit_seconds * config.sample_rate))
    n = min(vals.shape[0], n_limit)
    t_start = time.monotonic()
    sent_s = sent_t = 0
    block = BEACON_EVERY
    recs = records_for_values(vals[:n], config.sample_rate)
    pending = []
    reason = "limit reached" if n == n_limit else "source exhausted"
    try:
        for i in range(0, n, block):
            stop = min(n, i + block)
            for _ in range((stop - i) + 1):
                pending.append(next(recs))
            if np.isfinite(config.speed):
                due = t_start + (i / config.sample_rate) / config.speed
                delay = due - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
            conn.sendall(encode_many(pending))
            sent_t += 1
            sent_s += stop - i
            pending.clear()
    except (BrokenPipeError, ConnectionResetError, ConnectionAbortedError) as exc:
        log.info("client disconnected after %d samples: %s", sent_s, exc)
        reason = "client disconnected"
    return SessionOutcome(sent_s, sent_t, reason, time.monotonic() - t_start)


class Device:
    """Single-client streaming server; serves sessions one after another."""

    def __init__(self, config):
        self.config = config
        self.sessions = []
        self._stop = threading.Event()
        self._sock = socket.create_server((config.host, config.port))
        self._sock.settimeout(0.2)

    @property
    def address(self):
        return self._sock.getsockname()[:2]

    def serve(self, max_sessions=None):
        try:
            while not self._stop.is_set():
                if max_sessions is not None and len(self.sessions) >= max_sessions:
                    break
                try:
                    conn, peer = self._sock.accept()
                except socket.timeout:
                    continue
                with conn:
                    conn.settimeout(None)
                    conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                    log.info("session with %s:%d", *peer[:2])
                    out = _stream_session(conn, self.config)
                    try:
                        conn.shutdown(socket.SHUT_RDWR)
                    except OSError:
                        pass
                self.sessions.append(out)
                log.info("session ended: %s (%d samples)", out.reason, out.sensor_records)
        finally:
            self._sock.close()
        return self.sessions

    def stop(self):
        self._stop.set()


def run_device(config, max_sessions=1):
    """Bind, serve ``max_sessions`` sessions (``None`` = until stopped), return their outcomes."""
    return Device(config).serve(max_sessions)


# --------------------------------------------------------------- receiver side


@dataclass
class ReceiveResult:
    records: list
    malformed: int
    truncated: bool
    n_bytes: int
    reason: str = ""


def receive_records(address, timeout=10.0, chunk=RECV_BYTES):
    """Connect and decode until the peer closes; a reset marks the result truncated."""
    dec = StreamDecoder()
    out = []
    truncated = False
    reason = "closed by device"
    with socket.create_connection(address, timeout=timeout) as s:
        while True:
            try:
                data = s.recv(chunk)
            except (ConnectionResetError, ConnectionAbortedError) as exc:
                truncated, reason = True, f"connection reset: {exc}"
                break
            except socket.timeout:
                truncated, reason = True, "receive timed out"
                break
            if not data:
                break
            out.extend(dec.feed(data))
    if dec.pending:
        truncated = True
        reason = "stream ended inside a token"
    return ReceiveResult(out, dec.malformed, truncated, dec.n_bytes, reason)


def records_to_samples(records, sample_rate):
    """Pair sensor records with the latest time beacon; later samples step at ``1/sample_rate``."""
    times, values = [], []
    base = 0.0
    k = 0
    last_time = None
    for r in records:
        if r.kind is WireKind.TIME:
            if last_time is not None and r.value < last_time:
                log.warning("time beacon went backwards (%d < %d)", r.value, last_time)
            last_time = r.value
            base = r.value / 1000.0
            k = 0
        else:
            times.append(base + k / sample_rate)
            values.append(r.value)
            k += 1
    return np.array(times, dtype=np.float64), np.array(values, dtype=np.int64)


def run_receiver(address, out_path, sample_rate=100.0, limit_seconds=DEFAULT_LIMIT_S, label=None,
                 movement_onset=None, source_id=None, timeout=10.0):
    """Receive one session and store it as a recording CSV with a JSON sidecar.

    Raises ``WireError`` when no sensor records arrive (no file is written).
    """
    res = receive_records(address, timeout=timeout)
    times, values = records_to_samples(res.records, sample_rate)
    if values.shape[0] == 0:
        raise WireError("no sensor records received")
    # drop samples whose timestamps fail to advance (out-of-order beacons)
    keep = np.concatenate(([True], np.diff(times) > 0))
    times, values = times[keep], values[keep]
    duration = float(times[-1] - times[0] + 1.0 / sample_rate)
    truncated = res.truncated or duration + 2.0 / sample_rate < limit_seconds
    label = ActivityClass.parse(label) if label is not None else ActivityClass.STATIONARY
    meta = {
        "session_duration": round(duration, 6),
        "malformed": res.malformed,
        "truncated": bool(truncated),
        "time_records": sum(1 for r in res.records if r.kind is WireKind.TIME),
        "receiver": "wire",
    }
    if label.is_movement and movement_onset is not None:
        meta["movement_onset"] = float(movement_onset)
    rec = Recording(times, values, sample_rate, label,
                    source_id or f"device-{address[0]}-{address[1]}", meta)
    write_recording(rec, out_path)
    return rec


# ------------------------------------------------------------------ test aids


class FragmentingProxy:
    """TCP relay that re-chunks the downstream byte stream into ``chunk``-byte sends."""

    def __init__(self, upstream, chunk=1, host="127.0.0.1"):
        self.upstream = upstream
        self.chunk = chunk
        self._sock = socket.create_server((host, 0))
        self._thread = threading.Thread(target=self._run, daemon=True)

    @property
    def address(self):
        return self._sock.getsockname()[:2]

    def start(self):
        self._thread.start()
        return self

    def join(self, timeout=None):
        self._thread.join(timeout)

    def _run(self):
        try:
            client, _ = self._sock.accept()
        finally:
            self._sock.close()
        with client, socket.create_connection(self.upstream) as up:
            client.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            while True:
                data = up.recv(RECV_BYTES)
                if not data:
                    break
                view = memoryview(data)
                for i in range(0, len(view), self.chunk):
                    client.sendall(view[i : i + self.chunk])


def serve_bytes_once(payload, host="127.0.0.1"):
    """Serve ``payload`` to the first client then close; returns ``(address, thread)``."""
    srv = socket.create_server((host, 0))

    def run():
        try:
            conn, _ = srv.accept()
            with conn:
                conn.sendall(payload)
        finally:
            srv.close()

    t = threading.Thread(target=run, daemon=True)
    t.start()
    return srv.getsockname()[:2], t
