"""Client side of the model-adapter wire protocol.

Adapters are child processes speaking newline-delimited JSON over their
standard streams.  Requests carry a monotonically increasing ``id``;
responses may arrive out of order and are matched by id.  A malformed
response line (or a dead pipe) triggers one restart of the adapter; a second
protocol fault raises AdapterError with the captured stderr tail.

Request shapes (field order is part of the wire format):
  {"op": "ping"}
  {"id": N, "op": "detect", "width": W, "height": H, "pixels_b64": "..."}
  {"id": N, "op": "classify", "n": K, "width": W, "height": H, "frames_b64": [...]}

Response shapes:
  {"ready": true|false, "window": N}
  {"id": N, "detections": [{"cls", "cx", "cy", "w", "h", "theta_deg", "conf"}, ...]}
  {"id": N, "probs": [p0..p4]}
  {"id": N, "error": "bad_request"}
"""

from __future__ import annotations

import base64
import collections
import json
import select
import subprocess
import threading
import time

from .detect import Detection, DetectionClass
from .geometry import RotatedBox
from .optflow import Frame
from .slump import AdapterError, ClipWindow


def serialize_ping() -> str:
    return json.dumps({"op": "ping"}, separators=(",", ":"))


def serialize_detect_request(req_id: int, frame: Frame) -> str:
    payload = {
        "id": req_id,
        "op": "detect",
        "width": frame.width,
        "height": frame.height,
        "pixels_b64": base64.b64encode(frame.to_gray8().tobytes()).decode("ascii"),
    }
    return json.dumps(payload, separators=(",", ":"))


def serialize_classify_request(req_id: int, clip: ClipWindow) -> str:
    first = clip.frames[0]
    payload = {
        "id": req_id,
        "op": "classify",
        "n": clip.n,
        "width": first.width,
        "height": first.height,
        "frames_b64": [base64.b64encode(f.to_gray8().tobytes()).decode("ascii")
                       for f in clip.frames],
    }
    return json.dumps(payload, separators=(",", ":"))


class _ProtocolFault(Exception):
    """Recoverable wire fault; consumed by the restart policy."""


class AdapterProcess:
    """One adapter child process plus its protocol state."""

    def __init__(self, cmd: list[str], restart_limit: int = 1,
                 ping_timeout: float = 10.0, request_timeout: float = 30.0):
        self.cmd = list(cmd)
        self.restart_limit = restart_limit
        self.ping_timeout = ping_timeout
        self.request_timeout = request_timeout
        self.window = 1
        self.restarts = 0
        self._proc: subprocess.Popen | None = None
        self._buffer = b""
        self._pending: dict[int, dict] = {}
        self._next_id = 1
        self._stderr_tail: collections.deque = collections.deque(maxlen=50)

    # -- lifecycle -------------------------------------------------------

    def start(self) -> None:
        self._proc = subprocess.Popen(
            self.cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.PIPE)
        threading.Thread(target=self._drain_stderr, args=(self._proc,), daemon=True).start()
        self._handshake()

    def close(self) -> None:
        if self._proc is None:
            return
        try:
            self._proc.stdin.close()
        except OSError:
            pass
        self._proc.terminate()
        try:
            self._proc.wait(timeout=2)
        except subprocess.TimeoutExpired:
            self._proc.kill()
        self._proc = None

    def _drain_stderr(self, proc: subprocess.Popen) -> None:
        if proc.stderr is None:
            return
        for raw in proc.stderr:
            self._stderr_tail.append(raw.decode("utf-8", errors="replace").rstrip())

    def stderr_tail(self) -> str:
        return "\n".join(self._stderr_tail)

    # -- line transport ---------------------------------------------------

    def _send_line(self, line: str) -> None:
        proc = self._proc
        if proc is None or proc.stdin is None:
            raise _ProtocolFault("adapter not running")
        try:
            proc.stdin.write(line.encode("utf-8") + b"\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise _ProtocolFault(f"adapter pipe closed: {exc}")

    def _next_line(self, timeout: float) -> bytes:
        if b"\n" in self._buffer:
            line, _, self._buffer = self._buffer.partition(b"\n")
            return line
        proc = self._proc
        if proc is None or proc.stdout is None:
            raise _ProtocolFault("adapter not running")
        deadline = time.monotonic() + max(timeout, 0.0)
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise _ProtocolFault("adapter response timeout")
            ready, _, _ = select.select([proc.stdout], [], [], min(remaining, 0.5))
            if not ready:
                if proc.poll() is not None:
                    raise _ProtocolFault(f"adapter exited with code {proc.returncode}")
                continue
            chunk = proc.stdout.read1(65536)
            if not chunk:
                raise _ProtocolFault("adapter closed its stdout")
            self._buffer += chunk
            if b"\n" in self._buffer:
                line, _, self._buffer = self._buffer.partition(b"\n")
                return line

    # -- protocol ---------------------------------------------------------

    def _handshake(self) -> None:
        deadline = time.monotonic() + self.ping_timeout
        while True:
            try:
                self._send_line(serialize_ping())
                line = self._next_line(deadline - time.monotonic())
                resp = json.loads(line)
                ready = bool(resp["ready"])
                self.window = int(resp.get("window", 1))
            except (_ProtocolFault, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise AdapterError(f"ping handshake failed: {exc}\n{self.stderr_tail()}")
            if ready:
                return
            if time.monotonic() > deadline:
                raise AdapterError(f"adapter never became ready\n{self.stderr_tail()}")
            time.sleep(0.05)

    def request(self, serializer) -> dict:
        """Send one request built by ``serializer(req_id)`` and await its response."""
        attempt = 0
        while True:
            req_id = self._next_id
            self._next_id += 1
            try:
                self._send_line(serializer(req_id))
                resp = self._await(req_id)
            except _ProtocolFault as fault:
                attempt += 1
                self.restarts += 1
                if attempt > self.restart_limit:
                    raise AdapterError(
                        f"adapter protocol fault after restart: {fault}\n{self.stderr_tail()}")
                self.close()
                self._pending.clear()
                self._buffer = b""
                self.start()
                continue
            if "error" in resp:
                raise AdapterError(f"adapter rejected request {req_id}: {resp['error']}")
            return resp

    def _await(self, req_id: int) -> dict:
        deadline = time.monotonic() + self.request_timeout
        while True:
            if req_id in self._pending:
                return self._pending.pop(req_id)
            line = self._next_line(deadline - time.monotonic())
            if not line.strip():
                continue
            try:
                resp = json.loads(line)
            except json.JSONDecodeError as exc:
                raise _ProtocolFault(f"malformed response line {line[:80]!r}: {exc}")
            if not isinstance(resp, dict) or "id" not in resp:
                raise _ProtocolFault(f"response without id: {line[:80]!r}")
            if resp["id"] == req_id:
                return resp
            self._pending[resp["id"]] = resp


class AdapterDetector:
    """DetectorHandle over the wire protocol."""

    def __init__(self, process: AdapterProcess):
        self.process = process

    def detect(self, frame: Frame) -> list[Detection]:
        resp = self.process.request(lambda rid: serialize_detect_request(rid, frame))
        try:
            out = []
            for rec in resp["detections"]:
                out.append(Detection(
                    RotatedBox(rec["cx"], rec["cy"], rec["w"], rec["h"], rec["theta_deg"]),
                    DetectionClass(rec["cls"]), rec["conf"], frame.index))
            return out
        except (KeyError, TypeError, ValueError) as exc:
            raise AdapterError(f"bad detect response: {exc}") from exc


class AdapterClassifier:
    """ClassifierHandle over the wire protocol."""

    def __init__(self, process: AdapterProcess):
        self.process = process

    def classify(self, clip: ClipWindow):
        resp = self.process.request(lambda rid: serialize_classify_request(rid, clip))
        try:
            return list(resp["probs"])
        except (KeyError, TypeError) as exc:
            raise AdapterError(f"bad classify response: {exc}") from exc
