"""Streaming service: newline-delimited JSON over TCP and WebSocket.

One listener serves both transports: a connection opening with an HTTP GET
is upgraded to a WebSocket (for browsers), anything else is treated as a
plain ndjson stream.  Every observer gets a config message on connect, then
the live record stream; inbound ``{"kind":"subject",...}`` messages steer
the simulated subject.  Slow clients never stall the pipeline: each client
owns a bounded buffer that drops oldest records, and broadcast is
fire-and-forget.
"""

from __future__ import annotations

import base64
import hashlib
import json
import socket
import struct
import threading
from collections import deque

CLIENT_BUFFER = 256
WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def parse_address(addr: str):
    host, _, port = addr.rpartition(":")
    return host or "127.0.0.1", int(port)


class _Client:
    def __init__(self, sock: socket.socket, is_ws: bool):
        self.sock = sock
        self.is_ws = is_ws
        self.buffer = deque(maxlen=CLIENT_BUFFER)
        self.dropped = 0
        self.ready = threading.Condition()
        self.alive = True

    def push(self, line: str):
        with self.ready:
            if len(self.buffer) == self.buffer.maxlen:
                self.dropped += 1
            self.buffer.append(line)
            self.ready.notify()


def _ws_accept_key(key: str) -> str:
    digest = hashlib.sha1((key + WS_GUID).encode()).digest()
    return base64.b64encode(digest).decode()


def _ws_encode_text(payload: bytes) -> bytes:
    header = bytearray([0x81])
    n = len(payload)
    if n < 126:
        header.append(n)
    elif n < 65536:
        header.append(126)
        header += struct.pack(">H", n)
    else:
        header.append(127)
        header += struct.pack(">Q", n)
    return bytes(header) + payload


def _ws_read_frame(sock: socket.socket):
    """Returns (opcode, payload) or None on EOF; unmasks client frames."""
    head = _read_exact(sock, 2)
    if head is None:
        return None
    b0, b1 = head
    opcode = b0 & 0x0F
    masked = b1 & 0x80
    length = b1 & 0x7F
    if length == 126:
        ext = _read_exact(sock, 2)
        if ext is None:
            return None
        length = struct.unpack(">H", ext)[0]
    elif length == 127:
        ext = _read_exact(sock, 8)
        if ext is None:
            return None
        length = struct.unpack(">Q", ext)[0]
    mask = b""
    if masked:
        mask = _read_exact(sock, 4)
        if mask is None:
            return None
    payload = _read_exact(sock, length) if length else b""
    if payload is None:
        return None
    if masked:
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return opcode, payload


def _read_exact(sock: socket.socket, n: int):
    buf = b""
    while len(buf) < n:
        try:
            chunk = sock.recv(n - len(buf))
        except OSError:
            return None
        if not chunk:
            return None
        buf += chunk
    return buf


class StreamServer:
    """Fans a record stream out to observers and feeds steering back.

    ``on_steer(x, y, absent)`` is invoked for valid subject messages;
    malformed input is reported through ``on_diagnostic`` and ignored.
    """

    def __init__(self, address: str, config_message: dict,
                 on_steer=None, on_diagnostic=None):
        self.host, self.port = parse_address(address)
        self.config_message = config_message
        self.on_steer = on_steer
        self.on_diagnostic = on_diagnostic
        self._clients: list[_Client] = []
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((self.host, self.port))
        self.port = self._sock.getsockname()[1]
        self._sock.listen(16)
        self._accept_thread = threading.Thread(target=self._accept_loop,
                                               daemon=True)

    def start(self):
        self._accept_thread.start()
        return self

    @property
    def address(self) -> str:
        return f"{self.host}:{self.port}"

    def n_clients(self) -> int:
        with self._lock:
            return len(self._clients)

    def broadcast(self, record: dict):
        line = json.dumps(record, sort_keys=True, separators=(",", ":"))
        with self._lock:
            clients = list(self._clients)
        for c in clients:
            c.push(line)

    def _accept_loop(self):
        while not self._stop.is_set():
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            threading.Thread(target=self._serve_client, args=(conn,),
                             daemon=True).start()

    def _serve_client(self, conn: socket.socket):
        # browsers send their GET immediately; a silent peer is a plain
        # ndjson observer, so a short peek window is enough to classify
        conn.settimeout(0.4)
        try:
            first = conn.recv(4, socket.MSG_PEEK)
        except socket.timeout:
            first = b""
        except OSError:
            conn.close()
            return
        conn.settimeout(10.0)
        is_ws = first.startswith(b"GET")
        if is_ws and not self._ws_handshake(conn):
            conn.close()
            return
        conn.settimeout(None)
        client = _Client(conn, is_ws)
        client.push(json.dumps(self.config_message, sort_keys=True,
                               separators=(",", ":")))
        with self._lock:
            self._clients.append(client)
        writer = threading.Thread(target=self._writer_loop, args=(client,),
                                  daemon=True)
        writer.start()
        try:
            self._reader_loop(client)
        finally:
            client.alive = False
            with client.ready:
                client.ready.notify()
            with self._lock:
                if client in self._clients:
                    self._clients.remove(client)
            try:
                conn.close()
            except OSError:
                pass

    def _ws_handshake(self, conn: socket.socket) -> bool:
        data = b""
        while b"\r\n\r\n" not in data:
            try:
                chunk = conn.recv(4096)
            except OSError:
                return False
            if not chunk:
                return False
            data += chunk
            if len(data) > 65536:
                return False
        headers = {}
        for line in data.split(b"\r\n")[1:]:
            if b":" in line:
                k, v = line.split(b":", 1)
                headers[k.strip().lower().decode()] = v.strip().decode()
        key = headers.get("sec-websocket-key")
        if key is None:
            return False
        resp = ("HTTP/1.1 101 Switching Protocols\r\n"
                "Upgrade: websocket\r\n"
                "Connection: Upgrade\r\n"
                f"Sec-WebSocket-Accept: {_ws_accept_key(key)}\r\n\r\n")
        try:
            conn.sendall(resp.encode())
        except OSError:
            return False
        return True

    def _writer_loop(self, client: _Client):
        while client.alive and not self._stop.is_set():
            with client.ready:
                while not client.buffer and client.alive and not self._stop.is_set():
                    client.ready.wait(0.25)
                if not client.buffer:
                    continue
                line = client.buffer.popleft()
            data = (_ws_encode_text(line.encode()) if client.is_ws
                    else line.encode() + b"\n")
            try:
                client.sock.sendall(data)
            except OSError:
                client.alive = False
                return

    def _reader_loop(self, client: _Client):
        if client.is_ws:
            while client.alive and not self._stop.is_set():
                frame = _ws_read_frame(client.sock)
                if frame is None:
                    return
                opcode, payload = frame
                if opcode == 0x8:  # close
                    return
                if opcode == 0x9:  # ping -> pong
                    try:
                        client.sock.sendall(b"\x8a" + bytes([len(payload)])
                                            + payload)
                    except OSError:
                        return
                    continue
                if opcode in (0x1, 0x2):
                    self._handle_inbound(payload)
        else:
            buf = b""
            while client.alive and not self._stop.is_set():
                try:
                    chunk = client.sock.recv(4096)
                except OSError:
                    return
                if not chunk:
                    return
                buf += chunk
                while b"\n" in buf:
                    line, buf = buf.split(b"\n", 1)
                    if line.strip():
                        self._handle_inbound(line)

    def _handle_inbound(self, payload: bytes):
        try:
            msg = json.loads(payload.decode())
            if not isinstance(msg, dict):
                raise ValueError("not an object")
        except (ValueError, UnicodeDecodeError) as exc:
            self._diag("malformed_inbound", {"error": str(exc)})
            return
        if msg.get("kind") != "subject":
            self._diag("unknown_inbound_kind", {"kind": msg.get("kind")})
            return
        try:
            x = float(msg["x"])
            y = float(msg["y"])
            absent = bool(msg.get("absent", False))
        except (KeyError, TypeError, ValueError) as exc:
            self._diag("malformed_inbound", {"error": str(exc)})
            return
        if self.on_steer is not None:
            self.on_steer(x, y, absent)

    def _diag(self, event: str, detail: dict):
        if self.on_diagnostic is not None:
            self.on_diagnostic(event, detail)

    def close(self):
        self._stop.set()
        try:
            self._sock.close()
        except OSError:
            pass
        with self._lock:
            clients = list(self._clients)
            self._clients.clear()
        for c in clients:
            c.alive = False
            with c.ready:
                c.ready.notify()
            try:
                c.sock.close()
            except OSError:
                pass
