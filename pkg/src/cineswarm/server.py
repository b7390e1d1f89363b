"""TCP bridge between a running session and dashboard clients.

Speaks the same newline-delimited JSON as the in-process bus: every bus
message is forwarded to every connected client, and any DASH_CMD line a
client sends is queued for the session to apply on its next tick. The
accept/reader threads never touch simulation state directly.
"""

from __future__ import annotations

import queue
import socket
import threading

from .bus import DASH_CMD, WireError, WireMessage, decode_message, encode_message


class DashboardServer:
    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self._sock = socket.create_server((host, port))
        self.address: tuple[str, int] = self._sock.getsockname()[:2]
        self._clients: list[socket.socket] = []
        self._lock = threading.Lock()
        self._commands: "queue.SimpleQueue[dict]" = queue.SimpleQueue()
        self._closing = False
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    # ------------------------------------------------------------ session side

    def forward(self, msg: WireMessage):
        """Bus tap: push one message to every connected client."""
        line = encode_message(msg).encode()
        with self._lock:
            clients = list(self._clients)
        for c in clients:
            try:
                c.sendall(line)
            except OSError:
                self._drop(c)

    def take_commands(self) -> list[dict]:
        out = []
        while True:
            try:
                out.append(self._commands.get_nowait())
            except queue.Empty:
                return out

    def close(self):
        self._closing = True
        try:
            self._sock.close()
        except OSError:
            pass
        with self._lock:
            clients, self._clients = self._clients, []
        for c in clients:
            try:
                c.close()
            except OSError:
                pass

    # ------------------------------------------------------------ socket side

    def _accept_loop(self):
        while not self._closing:
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            with self._lock:
                self._clients.append(conn)
            t = threading.Thread(target=self._reader, args=(conn,), daemon=True)
            t.start()

    def _reader(self, conn: socket.socket):
        buf = b""
        while not self._closing:
            try:
                chunk = conn.recv(4096)
            except OSError:
                break
            if not chunk:
                break
            buf += chunk
            while b"\n" in buf:
                line, buf = buf.split(b"\n", 1)
                self._ingest(line.decode(errors="replace"))
        self._drop(conn)

    def _ingest(self, line: str):
        if not line.strip():
            return
        try:
            msg = decode_message(line)
        except WireError:
            return
        if msg.type == DASH_CMD:
            self._commands.put(msg.payload)

    def _drop(self, conn: socket.socket):
        with self._lock:
            if conn in self._clients:
                self._clients.remove(conn)
        try:
            conn.close()
        except OSError:
            pass
