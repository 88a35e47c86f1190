"""Server bootstrap: uvicorn wiring, port checks, and a threaded handle.

serve_forever() is the CLI's blocking entry point. ServerThread runs the
same stack on a background thread with an ephemeral port, which is how the
scripted driver and the tests host loopback sessions.
"""

from __future__ import annotations

import asyncio
import socket
import threading
import time
import uuid
from contextlib import asynccontextmanager
from typing import Optional

import uvicorn

from ..errors import PortInUse
from ..eventlog import EVERY_TICK
from ..model import ValidatedScenario
from .app import create_app
from .live import LiveSession, ReplaySession


def check_port_free(host: str, port: int) -> None:
    if port == 0:
        return
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as s:
        s.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            s.bind((host, port))
        except OSError as exc:
            raise PortInUse(f"{host}:{port}: {exc}") from exc


def new_session_id() -> str:
    return uuid.uuid4().hex[:12]


def build_live_session(scenario: ValidatedScenario, log_dir,
                       snapshot_hz=EVERY_TICK, session_id: Optional[str] = None) -> LiveSession:
    return LiveSession(scenario, log_dir, session_id or new_session_id(),
                       snapshot_hz=snapshot_hz)


def _make_uvicorn(session, host: str, port: int) -> uvicorn.Server:
    # the session's tick loop lives and dies with the server's event loop
    @asynccontextmanager
    async def lifespan(app):
        task = asyncio.create_task(session.run())
        try:
            yield
        finally:
            session.stop()
            await task

    app = create_app(session, lifespan=lifespan)
    config = uvicorn.Config(app, host=host, port=port, log_level="warning", access_log=False)
    return uvicorn.Server(config)


def serve_forever(session, host: str = "127.0.0.1", port: int = 8700) -> None:
    """Run until interrupted (the CLI `serve` path)."""
    check_port_free(host, port)
    server = _make_uvicorn(session, host, port)
    server.run()


class ServerThread:
    """A session server on a background thread, for loopback clients."""

    def __init__(self, session, host: str = "127.0.0.1", port: int = 0):
        check_port_free(host, port)
        self.session = session
        self.host = host
        self._server = _make_uvicorn(session, host, port)
        self._thread = threading.Thread(target=self._server.run, daemon=True)
        self.port: Optional[int] = None

    def start(self, timeout: float = 10.0) -> "ServerThread":
        self._thread.start()
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if self._server.started and self._server.servers:
                socks = self._server.servers[0].sockets
                if socks:
                    self.port = socks[0].getsockname()[1]
                    return self
            time.sleep(0.01)
        raise RuntimeError("server did not start in time")

    @property
    def ws_url(self) -> str:
        return f"ws://{self.host}:{self.port}/ws"

    @property
    def http_url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def stop(self, timeout: float = 10.0) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=timeout)


def make_replay_session(events, speed_factor: float) -> ReplaySession:
    return ReplaySession(events, speed_factor)
