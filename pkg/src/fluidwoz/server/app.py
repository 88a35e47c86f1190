"""FastAPI application wrapping one session (live or replay).

The WebSocket endpoint carries the whole control protocol; the REST
endpoints expose read-only session metadata for operators and tests.
"""

from __future__ import annotations

import asyncio
import contextlib
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from pydantic import BaseModel

from ..errors import MalformedMessage
from . import messages as msg


class HealthResponse(BaseModel):
    status: str
    session_id: str
    mode: str
    tick: Optional[int] = None


class SessionInfoResponse(BaseModel):
    session_id: str
    mode: str
    tick: Optional[int] = None
    log_path: Optional[str] = None
    wizard_connected: bool
    clients: int


class ScenarioResponse(BaseModel):
    scenario: dict


class LatencyReportResponse(BaseModel):
    commands: int
    components: dict
    telescoping_ok: bool
    telescoping_violations: list[int]


def create_app(session, lifespan=None) -> FastAPI:
    app = FastAPI(title="fluidwoz", version="0.1.0", lifespan=lifespan)
    app.state.session = session

    @app.get("/healthz", response_model=HealthResponse)
    def healthz():
        info = session.info()
        return HealthResponse(status="ok", session_id=info["session_id"],
                              mode=info["mode"], tick=info["tick"])

    @app.get("/session", response_model=SessionInfoResponse)
    def session_info():
        return SessionInfoResponse(**session.info())

    @app.get("/scenario", response_model=ScenarioResponse)
    def scenario():
        return ScenarioResponse(scenario=session.scenario.to_dict())

    @app.get("/latency/report", response_model=LatencyReportResponse)
    def latency_report():
        return LatencyReportResponse(**session.latency_report_dict())

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        try:
            first = await ws.receive_text()
        except WebSocketDisconnect:
            return
        try:
            hello = msg.parse_client_message(first)
        except MalformedMessage as exc:
            await ws.send_text(msg.dump(msg.refused("bad_hello")))
            await ws.close()
            return
        if not isinstance(hello, msg.Hello):
            await ws.send_text(msg.dump(msg.refused("hello_required")))
            await ws.close()
            return

        client, refuse_code = session.connect(hello.role)
        if client is None:
            await ws.send_text(msg.dump(msg.refused(refuse_code)))
            await ws.close()
            return

        async def sender():
            while True:
                text = await client.queue.get()
                await ws.send_text(text)

        send_task = asyncio.create_task(sender())
        try:
            while True:
                raw = await ws.receive_text()
                if not client.alive:
                    break  # dropped as a slow consumer
                try:
                    parsed = msg.parse_client_message(raw)
                except MalformedMessage as exc:
                    client.push(msg.dump(msg.error("malformed_message", str(exc))))
                    continue
                session.on_message(client, parsed)
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await send_task
            session.disconnect(client)

    return app
