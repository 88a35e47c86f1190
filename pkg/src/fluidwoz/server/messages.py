"""Wire protocol: JSON text messages, one per WebSocket frame.

Client->server messages are validated with pydantic models discriminated on
the `type` tag. Server->client messages are built as plain dicts and
serialized once per broadcast.
"""

from __future__ import annotations

import json
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, Field, TypeAdapter, ValidationError

from ..errors import MalformedMessage

ROLE_WIZARD = "wizard"
ROLE_USER = "user"
ROLE_OBSERVER = "observer"


class Hello(BaseModel):
    type: Literal["hello"]
    role: Literal["wizard", "user", "observer"]
    client_info: dict = Field(default_factory=dict)


class Click(BaseModel):
    type: Literal["click"]
    x: float
    y: float
    client_t_ms: Optional[int] = None


class CancelAll(BaseModel):
    type: Literal["cancel_all"]
    client_t_ms: Optional[int] = None


class Utterance(BaseModel):
    type: Literal["utterance"]
    text: str
    client_t_ms: Optional[int] = None


class ViewPose(BaseModel):
    type: Literal["view_pose"]
    pose: dict


class Controller(BaseModel):
    type: Literal["controller"]
    action: str
    value: Optional[float] = None


class AckDelta(BaseModel):
    type: Literal["ack_delta"]
    tick: int


ClientMessage = Annotated[
    Union[Hello, Click, CancelAll, Utterance, ViewPose, Controller, AckDelta],
    Field(discriminator="type"),
]

_client_adapter: TypeAdapter = TypeAdapter(ClientMessage)


def parse_client_message(text: str):
    try:
        return _client_adapter.validate_json(text)
    except ValidationError as exc:
        raise MalformedMessage(str(exc.errors()[0].get("msg", "invalid message"))) from None


def dump(msg: dict) -> str:
    return json.dumps(msg, separators=(",", ":"))


def welcome(session_id: str, scenario: dict, mode: str = "live") -> dict:
    return {"type": "welcome", "session_id": session_id, "scenario": scenario, "mode": mode}


def refused(code: str) -> dict:
    return {"type": "refused", "code": code}


def error(code: str, message: str) -> dict:
    return {"type": "error", "code": code, "message": message}


def state_delta(tick: int, t_mono_ms: int, robot: dict, changed_objects: list[dict]) -> dict:
    return {
        "type": "state_delta",
        "tick": tick,
        "t_mono_ms": t_mono_ms,
        "robot": robot,
        "changed_objects": changed_objects,
    }


def keyframe(tick: int, t_mono_ms: int, robot: dict, objects: list[dict]) -> dict:
    return {
        "type": "keyframe",
        "tick": tick,
        "t_mono_ms": t_mono_ms,
        "robot": robot,
        "objects": objects,
    }


def goal_status(payload: dict, tick: int) -> dict:
    return {"type": "goal_status", "tick": tick, **payload}


def progress(report: dict) -> dict:
    return {"type": "progress", **report}


def relay_utterance(text: str, command_id: int) -> dict:
    return {"type": "relay_utterance", "text": text, "command_id": command_id}


def latency(breakdown: dict) -> dict:
    return {"type": "latency", **breakdown}
