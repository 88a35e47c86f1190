// Client-side session state: everything the canvas needs, no DOM access.

import { MarkerTracker } from './markers.js';
import {
  LatencyMsg,
  ObjectDelta,
  ProgressMsg,
  RobotView,
  Scenario,
  ServerMessage,
  TERMINAL_STATUSES,
} from './protocol.js';

export type ConnectionState = 'connecting' | 'open' | 'lost' | 'refused';

export interface AreaMessage {
  text: string;
  severity: 'error' | 'info';
  atMs: number;
}

const MESSAGE_AREA_LIMIT = 5;
const UTTERANCE_LIMIT = 4;

export class ConsoleState {
  connection: ConnectionState = 'connecting';
  refusedCode: string | null = null;
  sessionId: string | null = null;
  mode: 'live' | 'replay' = 'live';
  scenario: Scenario | null = null;
  robot: RobotView | null = null;
  objects = new Map<string, ObjectDelta>();
  tick = 0;
  markers = new MarkerTracker();
  progress: ProgressMsg | null = null;
  latency: LatencyMsg | null = null;
  utterances: { text: string; commandId: number }[] = [];
  messages: AreaMessage[] = [];
  pendingClick: { x: number; y: number } | null = null;
  cancelPending = false;
  private deltasSinceCancel = 0;

  apply(msg: ServerMessage, nowMs: number): void {
    switch (msg.type) {
      case 'welcome':
        this.connection = 'open';
        this.sessionId = msg.session_id;
        this.mode = msg.mode ?? 'live';
        this.scenario = msg.scenario;
        this.objects.clear();
        for (const obj of msg.scenario.objects ?? []) {
          this.objects.set(obj.id, {
            id: obj.id,
            x: obj.pose.x,
            y: obj.pose.y,
            theta: obj.pose.theta,
            resting_on: obj.resting_on,
          });
        }
        break;
      case 'refused':
        this.connection = 'refused';
        this.refusedCode = msg.code;
        break;
      case 'state_delta':
        this.tick = msg.tick;
        if (msg.robot) this.robot = msg.robot;
        for (const obj of msg.changed_objects ?? []) this.objects.set(obj.id, obj);
        this.noteDelta();
        break;
      case 'keyframe':
        this.tick = msg.tick;
        if (msg.robot && Object.keys(msg.robot).length > 0) this.robot = msg.robot;
        for (const obj of msg.objects ?? []) this.objects.set(obj.id, obj);
        this.noteDelta();
        break;
      case 'goal_status':
        this.markers.apply(msg);
        if (msg.status === 'active' || msg.status === 'pending') {
          this.pendingClick = null;
        }
        if (msg.status === 'rejected') {
          this.pendingClick = null;
          this.pushMessage(`goal rejected: ${msg.reason ?? 'unknown'}`, 'error', nowMs);
        }
        if (msg.status === 'cancelled') {
          this.cancelPending = false;
        }
        if (TERMINAL_STATUSES.has(msg.status) && this.progress?.goal_id === msg.goal_id) {
          this.progress = null;
        }
        break;
      case 'progress':
        this.progress = msg;
        break;
      case 'error':
        this.pushMessage(`${msg.code}: ${msg.message}`, 'error', nowMs);
        break;
      case 'relay_utterance':
        this.utterances.push({ text: msg.text, commandId: msg.command_id });
        if (this.utterances.length > UTTERANCE_LIMIT) this.utterances.shift();
        break;
      case 'latency':
        this.latency = msg;
        break;
    }
  }

  /** Cancel button guard: disabled from send until the cancellation statuses
   * arrive, or until two deltas pass with nothing to cancel. */
  noteCancelSent(): void {
    this.cancelPending = true;
    this.deltasSinceCancel = 0;
  }

  noteConnectionLost(): void {
    this.connection = 'lost';
    this.pendingClick = null;
  }

  private noteDelta(): void {
    if (this.cancelPending && ++this.deltasSinceCancel >= 2) {
      this.cancelPending = false; // empty cancellation: nothing was running
    }
  }

  private pushMessage(text: string, severity: 'error' | 'info', atMs: number): void {
    this.messages.push({ text, severity, atMs });
    if (this.messages.length > MESSAGE_AREA_LIMIT) this.messages.shift();
  }
}
