// Wire types for the fluidwoz WebSocket protocol (the subset the console uses).

export interface ScenarioObject {
  id: string;
  kind: 'item' | 'surface' | 'obstacle';
  pose: { x: number; y: number; theta: number };
  half_extents: [number, number];
  graspable: boolean;
  resting_on: string | null;
}

export interface Scenario {
  world_width: number;
  world_height: number;
  cell_size: number;
  tick_ms: number;
  robot: {
    spawn: { x: number; y: number; theta: number };
    radius: number;
    reach_radius: number;
    [k: string]: unknown;
  };
  objects: ScenarioObject[];
}

export interface RobotView {
  x: number;
  y: number;
  theta: number;
  linear_velocity: number;
  arm_extension: number;
  gripper: string;
  carried: string | null;
}

export interface ObjectDelta {
  id: string;
  x: number;
  y: number;
  theta: number;
  resting_on: string | null;
}

export interface WelcomeMsg {
  type: 'welcome';
  session_id: string;
  scenario: Scenario;
  mode: 'live' | 'replay';
}

export interface RefusedMsg {
  type: 'refused';
  code: string;
}

export interface StateDeltaMsg {
  type: 'state_delta';
  tick: number;
  t_mono_ms: number;
  robot: RobotView | null;
  changed_objects: ObjectDelta[];
}

export interface KeyframeMsg {
  type: 'keyframe';
  tick: number;
  t_mono_ms: number;
  robot: RobotView | null;
  objects: ObjectDelta[];
}

export type GoalVariant =
  | { kind: 'navigate_to'; x: number; y: number }
  | { kind: 'pick'; object_id: string }
  | { kind: 'place'; x: number; y: number };

export interface GoalStatusMsg {
  type: 'goal_status';
  tick: number;
  goal_id: number;
  status: 'pending' | 'active' | 'succeeded' | 'preempted' | 'cancelled' | 'rejected' | 'failed';
  reason: string | null;
  command_id: number | null;
  variant: GoalVariant | null;
}

export interface ProgressMsg {
  type: 'progress';
  goal_id: number;
  phase: string;
  fraction: number;
  est_remaining_ms: number;
}

export interface ErrorMsg {
  type: 'error';
  code: string;
  message: string;
}

export interface RelayUtteranceMsg {
  type: 'relay_utterance';
  text: string;
  command_id: number;
}

export interface LatencyMsg {
  type: 'latency';
  command_id: number;
  l1_ms: number | null;
  l2_ms: number | null;
  l3_ms: number | null;
  l4_ms: number | null;
}

export type ServerMessage =
  | WelcomeMsg
  | RefusedMsg
  | StateDeltaMsg
  | KeyframeMsg
  | GoalStatusMsg
  | ProgressMsg
  | ErrorMsg
  | RelayUtteranceMsg
  | LatencyMsg;

export const TERMINAL_STATUSES = new Set([
  'succeeded', 'preempted', 'cancelled', 'rejected', 'failed',
]);

export function parseServerMessage(raw: string): ServerMessage | null {
  try {
    const m = JSON.parse(raw);
    return typeof m === 'object' && m !== null && typeof m.type === 'string' ? m : null;
  } catch {
    return null;
  }
}
