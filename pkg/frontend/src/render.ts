// Top-down canvas rendering. Pure: state in, draw calls out, never throws on
// partial state (missing robot, empty scenario, lost connection).

import { ConsoleState } from './console.js';
import { ViewTransform } from './transform.js';

// The subset of CanvasRenderingContext2D the renderer touches; tests stub it.
export interface Canvas2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  textAlign: CanvasTextAlign;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

const COLORS = {
  background: '#14161a',
  worldFill: '#1e222a',
  worldEdge: '#3c4454',
  surface: '#6b4f2d',
  surfaceEdge: '#9a7544',
  obstacle: '#4a4f59',
  obstacleEdge: '#646b78',
  item: '#d8c64a',
  itemEdge: '#f2e682',
  robot: '#5aa8e6',
  robotEdge: '#9fd0ff',
  targetLocation: '#e05548',
  targetObject: '#49d17a',
  destination: '#4a7fe0',
  pending: '#aab2c0',
  progressBack: '#2a2f3a',
  progressFill: '#49d17a',
  text: '#d6dae2',
  error: '#ff7b6e',
  banner: '#b33a2f',
};

export function viewTransformFor(state: ConsoleState, width: number,
                                 height: number): ViewTransform | null {
  if (!state.scenario) return null;
  return ViewTransform.fit(state.scenario.world_width, state.scenario.world_height,
                           width, height);
}

export function renderFrame(ctx: Canvas2D, state: ConsoleState, width: number,
                            height: number, nowMs: number): void {
  ctx.globalAlpha = 1;
  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, width, height);

  const vt = viewTransformFor(state, width, height);
  if (vt && state.scenario) {
    drawWorld(ctx, state, vt);
  }
  drawProgressBar(ctx, state, width);
  drawUtterances(ctx, state, width);
  drawMessageArea(ctx, state, width, height);
  drawLatencyHud(ctx, state, width);
  if (state.connection !== 'open') {
    drawBanner(ctx, state, width, height);
  }
}

function drawWorld(ctx: Canvas2D, state: ConsoleState, vt: ViewTransform): void {
  const scenario = state.scenario!;
  const [x0, y1] = vt.toScreen(0, 0);
  const [x1, y0] = vt.toScreen(scenario.world_width, scenario.world_height);
  ctx.fillStyle = COLORS.worldFill;
  ctx.fillRect(x0, y0, x1 - x0, y1 - y0);
  ctx.strokeStyle = COLORS.worldEdge;
  ctx.lineWidth = 1.5;
  ctx.strokeRect(x0, y0, x1 - x0, y1 - y0);

  const byId = new Map(scenario.objects.map((o) => [o.id, o]));
  for (const obj of state.objects.values()) {
    const meta = byId.get(obj.id);
    if (!meta) continue;
    const [hx, hy] = meta.half_extents;
    const [px, py] = vt.toScreen(obj.x - hx, obj.y + hy);
    const w = vt.px(2 * hx);
    const h = vt.px(2 * hy);
    if (meta.kind === 'surface') {
      ctx.fillStyle = COLORS.surface;
      ctx.strokeStyle = COLORS.surfaceEdge;
    } else if (meta.kind === 'obstacle') {
      ctx.fillStyle = COLORS.obstacle;
      ctx.strokeStyle = COLORS.obstacleEdge;
    } else {
      ctx.fillStyle = COLORS.item;
      ctx.strokeStyle = COLORS.itemEdge;
    }
    ctx.lineWidth = 1;
    ctx.fillRect(px, py, w, h);
    ctx.strokeRect(px, py, w, h);
    if (state.markers.markers.targetObject === obj.id) {
      ctx.strokeStyle = COLORS.targetObject;
      ctx.lineWidth = 3;
      ctx.strokeRect(px - 3, py - 3, w + 6, h + 6);
    }
  }

  drawMarkers(ctx, state, vt);
  drawRobot(ctx, state, vt);
}

function drawMarkers(ctx: Canvas2D, state: ConsoleState, vt: ViewTransform): void {
  const markers = state.markers.markers;
  if (markers.targetLocation) {
    const [px, py] = vt.toScreen(markers.targetLocation.x, markers.targetLocation.y);
    ctx.fillStyle = COLORS.targetLocation;
    ctx.beginPath();
    ctx.arc(px, py, 7, 0, 2 * Math.PI);
    ctx.fill();
    ctx.strokeStyle = COLORS.targetLocation;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.arc(px, py, 12, 0, 2 * Math.PI);
    ctx.stroke();
  }
  if (markers.destination) {
    const [px, py] = vt.toScreen(markers.destination.x, markers.destination.y);
    ctx.fillStyle = COLORS.destination;
    ctx.beginPath();
    ctx.arc(px, py, 6, 0, 2 * Math.PI);
    ctx.fill();
  }
  if (state.pendingClick) {
    const [px, py] = vt.toScreen(state.pendingClick.x, state.pendingClick.y);
    ctx.strokeStyle = COLORS.pending;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.arc(px, py, 9, 0, 2 * Math.PI);
    ctx.stroke();
  }
}

function drawRobot(ctx: Canvas2D, state: ConsoleState, vt: ViewTransform): void {
  const robot = state.robot;
  const scenario = state.scenario;
  if (!robot || !scenario) return;
  const [px, py] = vt.toScreen(robot.x, robot.y);
  const r = Math.max(vt.px(scenario.robot.radius), 4);
  ctx.fillStyle = COLORS.robot;
  ctx.beginPath();
  ctx.arc(px, py, r, 0, 2 * Math.PI);
  ctx.fill();
  ctx.strokeStyle = COLORS.robotEdge;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(px, py);
  ctx.lineTo(px + Math.cos(robot.theta) * r * 1.6, py - Math.sin(robot.theta) * r * 1.6);
  ctx.stroke();
  if (robot.carried) {
    ctx.fillStyle = COLORS.item;
    ctx.beginPath();
    ctx.arc(px, py - r - 4, 3, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function drawProgressBar(ctx: Canvas2D, state: ConsoleState, width: number): void {
  if (!state.progress) return;
  const pad = 12;
  const barW = width - 2 * pad;
  ctx.fillStyle = COLORS.progressBack;
  ctx.fillRect(pad, 8, barW, 10);
  ctx.fillStyle = COLORS.progressFill;
  ctx.fillRect(pad, 8, barW * Math.min(Math.max(state.progress.fraction, 0), 1), 10);
  ctx.fillStyle = COLORS.text;
  ctx.font = '12px monospace';
  ctx.textAlign = 'left';
  ctx.fillText(
    `goal ${state.progress.goal_id} ${state.progress.phase} ` +
    `${Math.round(state.progress.fraction * 100)}% ` +
    `eta ${state.progress.est_remaining_ms}ms`,
    pad, 32,
  );
}

function drawUtterances(ctx: Canvas2D, state: ConsoleState, width: number): void {
  ctx.font = '13px sans-serif';
  ctx.textAlign = 'right';
  ctx.fillStyle = COLORS.text;
  let y = 20;
  for (const u of state.utterances.slice(-4)) {
    ctx.fillText(`user: “${u.text}”`, width - 12, y);
    y += 18;
  }
}

function drawMessageArea(ctx: Canvas2D, state: ConsoleState, width: number,
                         height: number): void {
  ctx.font = '13px monospace';
  ctx.textAlign = 'left';
  let y = height - 12;
  for (const m of [...state.messages].reverse().slice(0, 5)) {
    ctx.fillStyle = m.severity === 'error' ? COLORS.error : COLORS.text;
    ctx.fillText(m.text, 12, y);
    y -= 18;
  }
}

function drawLatencyHud(ctx: Canvas2D, state: ConsoleState, width: number): void {
  if (!state.latency) return;
  const parts: string[] = [];
  const bd = state.latency;
  if (bd.l1_ms != null) parts.push(`L1 ${bd.l1_ms}`);
  if (bd.l2_ms != null) parts.push(`L2 ${bd.l2_ms}`);
  if (bd.l3_ms != null) parts.push(`L3 ${bd.l3_ms}`);
  if (bd.l4_ms != null) parts.push(`L4 ${bd.l4_ms}`);
  if (!parts.length) return;
  ctx.font = '12px monospace';
  ctx.textAlign = 'right';
  ctx.fillStyle = COLORS.text;
  ctx.fillText(`latency ms: ${parts.join('  ')}`, width - 12, 40 + 18 * 4);
}

function drawBanner(ctx: Canvas2D, state: ConsoleState, width: number,
                    height: number): void {
  const text = state.connection === 'refused'
    ? `connection refused: ${state.refusedCode ?? 'unknown'}`
    : state.connection === 'lost'
      ? 'connection lost - reconnecting...'
      : 'connecting...';
  ctx.globalAlpha = 0.92;
  ctx.fillStyle = COLORS.banner;
  ctx.fillRect(0, height / 2 - 22, width, 44);
  ctx.globalAlpha = 1;
  ctx.fillStyle = '#ffffff';
  ctx.font = '15px sans-serif';
  ctx.textAlign = 'left';
  ctx.fillText(text, 16, height / 2 + 5);
}
