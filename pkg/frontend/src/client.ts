// WebSocket wiring: handshake, reconnect with backoff, outbound commands.
// The socket implementation is injected so node tests can pass `ws`.

import { ConsoleState } from './console.js';
import { parseServerMessage } from './protocol.js';
import { viewTransformFor } from './render.js';

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ConsoleClientOptions {
  url: string;
  role: 'wizard' | 'observer';
  makeSocket: SocketFactory;
  now?: () => number;
  reconnectDelayMs?: number;
}

export class ConsoleClient {
  readonly state = new ConsoleState();
  private socket: SocketLike | null = null;
  private closed = false;
  private readonly now: () => number;

  constructor(private readonly opts: ConsoleClientOptions) {
    this.now = opts.now ?? (() => Date.now());
  }

  connect(): void {
    this.state.connection = 'connecting';
    const socket = this.opts.makeSocket(this.opts.url);
    this.socket = socket;
    socket.onopen = () => {
      socket.send(JSON.stringify({ type: 'hello', role: this.opts.role }));
    };
    socket.onmessage = (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg) this.state.apply(msg, this.now());
    };
    socket.onclose = () => {
      if (this.closed || this.state.connection === 'refused') return;
      this.state.noteConnectionLost();
      setTimeout(() => {
        if (!this.closed) this.connect();
      }, this.opts.reconnectDelayMs ?? 1000);
    };
    socket.onerror = () => { /* onclose follows; banner handles it */ };
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }

  /** Pixel-space click: inverse transform, send, show the optimistic marker.
   * Clicks while disconnected are dropped (the banner explains why). */
  clickAtPixel(px: number, py: number, canvasW: number, canvasH: number): boolean {
    if (this.state.connection !== 'open' || this.opts.role !== 'wizard') return false;
    const vt = viewTransformFor(this.state, canvasW, canvasH);
    if (!vt) return false;
    const [x, y] = vt.toWorld(px, py);
    this.state.pendingClick = { x, y };
    this.socket!.send(JSON.stringify({ type: 'click', x, y, client_t_ms: this.now() }));
    return true;
  }

  /** Cancel-all with the idempotence guard (no-op while one is in flight). */
  cancelAll(): boolean {
    if (this.state.connection !== 'open' || this.opts.role !== 'wizard') return false;
    if (this.state.cancelPending) return false;
    this.state.noteCancelSent();
    this.socket!.send(JSON.stringify({ type: 'cancel_all', client_t_ms: this.now() }));
    return true;
  }
}
