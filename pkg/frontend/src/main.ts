// Browser entry point. Configuration by URL query: ?host=...&port=...&role=wizard|observer

import { ConsoleClient } from './client.js';
import { Canvas2D, renderFrame } from './render.js';

function param(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

function boot(): void {
  const host = param('host', window.location.hostname || '127.0.0.1');
  const port = param('port', '8700');
  const role = param('role', 'wizard') === 'observer' ? 'observer' : 'wizard';
  const url = `ws://${host}:${port}/ws`;

  const canvas = document.getElementById('world') as HTMLCanvasElement;
  const cancelButton = document.getElementById('cancel') as HTMLButtonElement;
  const roleLabel = document.getElementById('role');
  if (roleLabel) roleLabel.textContent = `${role} @ ${url}`;

  const client = new ConsoleClient({
    url,
    role,
    makeSocket: (u) => new WebSocket(u) as unknown as import('./client.js').SocketLike,
  });
  client.connect();

  canvas.addEventListener('pointerdown', (ev) => {
    const rect = canvas.getBoundingClientRect();
    client.clickAtPixel(ev.clientX - rect.left, ev.clientY - rect.top,
                        canvas.width, canvas.height);
  });
  cancelButton.addEventListener('click', () => client.cancelAll());

  const ctx = canvas.getContext('2d') as unknown as Canvas2D;
  const draw = () => {
    const holder = canvas.parentElement!;
    if (canvas.width !== holder.clientWidth || canvas.height !== holder.clientHeight - 4) {
      canvas.width = holder.clientWidth;
      canvas.height = Math.max(holder.clientHeight - 4, 200);
    }
    renderFrame(ctx, client.state, canvas.width, canvas.height, performance.now());
    cancelButton.disabled = client.state.cancelPending || client.state.connection !== 'open'
      || role !== 'wizard';
    window.requestAnimationFrame(draw);
  };
  window.requestAnimationFrame(draw);
}

window.addEventListener('DOMContentLoaded', boot);
