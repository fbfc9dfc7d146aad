/** WebSocket wiring: handshake, reconnect with backoff, tick-rate input
 * pump.  All state flows through the ViewModel; this module only moves
 * messages. */

import { InputState } from "./input";
import { ClientMessage, PROTOCOL_VERSION } from "./protocol";
import { reconnectDelayMs, ViewModel } from "./viewmodel";

// structural subset of the DOM WebSocket; `any` keeps the real WebSocket
// assignable despite its `this`-typed handler signatures
export interface SocketLike {
  send(data: string): void;
  close(): void;
  // eslint-disable-next-line @typescript-eslint/no-explicit-any
  onopen: ((ev?: any) => void) | null;
  // eslint-disable-next-line @typescript-eslint/no-explicit-any
  onmessage: ((ev: any) => void) | null;
  // eslint-disable-next-line @typescript-eslint/no-explicit-any
  onclose: ((ev?: any) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export class TeleopClient {
  readonly vm = new ViewModel();
  readonly input = new InputState();
  private socket: SocketLike | null = null;
  private attempt = 0;
  private closed = false;

  constructor(
    private url: string,
    private makeSocket: SocketFactory,
    private schedule: (fn: () => void, ms: number) => void = (fn, ms) =>
      setTimeout(fn, ms),
  ) {}

  connect(): void {
    this.closed = false;
    this.vm.status = "connecting";
    const ws = this.makeSocket(this.url);
    this.socket = ws;
    ws.onopen = () => {
      this.attempt = 0;
      this.vm.onConnected();
      ws.send(JSON.stringify({ type: "hello", protocol_version: PROTOCOL_VERSION }));
    };
    ws.onmessage = (ev) => {
      let doc: unknown;
      try {
        doc = JSON.parse(ev.data);
      } catch {
        this.vm.malformedMessages += 1;
        return;
      }
      this.vm.apply(doc);
    };
    ws.onclose = () => {
      this.vm.onDisconnected();
      if (this.closed) return;
      const delay = reconnectDelayMs(this.attempt);
      this.attempt += 1;
      this.schedule(() => this.connect(), delay);
    };
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }

  send(msg: ClientMessage): void {
    this.socket?.send(JSON.stringify(msg));
  }

  /** Called once per tick: forwards the current operator command, if any. */
  pumpInput(): void {
    if (this.vm.status !== "connected" || !this.vm.session) return;
    const v = this.input.poll();
    if (v === null) return;
    this.send({
      type: "operator_input",
      session: this.vm.session,
      vx: v.vx,
      vy: v.vy,
    });
  }
}
