/** Transport abstraction: one persistent connection carrying text frames.
 *
 * The browser app uses `WsTransport`; tests use `LoopbackHub` (frame-clocked
 * in-memory delivery, for latency measurements) and `CapturingTransport`
 * (records everything a view emits).
 */

export interface Transport {
  onopen: (() => void) | null;
  onframe: ((frame: string) => void) | null;
  onclose: ((reason: string) => void) | null;
  send(frame: string): void;
  close(): void;
}

export type TransportFactory = () => Transport;

export class WsTransport implements Transport {
  onopen: (() => void) | null = null;
  onframe: ((frame: string) => void) | null = null;
  onclose: ((reason: string) => void) | null = null;

  private socket: WebSocket;

  constructor(url: string) {
    this.socket = new WebSocket(url);
    this.socket.onopen = () => this.onopen?.();
    this.socket.onmessage = (ev) => this.onframe?.(String(ev.data));
    this.socket.onclose = (ev) => this.onclose?.(ev.reason || `code ${ev.code}`);
    this.socket.onerror = () => {
      // The close event follows with the detail; nothing to do here.
    };
  }

  send(frame: string): void {
    this.socket.send(frame);
  }

  close(): void {
    this.socket.close();
  }
}

/** In-memory endpoint wired to a LoopbackHub. */
export class LoopbackEndpoint implements Transport {
  onopen: (() => void) | null = null;
  onframe: ((frame: string) => void) | null = null;
  onclose: ((reason: string) => void) | null = null;

  readonly name: string;
  readonly inbox: string[] = [];
  closed = false;

  private hub: LoopbackHub;

  constructor(hub: LoopbackHub, name: string) {
    this.hub = hub;
    this.name = name;
  }

  send(frame: string): void {
    if (this.closed) throw new Error(`endpoint ${this.name} is closed`);
    this.hub.submit(this.name, frame);
  }

  close(): void {
    this.closed = true;
    this.onclose?.("closed locally");
  }
}

/** Frame-clocked hub: frames submitted during one interval are delivered on
 * the next `tick()`, so delivery latency is measurable in whole frame
 * intervals. Routing is a caller-supplied function from sender name to the
 * list of receiving endpoint names. */
export class LoopbackHub {
  private endpoints = new Map<string, LoopbackEndpoint>();
  private pending: { from: string; frame: string }[] = [];
  private route: (from: string, frame: string) => string[];

  constructor(route: (from: string, frame: string) => string[]) {
    this.route = route;
  }

  endpoint(name: string): LoopbackEndpoint {
    const ep = new LoopbackEndpoint(this, name);
    this.endpoints.set(name, ep);
    return ep;
  }

  submit(from: string, frame: string): void {
    this.pending.push({ from, frame });
  }

  /** Deliver everything submitted before this call; one frame interval. */
  tick(): void {
    const batch = this.pending;
    this.pending = [];
    for (const { from, frame } of batch) {
      for (const target of this.route(from, frame)) {
        const ep = this.endpoints.get(target);
        if (ep && !ep.closed) {
          ep.inbox.push(frame);
          ep.onframe?.(frame);
        }
      }
    }
  }
}

/** Records outbound frames; inbound frames are injected by the test. */
export class CapturingTransport implements Transport {
  onopen: (() => void) | null = null;
  onframe: ((frame: string) => void) | null = null;
  onclose: ((reason: string) => void) | null = null;

  readonly sent: string[] = [];
  closed = false;

  send(frame: string): void {
    this.sent.push(frame);
  }

  close(): void {
    this.closed = true;
    this.onclose?.("closed locally");
  }

  open(): void {
    this.onopen?.();
  }

  deliver(frame: string): void {
    this.onframe?.(frame);
  }
}
