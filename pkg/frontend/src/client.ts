// Connection management: WebSocket session, map fetch, and the fixed-rate
// command loop (10 Hz regardless of render frame rate).

import { InputState } from "./input.js";
import { DriveMessage, HazardGridDoc, OutboundCounter, decodeMessage, encodeMessage } from "./protocol.js";
import { ViewStore } from "./store.js";

export const COMMAND_PERIOD_MS = 100;

// minimal socket surface so node tests can plug in the `ws` package
export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "open" | "message" | "close" | "error",
                   handler: (event: { data?: unknown }) => void): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientOptions {
  server: string;              // e.g. "127.0.0.1:8700"
  socketFactory: SocketFactory;
  setIntervalFn?: typeof setInterval;
  clearIntervalFn?: typeof clearInterval;
}

export class DriveClient {
  readonly store: ViewStore;
  readonly input: InputState;
  private readonly counter = new OutboundCounter();
  private socket: SocketLike | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private readonly opts: ClientOptions;
  commandsSent = 0;

  constructor(opts: ClientOptions, store = new ViewStore(), input = new InputState()) {
    this.opts = opts;
    this.store = store;
    this.input = input;
  }

  connect(): Promise<void> {
    const url = `ws://${this.opts.server}/drive`;
    const socket = this.opts.socketFactory(url);
    this.socket = socket;
    socket.addEventListener("message", (event) => {
      let msg: DriveMessage;
      try {
        msg = decodeMessage(String(event.data));
      } catch {
        return; // the service reports malformed frames; nothing to do here
      }
      this.store.applyMessage(msg);
    });
    socket.addEventListener("close", () => {
      this.store.setConnected(false);
      this.stopCommandLoop();
    });
    return new Promise((resolve, reject) => {
      socket.addEventListener("open", () => {
        this.store.setConnected(true);
        this.startCommandLoop();
        resolve();
      });
      socket.addEventListener("error", () => reject(new Error("socket error")));
    });
  }

  private startCommandLoop(): void {
    const setIntervalFn = this.opts.setIntervalFn ?? setInterval;
    this.timer = setIntervalFn(() => this.sendCommand(), COMMAND_PERIOD_MS);
  }

  private stopCommandLoop(): void {
    if (this.timer !== null) {
      (this.opts.clearIntervalFn ?? clearInterval)(this.timer);
      this.timer = null;
    }
  }

  sendCommand(): void {
    if (!this.socket) {
      return;
    }
    const command = this.input.update(COMMAND_PERIOD_MS / 1000);
    this.store.setCommand(command);
    const msg = this.counter.stamp("command",
                                   { v_d: command.v_d, omega_d: command.omega_d });
    this.socket.send(encodeMessage(msg));
    this.commandsSent += 1;
  }

  close(): void {
    this.stopCommandLoop();
    this.socket?.close();
    this.socket = null;
  }
}

export async function fetchMap(server: string,
                               fetchFn: typeof fetch = fetch): Promise<HazardGridDoc> {
  const response = await fetchFn(`http://${server}/map`);
  if (!response.ok) {
    throw new Error(`map fetch failed: ${response.status}`);
  }
  return (await response.json()) as HazardGridDoc;
}
