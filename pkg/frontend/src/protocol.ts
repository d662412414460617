// Wire protocol: one JSON object per WebSocket text frame, monotone
// sequence numbers per direction. Unknown top-level fields are ignored.

export type MessageKind = "hello" | "config" | "command" | "state" | "plan" | "event";

export interface DriveMessage {
  kind: MessageKind;
  seq: number;
  payload: Record<string, unknown>;
}

export interface StatePayload {
  tick: number;
  x: number;
  y: number;
  theta: number;
  v: number;
  omega: number;
  degradation: number[];
  safety_count: number;
}

export interface PlanPayload {
  points: [number, number][];
  value: number;
  confidence: number[];
}

export interface HazardGridDoc {
  origin: [number, number];
  resolution: number;
  rows: number;
  cols: number;
  data: number[];
}

const KINDS: ReadonlySet<string> = new Set([
  "hello", "config", "command", "state", "plan", "event",
]);

export function decodeMessage(text: string): DriveMessage {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch {
    throw new Error("invalid JSON frame");
  }
  if (typeof obj !== "object" || obj === null) {
    throw new Error("frame must be an object");
  }
  const rec = obj as Record<string, unknown>;
  if (typeof rec.kind !== "string" || !KINDS.has(rec.kind)) {
    throw new Error(`unknown message kind '${rec.kind}'`);
  }
  if (typeof rec.seq !== "number" || !Number.isInteger(rec.seq)) {
    throw new Error("seq must be an integer");
  }
  const payload = (rec.payload ?? {}) as Record<string, unknown>;
  if (typeof payload !== "object" || payload === null) {
    throw new Error("payload must be an object");
  }
  return { kind: rec.kind as MessageKind, seq: rec.seq, payload };
}

export function encodeMessage(msg: DriveMessage): string {
  return JSON.stringify({ kind: msg.kind, seq: msg.seq, payload: msg.payload });
}

export class OutboundCounter {
  private next = 0;

  stamp(kind: MessageKind, payload: Record<string, unknown>): DriveMessage {
    return { kind, seq: this.next++, payload };
  }
}

export function isStateMessage(msg: DriveMessage): boolean {
  return msg.kind === "state";
}

export function asStatePayload(msg: DriveMessage): StatePayload {
  const p = msg.payload as unknown as StatePayload;
  return {
    tick: Number(p.tick),
    x: Number(p.x),
    y: Number(p.y),
    theta: Number(p.theta),
    v: Number(p.v),
    omega: Number(p.omega),
    degradation: (p.degradation ?? [0, 0, 0, 0]).map(Number),
    safety_count: Number(p.safety_count ?? 0),
  };
}
