// View-state store. Snapshots swap atomically: message handlers assemble a
// complete frozen snapshot and publish it with one reference assignment, so
// the render loop never observes a half-applied update.

import { Command } from "./input.js";
import { DriveMessage, HazardGridDoc, PlanPayload, StatePayload, asStatePayload } from "./protocol.js";

export interface ViewSnapshot {
  state: StatePayload | null;
  plan: PlanPayload | null;
  command: Command;
  connected: boolean;
  lastEvent: string;
}

export class ViewStore {
  map: HazardGridDoc | null = null;
  private snapshot: ViewSnapshot = Object.freeze({
    state: null, plan: null, command: { v_d: 0, omega_d: 0 },
    connected: false, lastEvent: "",
  });

  latest(): ViewSnapshot {
    return this.snapshot;
  }

  private publish(patch: Partial<ViewSnapshot>): void {
    this.snapshot = Object.freeze({ ...this.snapshot, ...patch });
  }

  setMap(doc: HazardGridDoc): void {
    this.map = doc;
  }

  setConnected(connected: boolean): void {
    this.publish({ connected });
  }

  setCommand(command: Command): void {
    this.publish({ command: { ...command } });
  }

  applyMessage(msg: DriveMessage): void {
    switch (msg.kind) {
      case "state":
        this.publish({ state: asStatePayload(msg) });
        break;
      case "plan":
        this.publish({ plan: msg.payload as unknown as PlanPayload });
        break;
      case "event": {
        const kind = String(msg.payload["type"] ?? "event");
        const tick = msg.payload["tick"];
        this.publish({ lastEvent: tick !== undefined ? `${kind} @ ${tick}` : kind });
        break;
      }
      default:
        break; // hello/config carry no view state
    }
  }
}
