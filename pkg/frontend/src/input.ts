// Keyboard-to-command mapping: held keys ramp the commanded velocities
// toward their limits, released axes decay back to zero.

export interface HeldKeys {
  forward: boolean;
  back: boolean;
  left: boolean;
  right: boolean;
}

export interface Command {
  v_d: number;
  omega_d: number;
}

export const RAMP_RATE = 2.0;   // commanded units per second while held
export const DECAY_RATE = 1.0;  // units per second toward zero when released

function clip(value: number): number {
  return Math.min(1.0, Math.max(-1.0, value));
}

function rampAxis(value: number, direction: number, dt: number): number {
  if (direction !== 0) {
    return clip(value + RAMP_RATE * dt * direction);
  }
  const magnitude = Math.max(Math.abs(value) - DECAY_RATE * dt, 0);
  return Math.sign(value) * magnitude;
}

export class InputState {
  keys: HeldKeys = { forward: false, back: false, left: false, right: false };
  private command: Command;

  constructor(initial: Command = { v_d: 0, omega_d: 0 }) {
    this.command = { ...initial };
  }

  // positive omega turns left (counterclockwise heading increase)
  update(dt: number): Command {
    if (dt <= 0) {
      throw new Error("dt must be positive");
    }
    const drive = (this.keys.forward ? 1 : 0) - (this.keys.back ? 1 : 0);
    const turn = (this.keys.left ? 1 : 0) - (this.keys.right ? 1 : 0);
    this.command = {
      v_d: rampAxis(this.command.v_d, drive, dt),
      omega_d: rampAxis(this.command.omega_d, turn, dt),
    };
    return { ...this.command };
  }

  current(): Command {
    return { ...this.command };
  }

  setKeyByCode(code: string, pressed: boolean): void {
    switch (code) {
      case "ArrowUp":
      case "KeyW":
        this.keys.forward = pressed;
        break;
      case "ArrowDown":
      case "KeyS":
        this.keys.back = pressed;
        break;
      case "ArrowLeft":
      case "KeyA":
        this.keys.left = pressed;
        break;
      case "ArrowRight":
      case "KeyD":
        this.keys.right = pressed;
        break;
    }
  }
}

export function inputToCommand(keys: HeldKeys, dt: number,
                               previous: Command = { v_d: 0, omega_d: 0 }): Command {
  const state = new InputState(previous);
  state.keys = { ...keys };
  return state.update(dt);
}
