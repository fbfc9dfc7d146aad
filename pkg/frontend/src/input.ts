/** Operator input capture: held keys and pointer drags become a unit-capped
 * velocity, emitted at most once per tick, with a single zero command sent
 * when everything is released. */

export interface Vec {
  vx: number;
  vy: number;
}

const KEY_VECTORS: Record<string, Vec> = {
  ArrowUp: { vx: 0, vy: 1 },
  ArrowDown: { vx: 0, vy: -1 },
  ArrowLeft: { vx: -1, vy: 0 },
  ArrowRight: { vx: 1, vy: 0 },
  w: { vx: 0, vy: 1 },
  s: { vx: 0, vy: -1 },
  a: { vx: -1, vy: 0 },
  d: { vx: 1, vy: 0 },
};

export function capToUnit(v: Vec): Vec {
  const mag = Math.hypot(v.vx, v.vy);
  if (mag <= 1 || mag === 0) return v;
  return { vx: v.vx / mag, vy: v.vy / mag };
}

export class InputState {
  private held = new Set<string>();
  private pointer: Vec | null = null;
  private zeroSent = true; // nothing held at startup; stay silent

  keyDown(key: string): void {
    if (key in KEY_VECTORS) this.held.add(key);
  }

  keyUp(key: string): void {
    this.held.delete(key);
  }

  pointerDrag(v: Vec): void {
    this.pointer = v;
  }

  pointerUp(): void {
    this.pointer = null;
  }

  /** Current intended velocity, unit-capped; null when nothing is held. */
  current(): Vec | null {
    let vx = 0;
    let vy = 0;
    for (const key of this.held) {
      vx += KEY_VECTORS[key].vx;
      vy += KEY_VECTORS[key].vy;
    }
    if (this.pointer !== null) {
      vx += this.pointer.vx;
      vy += this.pointer.vy;
    }
    if (this.held.size === 0 && this.pointer === null) return null;
    return capToUnit({ vx, vy });
  }

  /** Called once per tick: the command to send this tick, or null for
   * silence.  A release produces exactly one {0,0} and then silence. */
  poll(): Vec | null {
    const v = this.current();
    if (v !== null) {
      this.zeroSent = false;
      return v;
    }
    if (!this.zeroSent) {
      this.zeroSent = true;
      return { vx: 0, vy: 0 };
    }
    return null;
  }
}
