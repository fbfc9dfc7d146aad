/** Browser entry point: wires DOM events into the client and renders the
 * latest snapshot to a canvas at the protocol tick rate. */

import { TeleopClient } from "./client";
import { CONTROLLERS } from "./protocol";
import { Camera, renderSnapshot } from "./render";

const TICK_MS = 100; // 10 Hz, matching the default server tick

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export function boot(): void {
  const canvas = el<HTMLCanvasElement>("world");
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("no 2d context");
  const scenarioSel = el<HTMLSelectElement>("scenario");
  const controllerSel = el<HTMLSelectElement>("controller");
  const banner = el<HTMLDivElement>("banner");

  for (const kind of CONTROLLERS) {
    controllerSel.add(new Option(kind, kind));
  }

  const url = `ws://${location.host}/session`;
  const client = new TeleopClient(url, (u) => new WebSocket(u));
  client.connect();

  window.addEventListener("keydown", (e) => client.input.keyDown(e.key));
  window.addEventListener("keyup", (e) => client.input.keyUp(e.key));
  canvas.addEventListener("pointermove", (e) => {
    if (e.buttons !== 1) return;
    const r = canvas.getBoundingClientRect();
    client.input.pointerDrag({
      vx: (e.clientX - r.left - r.width / 2) / (r.width / 2),
      vy: (r.height / 2 - (e.clientY - r.top)) / (r.height / 2),
    });
  });
  canvas.addEventListener("pointerup", () => client.input.pointerUp());

  el<HTMLButtonElement>("start").addEventListener("click", () => {
    client.send({
      type: "start",
      session: client.vm.session,
      scenario: scenarioSel.value,
      controller: controllerSel.value as (typeof CONTROLLERS)[number],
      seed: 0,
    });
  });
  el<HTMLButtonElement>("reset").addEventListener("click", () => {
    client.send({ type: "reset", session: client.vm.session });
  });
  for (const name of ["drop", "lag", "noise"] as const) {
    el<HTMLInputElement>(name).addEventListener("change", (e) => {
      const value = Number((e.target as HTMLInputElement).value);
      client.send({
        type: "config_update",
        session: client.vm.session,
        channel: { [name]: name === "lag" ? Math.round(value) : value },
      });
    });
  }

  const cam: Camera = {
    centerX: 0,
    centerY: 5,
    scale: canvas.width / 16,
    width: canvas.width,
    height: canvas.height,
  };

  setInterval(() => {
    client.pumpInput();
    const vm = client.vm;
    if (vm.scenarios.length && scenarioSel.options.length === 0) {
      for (const sid of vm.scenarios) scenarioSel.add(new Option(sid, sid));
    }
    banner.textContent =
      vm.status !== "connected"
        ? `⚠ ${vm.status}`
        : vm.lastRun
          ? `run ended: ${vm.lastRun.reason}`
          : vm.lastError || "";
    if (vm.snapshot) renderSnapshot(ctx, cam, vm.snapshot);
  }, TICK_MS);
}

boot();
