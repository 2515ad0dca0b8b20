// Dashboard entry point: socket -> state -> render, pointer -> steering.

import { applyMessage, initialState } from "./state.js";
import { render } from "./render.js";
import { roomMapping, SteeringController } from "./steering.js";
import { StreamSocket } from "./socket.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const banner = document.getElementById("banner")!;
const feedEl = document.getElementById("feed")!;
const absentBtn = document.getElementById("absent") as HTMLButtonElement;
const audioBox = document.getElementById("audio") as HTMLInputElement;

const state = initialState();
let dirty = true;

const params = new URLSearchParams(location.search);
const url = params.get("stream") ?? `ws://${location.hostname}:8772/stream`;

let steering: SteeringController | null = null;
let lastAlertT: number | null = null;

const socket = new StreamSocket(
  url,
  (msg) => {
    applyMessage(state, msg);
    if (msg.kind === "config" && steering === null) {
      steering = new SteeringController(
        (m) => socket.send(m),
        msg.frame_rep_time,
      );
    }
    if (msg.kind === "alert" && audioBox.checked && msg.t !== lastAlertT) {
      lastAlertT = msg.t;
      beep();
    }
    dirty = true;
  },
  (connected) => {
    state.connected = connected;
    dirty = true;
  },
);

function beep(): void {
  const ac = new AudioContext();
  const osc = ac.createOscillator();
  osc.frequency.value = 880;
  osc.connect(ac.destination);
  osc.start();
  osc.stop(ac.currentTime + 0.4);
}

function pointerToFloor(ev: PointerEvent): { x: number; y: number } | null {
  if (state.config === null) return null;
  const rect = canvas.getBoundingClientRect();
  return roomMapping(state.config).toFloor(
    ev.clientX - rect.left,
    ev.clientY - rect.top,
    rect.width,
    rect.height,
  );
}

let dragging = false;
canvas.addEventListener("pointerdown", (ev) => {
  dragging = true;
  canvas.setPointerCapture(ev.pointerId);
  const p = pointerToFloor(ev);
  if (p !== null) steering?.moveTo(p.x, p.y);
});
canvas.addEventListener("pointermove", (ev) => {
  if (!dragging) return;
  const p = pointerToFloor(ev);
  if (p !== null) steering?.moveTo(p.x, p.y);
});
canvas.addEventListener("pointerup", () => {
  dragging = false;
});

absentBtn.addEventListener("click", () => {
  if (steering === null) return;
  steering.setAbsent(!steering.absent);
  absentBtn.textContent = steering.absent ? "subject: absent" : "subject: present";
  absentBtn.classList.toggle("absent", steering.absent);
});

function frame(): void {
  steering?.tick();
  if (dirty) {
    dirty = false;
    render(state, ctx, canvas.width, canvas.height);
    if (state.alert !== null) {
      banner.textContent =
        `FALL ALERT - zone ${state.alert.zone} at t=${state.alert.t.toFixed(2)} s`;
      banner.classList.add("active");
    } else {
      banner.textContent = "";
      banner.classList.remove("active");
    }
    feedEl.innerHTML = state.feed
      .slice()
      .reverse()
      .map((l) => `<div>[${l.t.toFixed(2)}] ${l.text}</div>`)
      .join("");
  }
  requestAnimationFrame(frame);
}

requestAnimationFrame(frame);
