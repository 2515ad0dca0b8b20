// Live end-to-end: drive the real backend service over its ndjson socket
// (same schema as the WebSocket endpoint) with a scripted pointer drag
// across all five sectors, and fold the stream through the dashboard state.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { connect, type Socket } from "node:net";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { parseServerMsg, type ServerMsg } from "../src/messages.js";
import { applyMessage, initialState } from "../src/state.js";

const here = dirname(fileURLToPath(import.meta.url));
const repo = join(here, "..", "..");

let proc: ChildProcess;
let address: { host: string; port: number };

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "zonelens-e2e-"));
  const config = JSON.parse(
    readFileSync(join(repo, "config", "default.json"), "utf-8"),
  );
  config.fusion.calibration_n = 5; // 0.25 s calibration for the test
  const cfgPath = join(dir, "config.json");
  writeFileSync(cfgPath, JSON.stringify(config));

  proc = spawn("python3", [
    "-m", "zonelens.cli", "run",
    "--config", cfgPath,
    "--scenario", join(repo, "scenarios", "steering.json"),
    "--serve", "127.0.0.1:0",
    "--duration", "30",
  ], { cwd: repo, stdio: ["ignore", "pipe", "pipe"] });

  address = await new Promise((resolve, reject) => {
    let buf = "";
    const timer = setTimeout(() => reject(new Error("service did not start")), 15000);
    proc.stdout!.on("data", (chunk: Buffer) => {
      buf += chunk.toString();
      const line = buf.split("\n")[0];
      if (line.includes("serving")) {
        clearTimeout(timer);
        const banner = JSON.parse(line);
        const [host, port] = banner.address.split(":");
        resolve({ host, port: Number(port) });
      }
    });
    proc.on("exit", (code) => reject(new Error(`service exited early: ${code}`)));
  });
}, 20000);

afterAll(() => {
  proc?.kill("SIGINT");
});

function openStream(onMsg: (m: ServerMsg) => void): Promise<Socket> {
  return new Promise((resolve, reject) => {
    const sock = connect(address.port, address.host, () => resolve(sock));
    sock.on("error", reject);
    let buf = "";
    sock.on("data", (chunk) => {
      buf += chunk.toString();
      let idx;
      while ((idx = buf.indexOf("\n")) >= 0) {
        const line = buf.slice(0, idx);
        buf = buf.slice(idx + 1);
        const msg = parseServerMsg(line);
        if (msg !== null) onMsg(msg);
      }
    });
  });
}

describe("scripted drag across five sectors", () => {
  it("activates zones 1..5 in order with no alert", async () => {
    const state = initialState();
    state.connected = true;
    const activation: number[] = [];
    const alerts: ServerMsg[] = [];
    let gotConfig = false;

    const sock = await openStream((msg) => {
      applyMessage(state, msg);
      if (msg.kind === "config") gotConfig = true;
      if (msg.kind === "alert") alerts.push(msg);
      if (msg.kind === "snapshot") {
        msg.zones.forEach((on, i) => {
          if (on && !activation.includes(i + 1)) activation.push(i + 1);
        });
      }
    });

    // wait out calibration, then sweep the subject across the arc at 1 m
    await new Promise((r) => setTimeout(r, 1500));
    const steps = 60;
    for (let i = 0; i <= steps; i++) {
      const az = (-56 + (112 * i) / steps) * (Math.PI / 180);
      sock.write(JSON.stringify({
        kind: "subject",
        x: Math.sin(az),
        y: Math.cos(az),
        absent: false,
      }) + "\n");
      await new Promise((r) => setTimeout(r, 100));
    }
    await new Promise((r) => setTimeout(r, 500));
    sock.destroy();

    expect(gotConfig).toBe(true);
    expect(activation).toEqual([1, 2, 3, 4, 5]);
    expect(alerts).toEqual([]);
    expect(state.alert).toBeNull();
  }, 30000);
});
