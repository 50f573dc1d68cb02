// Boots the real engine service on the bundled course fixture for the UI
// tests. One server for the whole run; tests share its state.

import { ChildProcess, spawn } from "node:child_process";
import { copyFileSync, mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";

export const TEST_PORT = 8571;
export const BASE_URL = `http://127.0.0.1:${TEST_PORT}`;

let server: ChildProcess | undefined;

export async function setup(): Promise<void> {
  const repoRoot = resolve(__dirname, "..", "..");
  const work = mkdtempSync(join(tmpdir(), "noos-ui-"));
  const dataDir = join(work, "data");
  const { mkdirSync } = await import("node:fs");
  mkdirSync(dataDir);
  copyFileSync(join(repoRoot, "fixtures", "math5190.log"), join(dataDir, "events.log"));
  const configPath = join(work, "config.json");
  writeFileSync(
    configPath,
    JSON.stringify({
      listen_host: "127.0.0.1",
      listen_port: TEST_PORT,
      data_dir: dataDir,
      admin_secret: "admin-password",
    }),
  );

  server = spawn("python3", ["-m", "noosphere", "serve", "--config", configPath], {
    cwd: repoRoot,
    stdio: ["ignore", "pipe", "pipe"],
  });
  let stderr = "";
  server.stderr?.on("data", (chunk) => (stderr += String(chunk)));

  const deadline = Date.now() + 30_000;
  for (;;) {
    try {
      const response = await fetch(`${BASE_URL}/v1/requests?filter=active`);
      if (response.ok) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      server.kill();
      throw new Error(`engine service did not come up:\n${stderr}`);
    }
    await new Promise((r) => setTimeout(r, 200));
  }
}

export async function teardown(): Promise<void> {
  server?.kill();
}
