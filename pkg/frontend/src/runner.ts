/**
 * Subprocess plumbing: every binding call shells out to the capkit CLI
 * with a throwaway config + output directory, so the bindings stay pure
 * delegates over the toolkit's public interfaces.
 */

import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

export class CapkitError extends Error {
  constructor(
    message: string,
    public readonly exitCode: number,
  ) {
    super(message);
    this.name = "CapkitError";
  }
}

function cliCommand(): string[] {
  const override = process.env.CAPKIT_BIN;
  if (override) {
    return override.split(" ");
  }
  return ["capkit"];
}

export function runCapkit(args: string[], cwd: string): string {
  const [bin, ...pre] = cliCommand();
  const result = spawnSync(bin, [...pre, ...args], {
    cwd,
    encoding: "utf-8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (result.error) {
    throw new CapkitError(`failed to launch capkit: ${result.error.message}`, -1);
  }
  if (result.status !== 0) {
    const detail = (result.stderr ?? "").trim();
    throw new CapkitError(
      detail || `capkit exited with status ${result.status}`,
      result.status ?? -1,
    );
  }
  return result.stdout;
}

export interface Workspace {
  dir: string;
  outDir: string;
  configPath: string;
}

export function withWorkspace<T>(config: object, body: (ws: Workspace) => T): T {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "capkit-bind-"));
  try {
    const outDir = path.join(dir, "out");
    const merged = {
      ...config,
      paths: {
        audio_root: dir,
        output_root: outDir,
        ...(config as { paths?: object }).paths,
      },
    };
    const configPath = path.join(dir, "config.json");
    fs.writeFileSync(configPath, JSON.stringify(merged));
    return body({ dir, outDir, configPath });
  } finally {
    fs.rmSync(dir, { recursive: true, force: true });
  }
}

export function readJsonl(file: string): unknown[] {
  return fs
    .readFileSync(file, "utf-8")
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line));
}

export function writeJsonl(file: string, rows: unknown[]): void {
  fs.writeFileSync(file, rows.map((row) => JSON.stringify(row)).join("\n") + "\n");
}
