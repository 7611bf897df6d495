import { readFileSync } from "node:fs";
import { join } from "node:path";

export interface ServerInfo {
  base: string;
  clip_dir: string;
  root: string;
  frames: number;
  width: number;
  height: number;
}

export function serverInfo(): ServerInfo {
  return JSON.parse(readFileSync(join(__dirname, ".server-info.json"), "utf8"));
}
