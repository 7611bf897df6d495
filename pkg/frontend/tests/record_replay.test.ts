/** Record/replay acceptance: a scripted drag session exported through
 * the UI layer must produce a bundle byte-identical to the one from
 * applying the same edit log directly through the service API. */

import { readdirSync, readFileSync, statSync } from "node:fs";
import { join, relative } from "node:path";
import { describe, expect, it } from "vitest";

import { ServiceClient } from "../src/api.js";
import { SessionStore } from "../src/state.js";
import { serverInfo } from "./helpers.js";

function walkFiles(dir: string): string[] {
  const out: string[] = [];
  const visit = (d: string) => {
    for (const name of readdirSync(d).sort()) {
      const p = join(d, name);
      if (statSync(p).isDirectory()) visit(p);
      else out.push(p);
    }
  };
  visit(dir);
  return out;
}

describe("UI record/replay", () => {
  it("exports a bundle byte-identical to a direct-API replay of its edit log", async () => {
    const { base, clip_dir, frames } = serverInfo();
    const client = new ServiceClient(base);
    const seed = 11;

    // --- Scripted drag session through the UI state layer ------------
    const store = await SessionStore.create(client, clip_dir, "record replay");
    const tid = await store.addPoint(0, 16.0, 32.0);
    store.selectTrack(tid, [0, frames - 1]);
    expect(await store.dragHandle(3, [70.0, 20.0])).toBe(true);
    // Re-select: handles now continue from the accepted edit.
    store.selectTrack(tid, [0, frames - 1]);
    expect(await store.dragHandle(1, [30.0, 10.0])).toBe(true);
    expect(await store.toggleVisibility(tid, [0, 1], false)).toBe(true);

    const uiLog = await client.getLog(store.sid);
    const uiExport = await store.exportBundle(true, seed);

    // --- Same edit log applied directly through the API --------------
    const direct = await client.createSession(clip_dir, "record replay");
    for (const event of uiLog.log) {
      const op = event.op as string;
      if (op === "create") continue;
      if (op === "add_point") {
        await client.addPoint(direct.session_id, event.frame as number, event.x as number, event.y as number);
      } else if (op === "set_bezier") {
        await client.setBezier(
          direct.session_id,
          event.track_id as number,
          event.control_points as [number, number][],
          event.frame_span as [number, number],
        );
      } else if (op === "set_visibility") {
        await client.setVisibility(
          direct.session_id,
          event.track_id as number,
          event.frames as number[],
          event.visible as boolean,
        );
      } else {
        throw new Error(`unexpected op in scripted session: ${op}`);
      }
    }
    const directLog = await client.getLog(direct.session_id);
    expect(directLog.edit_log_hash).toBe(uiLog.edit_log_hash);

    const directExport = await client.exportBundle(direct.session_id, true, seed);

    // --- Byte-for-byte comparison ------------------------------------
    const uiFiles = walkFiles(uiExport.bundle_dir).map((p) => relative(uiExport.bundle_dir, p));
    const directFiles = walkFiles(directExport.bundle_dir).map((p) =>
      relative(directExport.bundle_dir, p),
    );
    expect(directFiles).toEqual(uiFiles);
    expect(uiFiles.length).toBeGreaterThan(3 * frames);
    for (const rel of uiFiles) {
      const a = readFileSync(join(uiExport.bundle_dir, rel));
      const b = readFileSync(join(directExport.bundle_dir, rel));
      expect(b.equals(a), `bundle file differs: ${rel}`).toBe(true);
    }
  }, 180_000);
});
