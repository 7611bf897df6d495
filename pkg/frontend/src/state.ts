/** Client-side session state.
 *
 * The store mirrors the service's source/target tracks and owns the
 * view state. Every mutation goes through the service and is
 * reconciled from its response (optimistic updates are reverted on
 * rejection); undo/redo replays inverse edits through the same
 * endpoints, so the service's edit log stays the single source of
 * truth.
 */

import { ServiceClient } from "./api.js";
import { defaultHandles, sampleCurve } from "./bezier.js";
import type {
  SessionInfo,
  TrackPayload,
  Vec2,
  ViewState,
} from "./types.js";
import { initialView } from "./types.js";

type EditOp =
  | { kind: "bezier"; trackId: number; controlPoints: Vec2[]; span: [number, number] }
  | { kind: "visibility"; trackId: number; frames: number[]; visible: boolean }
  | { kind: "anchor"; trackId: number };

interface UndoEntry {
  undo: EditOp;
  redo: EditOp;
}

function cloneTrack(t: TrackPayload): TrackPayload {
  return {
    id: t.id,
    color: [...t.color] as TrackPayload["color"],
    init_frame: t.init_frame,
    xy: t.xy.map((p) => [p[0], p[1]] as Vec2),
    visible: [...t.visible],
  };
}

export function tracksEqual(a: TrackPayload, b: TrackPayload): boolean {
  return (
    a.xy.length === b.xy.length &&
    a.xy.every((p, f) => p[0] === b.xy[f][0] && p[1] === b.xy[f][1]) &&
    a.visible.every((v, f) => v === b.visible[f])
  );
}

export class SessionStore {
  info: SessionInfo;
  source: TrackPayload[] = [];
  target: TrackPayload[] = [];
  view: ViewState = initialView();
  toasts: string[] = [];

  private undoStack: UndoEntry[] = [];
  private redoStack: UndoEntry[] = [];
  /** Last accepted bezier payload per track (to invert later drags). */
  private lastBezier = new Map<number, { controlPoints: Vec2[]; span: [number, number] }>();

  private constructor(readonly client: ServiceClient, info: SessionInfo) {
    this.info = info;
  }

  static async create(client: ServiceClient, clipDir: string, prompt = ""): Promise<SessionStore> {
    const info = await client.createSession(clipDir, prompt);
    const store = new SessionStore(client, info);
    await store.refresh();
    return store;
  }

  static async open(client: ServiceClient, sessionId: string): Promise<SessionStore> {
    const detail = await client.getSession(sessionId);
    const store = new SessionStore(client, detail);
    await store.refresh();
    return store;
  }

  get sid(): string {
    return this.info.session_id;
  }

  async refresh(): Promise<void> {
    const tracks = await this.client.getTracks(this.sid);
    this.source = tracks.source;
    this.target = tracks.target;
  }

  private toast(message: string): void {
    this.toasts.push(message);
  }

  targetById(trackId: number): TrackPayload {
    const t = this.target.find((t) => t.id === trackId);
    if (!t) throw new Error(`no track ${trackId}`);
    return t;
  }

  sourceById(trackId: number): TrackPayload {
    const t = this.source.find((t) => t.id === trackId);
    if (!t) throw new Error(`no track ${trackId}`);
    return t;
  }

  /** Anchored tracks carry no motion edit (arrow suppressed). */
  isAnchored(trackId: number): boolean {
    return tracksEqual(this.sourceById(trackId), this.targetById(trackId));
  }

  // -- view-only mutations (scrubbing never touches session state) ----

  setFrame(f: number): void {
    this.view.frame = Math.max(0, Math.min(this.info.frames - 1, f));
  }

  setZoom(zoom: number, pan?: Vec2): void {
    this.view.zoom = zoom;
    if (pan) this.view.pan = pan;
  }

  selectTrack(trackId: number | null, span?: [number, number]): void {
    this.view.selected = trackId;
    if (trackId === null) {
      this.view.handles = null;
      this.view.handleSpan = null;
      return;
    }
    const prior = this.lastBezier.get(trackId);
    const fullSpan: [number, number] = span ?? prior?.span ?? [0, this.info.frames - 1];
    this.view.handleSpan = fullSpan;
    this.view.handles =
      prior && prior.span[0] === fullSpan[0] && prior.span[1] === fullSpan[1]
        ? prior.controlPoints.map((p) => [p[0], p[1]] as Vec2)
        : defaultHandles(this.targetById(trackId), fullSpan);
  }

  // -- service-backed mutations ---------------------------------------

  async addPoint(frame: number, x: number, y: number): Promise<number> {
    const { track_id } = await this.client.addPoint(this.sid, frame, x, y);
    await this.refresh();
    return track_id;
  }

  /** Drag one Bezier handle of the selected track: optimistic local
   * update, service call, reconcile (or revert + toast on rejection),
   * undo entry pushed. */
  async dragHandle(handleIndex: number, pos: Vec2): Promise<boolean> {
    const trackId = this.view.selected;
    if (trackId === null || !this.view.handles || !this.view.handleSpan) {
      throw new Error("no track selected for handle dragging");
    }
    const span = this.view.handleSpan;
    const handles = this.view.handles.map((p) => [p[0], p[1]] as Vec2);
    if (handleIndex < 0 || handleIndex >= handles.length) {
      throw new Error(`no handle ${handleIndex}`);
    }
    handles[handleIndex] = [pos[0], pos[1]];

    const priorTrack = cloneTrack(this.targetById(trackId));
    const undo = this.inverseForTrack(trackId);

    // Optimistic: resample the span locally.
    const optimistic = cloneTrack(priorTrack);
    const curve = sampleCurve(handles, span[1] - span[0] + 1);
    curve.forEach((p, i) => (optimistic.xy[span[0] + i] = p));
    this.target = this.target.map((t) => (t.id === trackId ? optimistic : t));
    this.view.handles = handles;

    // Snap-to-anchor: a drag that lands the whole track back on the
    // source trajectory becomes an anchor op, which restores the
    // bit-identical anchored state (a float-coincident Bezier cannot).
    const redo: EditOp = this.dragRestoresSource(trackId, optimistic)
      ? { kind: "anchor", trackId }
      : { kind: "bezier", trackId, controlPoints: handles, span };

    try {
      if (redo.kind === "anchor") {
        await this.client.anchor(this.sid, trackId);
      } else {
        await this.client.setBezier(this.sid, trackId, handles, span);
      }
    } catch (err) {
      this.target = this.target.map((t) => (t.id === trackId ? priorTrack : t));
      this.toast(`edit rejected: ${(err as Error).message}`);
      return false;
    }
    await this.refresh();
    if (redo.kind === "anchor") {
      this.lastBezier.delete(trackId);
    } else {
      this.lastBezier.set(trackId, { controlPoints: handles, span });
    }
    this.undoStack.push({ undo, redo });
    this.redoStack = [];
    return true;
  }

  private dragRestoresSource(trackId: number, candidate: TrackPayload): boolean {
    const src = this.sourceById(trackId);
    const eps = 1e-9;
    return (
      candidate.xy.every(
        (p, f) => Math.abs(p[0] - src.xy[f][0]) < eps && Math.abs(p[1] - src.xy[f][1]) < eps,
      ) && candidate.visible.every((v, f) => v === src.visible[f])
    );
  }

  async toggleVisibility(trackId: number, frames: number[], visible: boolean): Promise<boolean> {
    const prior = cloneTrack(this.targetById(trackId));
    const changed = frames.filter((f) => prior.visible[f] !== visible);
    const optimistic = cloneTrack(prior);
    frames.forEach((f) => (optimistic.visible[f] = visible));
    this.target = this.target.map((t) => (t.id === trackId ? optimistic : t));
    try {
      await this.client.setVisibility(this.sid, trackId, frames, visible);
    } catch (err) {
      this.target = this.target.map((t) => (t.id === trackId ? prior : t));
      this.toast(`edit rejected: ${(err as Error).message}`);
      return false;
    }
    await this.refresh();
    this.undoStack.push({
      undo: { kind: "visibility", trackId, frames: changed, visible: !visible },
      redo: { kind: "visibility", trackId, frames, visible },
    });
    this.redoStack = [];
    return true;
  }

  /** Inverse op that restores a track's current target state: replay
   * the last accepted bezier, or re-anchor if it has never been bent. */
  private inverseForTrack(trackId: number): EditOp {
    const prior = this.lastBezier.get(trackId);
    if (prior) {
      return { kind: "bezier", trackId, controlPoints: prior.controlPoints, span: prior.span };
    }
    return { kind: "anchor", trackId };
  }

  private async applyOp(op: EditOp): Promise<void> {
    if (op.kind === "bezier") {
      await this.client.setBezier(this.sid, op.trackId, op.controlPoints, op.span);
      this.lastBezier.set(op.trackId, { controlPoints: op.controlPoints, span: op.span });
    } else if (op.kind === "visibility") {
      await this.client.setVisibility(this.sid, op.trackId, op.frames, op.visible);
    } else {
      await this.client.anchor(this.sid, op.trackId);
      this.lastBezier.delete(op.trackId);
    }
    await this.refresh();
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  get canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  async undo(): Promise<void> {
    const entry = this.undoStack.pop();
    if (!entry) return;
    await this.applyOp(entry.undo);
    this.redoStack.push(entry);
  }

  async redo(): Promise<void> {
    const entry = this.redoStack.pop();
    if (!entry) return;
    await this.applyOp(entry.redo);
    this.undoStack.push(entry);
  }

  async cameraZoom(scales: number[], principal: Vec2): Promise<void> {
    await this.client.cameraZoom(this.sid, scales, principal);
    await this.refresh();
    this.undoStack = [];
    this.redoStack = [];
  }

  async exportBundle(jitter: boolean, seed: number) {
    return this.client.exportBundle(this.sid, jitter, seed);
  }

  /** Generation is a long-running job; the caller polls `pending`. */
  pending = false;

  async generate(seed: number): Promise<number> {
    this.pending = true;
    try {
      const { clip_index } = await this.client.generate(this.sid, seed);
      return clip_index;
    } finally {
      this.pending = false;
    }
  }
}
