/** Payload shapes of the edit-service HTTP API. */

export type Vec2 = [number, number];
export type Rgb = [number, number, number];

export interface TrackPayload {
  id: number;
  color: Rgb;
  init_frame: number;
  xy: Vec2[];
  visible: boolean[];
}

export interface SessionInfo {
  session_id: string;
  frames: number;
  width: number;
  height: number;
}

export interface SessionDetail extends SessionInfo {
  prompt: string;
  track_ids: number[];
  history: string[];
  log_length: number;
}

export interface TracksResponse {
  source: TrackPayload[];
  target: TrackPayload[];
}

export interface LogResponse {
  log: Record<string, unknown>[];
  edit_log_hash: string;
}

export interface ExportResponse {
  bundle_dir: string;
  manifest: Record<string, unknown>;
}

export interface OverlayToggles {
  source: boolean;
  target: boolean;
  arrows: boolean;
}

/** Everything the canvas needs that is not session data. */
export interface ViewState {
  frame: number;
  zoom: number;
  pan: Vec2;
  selected: number | null;
  /** Control points of the in-progress drag edit, if any. */
  handles: Vec2[] | null;
  handleSpan: [number, number] | null;
  overlays: OverlayToggles;
}

export function initialView(): ViewState {
  return {
    frame: 0,
    zoom: 1,
    pan: [0, 0],
    selected: null,
    handles: null,
    handleSpan: null,
    overlays: { source: true, target: true, arrows: true },
  };
}
