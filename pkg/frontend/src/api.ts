/** Thin typed client over the edit-service HTTP API. All track
 * mutations in the app go through this module; nothing else touches
 * session state. */

import type {
  ExportResponse,
  LogResponse,
  SessionDetail,
  SessionInfo,
  TracksResponse,
  Vec2,
} from "./types.js";

export class ServiceError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    } catch {
      // keep the status text
    }
    throw new ServiceError(detail, resp.status);
  }
  return (await resp.json()) as T;
}

export class ServiceClient {
  constructor(readonly base: string) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    return asJson<T>(
      await fetch(`${this.base}${path}`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
  }

  private async put<T>(path: string, body: unknown): Promise<T> {
    return asJson<T>(
      await fetch(`${this.base}${path}`, {
        method: "PUT",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
  }

  createSession(clipDir: string, prompt = ""): Promise<SessionInfo> {
    return this.post("/sessions", { clip_dir: clipDir, prompt });
  }

  getSession(sid: string): Promise<SessionDetail> {
    return fetch(`${this.base}/sessions/${sid}`).then((r) => asJson<SessionDetail>(r));
  }

  getTracks(sid: string): Promise<TracksResponse> {
    return fetch(`${this.base}/sessions/${sid}/tracks`).then((r) => asJson<TracksResponse>(r));
  }

  getLog(sid: string): Promise<LogResponse> {
    return fetch(`${this.base}/sessions/${sid}/log`).then((r) => asJson<LogResponse>(r));
  }

  addPoint(sid: string, frame: number, x: number, y: number): Promise<{ track_id: number; color: number[] }> {
    return this.post(`/sessions/${sid}/points`, { frame, x, y });
  }

  setBezier(sid: string, trackId: number, controlPoints: Vec2[], span: [number, number]): Promise<unknown> {
    return this.put(`/sessions/${sid}/tracks/${trackId}/bezier`, {
      control_points: controlPoints,
      frame_span: span,
    });
  }

  setVisibility(sid: string, trackId: number, frames: number[], visible: boolean): Promise<unknown> {
    return this.put(`/sessions/${sid}/tracks/${trackId}/visibility`, { frames, visible });
  }

  retime(sid: string, trackId: number, timeMap: number[]): Promise<unknown> {
    return this.put(`/sessions/${sid}/tracks/${trackId}/retime`, { time_map: timeMap });
  }

  anchor(sid: string, trackId: number): Promise<unknown> {
    return this.post(`/sessions/${sid}/tracks/${trackId}/anchor`, {});
  }

  cameraZoom(sid: string, scales: number[], principal: Vec2): Promise<unknown> {
    return this.post(`/sessions/${sid}/camera-edit`, { kind: "zoom", scales, principal });
  }

  exportBundle(sid: string, jitter: boolean, seed: number): Promise<ExportResponse> {
    return this.post(`/sessions/${sid}/export`, { jitter, seed });
  }

  generate(sid: string, seed: number): Promise<{ clip_index: number; output_dir: string }> {
    return this.post(`/sessions/${sid}/generate`, { seed });
  }

  iterate(sid: string, clipIndex: number): Promise<{ session_id: string }> {
    return this.post(`/sessions/${sid}/iterate`, { clip_index: clipIndex });
  }

  frameUrl(sid: string, f: number): string {
    return `${this.base}/sessions/${sid}/frames/${f}`;
  }

  previewUrl(sid: string, frame: number, which: "source" | "target"): string {
    return `${this.base}/sessions/${sid}/preview?frame=${frame}&which=${which}`;
  }
}
