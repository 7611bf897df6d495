import type { TrackPayload, Vec2 } from "./types.js";

/** De Casteljau evaluation; matches the service's curve exactly at the
 * per-frame parameters it uses. */
export function decasteljau(points: Vec2[], t: number): Vec2 {
  let pts = points.map((p) => [p[0], p[1]] as Vec2);
  while (pts.length > 1) {
    const next: Vec2[] = [];
    for (let i = 0; i + 1 < pts.length; i++) {
      next.push([
        (1 - t) * pts[i][0] + t * pts[i + 1][0],
        (1 - t) * pts[i][1] + t * pts[i + 1][1],
      ]);
    }
    pts = next;
  }
  return pts[0];
}

export function sampleCurve(points: Vec2[], n: number): Vec2[] {
  const out: Vec2[] = [];
  for (let i = 0; i < n; i++) {
    out.push(decasteljau(points, n === 1 ? 0 : i / (n - 1)));
  }
  return out;
}

/** Default cubic handles for editing a track over a frame span: the
 * endpoints sit on the current target path, the two inner handles at
 * its 1/3 and 2/3 frames. */
export function defaultHandles(track: TrackPayload, span: [number, number]): Vec2[] {
  const [f0, f1] = span;
  const at = (f: number): Vec2 => [track.xy[f][0], track.xy[f][1]];
  const third = (f1 - f0) / 3;
  return [at(f0), at(Math.round(f0 + third)), at(Math.round(f0 + 2 * third)), at(f1)];
}
