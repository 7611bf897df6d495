import { describe, expect, it } from "vitest";

import { decasteljau, defaultHandles, sampleCurve } from "../src/bezier.js";
import type { TrackPayload, Vec2 } from "../src/types.js";

describe("bezier math", () => {
  it("interpolates endpoints exactly", () => {
    const cps: Vec2[] = [[3, 4], [100, -5], [7, 7]];
    expect(decasteljau(cps, 0)).toEqual([3, 4]);
    expect(decasteljau(cps, 1)).toEqual([7, 7]);
  });

  it("matches the cubic midpoint reference value", () => {
    const cps: Vec2[] = [[0, 0], [0, 1], [1, 1], [1, 0]];
    const mid = decasteljau(cps, 0.5);
    expect(mid[0]).toBeCloseTo(0.5, 12);
    expect(mid[1]).toBeCloseTo(0.75, 12);
  });

  it("samples one position per frame, endpoints included", () => {
    const cps: Vec2[] = [[0, 0], [10, 0]];
    const curve = sampleCurve(cps, 11);
    expect(curve.length).toBe(11);
    expect(curve[0]).toEqual([0, 0]);
    expect(curve[10]).toEqual([10, 0]);
    expect(curve[5][0]).toBeCloseTo(5, 12);
  });

  it("derives default handles from the current target path", () => {
    const xy: Vec2[] = Array.from({ length: 13 }, (_, f) => [f * 2, 10] as Vec2);
    const t: TrackPayload = { id: 0, color: [1, 0, 0], init_frame: 0, xy, visible: xy.map(() => true) };
    const handles = defaultHandles(t, [0, 12]);
    expect(handles.length).toBe(4);
    expect(handles[0]).toEqual([0, 10]);
    expect(handles[3]).toEqual([24, 10]);
  });
});
