import { describe, expect, it } from "vitest";
import { MIN_TARGET_PX, mkControl } from "../src/controls.js";
import { controlsOf } from "../src/screens.js";
import { loadScenario, replayScenario } from "./replay.js";

describe("mkControl", () => {
  it("holds the touch-target floor", () => {
    expect(mkControl("x", "X", { targetPx: 10 }).targetPx).toBe(MIN_TARGET_PX);
    expect(mkControl("x", "X").targetPx).toBeGreaterThanOrEqual(MIN_TARGET_PX);
    expect(mkControl("x", "X", { targetPx: 96 }).targetPx).toBe(96);
  });
});

describe("touch-target audit over recorded journeys", () => {
  // Every control on every screen a child actually saw in the recordings.
  it("keeps every rendered control at or above the floor", async () => {
    let audited = 0;
    for (const name of ["full-session", "endonly-toggle", "upload-flow"] as const) {
      const { frames } = await replayScenario(loadScenario(name), {
        beforeUpload: (ui) => void ui.openUpload(),
      });
      for (const frame of frames) {
        for (const control of controlsOf(frame.content)) {
          expect(control.targetPx).toBeGreaterThanOrEqual(MIN_TARGET_PX);
          expect(control.label.trim().length).toBeGreaterThan(0);
          expect(control.action.length).toBeGreaterThan(0);
          audited += 1;
        }
      }
    }
    expect(audited).toBeGreaterThan(100);
  });
});
