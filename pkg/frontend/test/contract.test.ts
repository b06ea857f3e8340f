import { beforeAll, describe, expect, it } from "vitest";
import { DONT_KNOW, ReadingScreen, ScreenContent } from "../src/screens.js";
import { ReplayFrame, loadScenario, replayScenario } from "./replay.js";

// Acceptance for the reader UI: recorded service traffic drives the real
// controller and renderers end to end. The replay transport rejects any
// request that differs from the recording, so a green run means the UI still
// speaks exactly the API dialect the fixtures captured.

const SUNSET_STATEMENT = "Sunlight warms Earth’s surface.";

function pass(line: string): void {
  console.log(`[acceptance] ${line}: PASS`);
}

function asReading(content: ScreenContent): ReadingScreen {
  expect(content.kind).toBe("reading");
  return content as ReadingScreen;
}

describe("recorded full session", () => {
  let frames: ReplayFrame[];

  beforeAll(async () => {
    const replay = await replayScenario(loadScenario("full-session"));
    frames = replay.frames;
  });

  it("walks library, greeting, reading, dashboard in order", () => {
    const kinds = frames.map((f) => f.content.kind);
    expect(kinds[0]).toBe("library");
    expect(kinds.slice(1, 5)).toEqual(["greeting", "greeting", "greeting", "greeting"]);
    expect(kinds.slice(5, 14)).toEqual(Array(9).fill("reading"));
    expect(kinds[14]).toBe("dashboard");

    const library = frames[0]!.content;
    if (library.kind !== "library") throw new Error("expected library");
    expect(library.books.map((b) => b.id)).toContain("dinosaur-seaside");
    const seaside = library.books.find((b) => b.id === "dinosaur-seaside")!;
    expect(seaside.title).toBe("Dinosaur Valley at the Seaside");
    expect(seaside.pageCount).toBe(4);

    // The companion opens the conversation and waits for the child.
    const greeting = frames[1]!.content;
    if (greeting.kind !== "greeting") throw new Error("expected greeting");
    expect(greeting.bubbles.length).toBeGreaterThan(0);
    expect(greeting.bubbles[0]!.speaker).toBe("companion");
    expect(greeting.input?.enabled).toBe(true);
    expect(greeting.input?.quickAnswers.map((c) => c.payload)).toContain(DONT_KNOW);

    // Third reply hands over to mode setup: the panel replaces the keyboard.
    const setup = frames[4]!.content;
    if (setup.kind !== "greeting") throw new Error("expected greeting");
    expect(setup.modePanel).not.toBeNull();
    expect(setup.input).toBeNull();

    const dashboard = frames[14]!.content;
    if (dashboard.kind !== "dashboard") throw new Error("expected dashboard");
    expect(dashboard.childId).toBe("nia");
    expect(dashboard.booksCompleted).toBe(1);
    expect(dashboard.learned.map((k) => k.statement)).toContain(SUNSET_STATEMENT);
    pass("ui contract replay: library to greeting to reading to dashboard");
  });

  it("shows the concept card exactly during the sunset interaction", () => {
    // Frame 10 is the page-done that lands on the sunset page question.
    const sunset = asReading(frames[10]!.content);
    expect(sunset.pageNumber).toBe(3);
    expect(sunset.conceptCard).not.toBeNull();
    expect(sunset.conceptCard!.statement).toBe(SUNSET_STATEMENT);
    expect(sunset.conceptCard!.gradeDisplay).toBe("Kindergarten");
    expect(sunset.conceptCard!.keyword).toBe("sunset");
    expect(sunset.input?.enabled).toBe(true);

    // The summary also recaps it (frame 13); no other reading frame shows one.
    const summary = asReading(frames[13]!.content);
    expect(summary.conceptCard?.statement).toBe(SUNSET_STATEMENT);
    for (const index of [5, 6, 7, 8, 9, 11, 12]) {
      expect(asReading(frames[index]!.content).conceptCard).toBeNull();
    }
    pass("concept card surfaces the sunset statement on its page only");
  });

  it("keeps dialogue-move tags away from the child", () => {
    for (const frame of frames) {
      const content = frame.content;
      if (content.kind !== "greeting" && content.kind !== "reading") continue;
      for (const bubble of content.bubbles) {
        expect(bubble.moveTags).toEqual([]);
        expect(bubble.text).not.toMatch(/\[[A-Za-z]+\]/);
      }
    }
    pass("companion bubbles are tag-free in child view");
  });

  it("plays narration once clips exist and the mode asks for it", () => {
    // Right after mode setup no companion clip exists yet.
    expect(asReading(frames[5]!.content).audioKey).toBeNull();
    // From the first question onward the latest clip is on deck.
    expect(asReading(frames[6]!.content).audioKey).toMatch(/\.audio$/);
    expect(asReading(frames[10]!.content).audioKey).toMatch(/\.audio$/);
  });
});

describe("recorded mid-book switch to talk-at-the-end", () => {
  let frames: ReplayFrame[];

  beforeAll(async () => {
    const replay = await replayScenario(loadScenario("endonly-toggle"));
    frames = replay.frames;
  });

  it("suppresses mid-book prompts after the toggle, keeps the finale", () => {
    // Frame 8 applies the switch while reading page 2 of 4.
    const toggled = asReading(frames[8]!.content);
    expect(frames[8]!.step.action).toBe("set-mode");
    expect(toggled.pageNumber).toBe(2);
    const endChoice = toggled.modePanel.frequencyChoices.find(
      (c) => c.label === "Talk at the end",
    )!;
    expect(endChoice.disabled).toBe(true); // active choice reads as selected

    // The remaining mid-book pages run clean: no prompt, no typing, just
    // the page-done button. Bubble count stays frozen at the pre-toggle chat.
    const bubblesBefore = toggled.bubbles.length;
    for (const index of [9, 10]) {
      const frame = frames[index]!;
      expect(frame.step.action).toBe("page-done");
      const screen = asReading(frame.content);
      expect(screen.input).toBeNull();
      expect(screen.typing).toBe(false);
      expect(screen.pageDoneButton).not.toBeNull();
      expect(screen.bubbles.length).toBe(bubblesBefore);
      expect(screen.conceptCard).toBeNull();
    }

    // The last page still gets its question, then the summary recap.
    const finale = asReading(frames[11]!.content);
    expect(finale.input?.enabled).toBe(true);
    expect(finale.pageDoneButton).toBeNull();
    const summary = asReading(frames[12]!.content);
    expect(summary.conceptCard?.statement).toBe(SUNSET_STATEMENT);

    const dashboard = frames[13]!.content;
    if (dashboard.kind !== "dashboard") throw new Error("expected dashboard");
    expect(dashboard.childId).toBe("pip");
    expect(dashboard.booksCompleted).toBe(1);
    pass("talk-at-the-end toggle silences mid-book prompts in the rendered session");
  });
});

describe("recorded photo upload", () => {
  it("reviews the blank page, then the book joins the library", async () => {
    const { ui, frames } = await replayScenario(loadScenario("upload-flow"), {
      beforeUpload: (controller) => void controller.openUpload(),
    });

    const draft = frames[1]!.content;
    if (draft.kind !== "upload") throw new Error("expected upload");
    expect(draft.title).toBe("Harbor Day");
    expect(draft.pendingReview).toEqual([2]);
    expect(draft.pages[2]!.needsReview).toBe(true);
    expect(draft.confirmButton.disabled).toBe(true); // blank page blocks confirm

    const edited = frames[2]!.content;
    if (edited.kind !== "upload") throw new Error("expected upload");
    expect(edited.pendingReview).toEqual([]);
    expect(edited.pages[2]!.text).toBe("Home again at dusk.");
    expect(edited.confirmButton.disabled).toBe(false);

    const after = frames[3]!.content;
    if (after.kind !== "library") throw new Error("expected library");
    expect(after.books.some((b) => b.title === "Harbor Day")).toBe(true);
    expect(ui.state.data.draft).toBeNull();
  });
});
