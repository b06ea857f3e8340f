import type { Advance, Dashboard, Draft, Library, Phase, Snapshot } from "./api.js";

export type Screen = "Library" | "Upload" | "Greeting" | "Reading" | "Dashboard";

export interface ViewState {
  screen: Screen;
  sessionId: string | null;
  pendingTurn: boolean;
}

/** Everything fetched from the service that the renderers may draw from. */
export interface ReaderData {
  library: Library | null;
  snapshot: Snapshot | null;
  lastAdvance: Advance | null;
  dashboard: Dashboard | null;
  draft: Draft | null;
}

export interface ReaderState {
  view: ViewState;
  data: ReaderData;
  // Parent/debug overlay; when off, children never see move tags.
  parentOverlay: boolean;
  offline: boolean;
  notice: string | null;
  // Child bubble shown optimistically while its turn is in flight.
  pendingChildText: string | null;
}

export function initialState(): ReaderState {
  return {
    view: { screen: "Library", sessionId: null, pendingTurn: false },
    data: { library: null, snapshot: null, lastAdvance: null, dashboard: null, draft: null },
    parentOverlay: false,
    offline: false,
    notice: null,
    pendingChildText: null,
  };
}

const READING_PHASES: readonly Phase[] = ["Reading", "Interaction", "Summary"];

export function screenForPhase(phase: Phase): Screen {
  if (phase === "Greeting" || phase === "ModeSetup") return "Greeting";
  if (phase === "Completed") return "Dashboard";
  if (READING_PHASES.includes(phase)) return "Reading";
  return "Library";
}

/** A turn is expected from the child whenever the companion just asked. */
export function inputExpected(state: ReaderState): boolean {
  const snapshot = state.data.snapshot;
  if (!snapshot || state.view.pendingTurn) return false;
  // The structured trailer on the latest reply is authoritative when we
  // have it; the phase fold below covers snapshots fetched cold.
  const tail = state.data.lastAdvance?.turns.at(-1);
  if (tail && tail.speaker === "companion") return tail.follow_up_expected;
  const phase = snapshot.state.phase;
  return phase === "Greeting" || phase === "Interaction" || phase === "Summary";
}

/** The one structural rule of the view layer; violated means a bug. */
export function checkViewInvariant(state: ReaderState): void {
  const { view, data } = state;
  if (view.screen !== "Reading") return;
  if (view.sessionId === null) {
    throw new Error("Reading screen with no bound session");
  }
  const phase = data.snapshot?.state.phase;
  if (!phase || !READING_PHASES.includes(phase)) {
    throw new Error(`Reading screen in phase ${phase ?? "unknown"}`);
  }
}

// ---------------------------------------------------------------------------
// text helpers

/** Child-facing text: bracketed move tags out, whitespace smoothed. */
export function stripMoveTags(text: string): string {
  return text
    .replace(/\[[^\]]*\]/g, " ")
    .replace(/\s+/g, " ")
    .trim();
}

/** Sentence-level caption split; keeps terminal punctuation with each line. */
export function splitSentences(text: string): string[] {
  const parts = text.match(/[^.!?]+[.!?]*/g) ?? [];
  return parts.map((p) => p.trim()).filter((p) => p.length > 0);
}
