import type { ModeRequest, ReadingMode, Snapshot, SnapshotTurn } from "./api.js";
import { Control, mkControl } from "./controls.js";
import {
  ReaderState,
  inputExpected,
  splitSentences,
  stripMoveTags,
} from "./state.js";

// Renderers are pure: ReaderState in, serializable screen content out.
// Nothing here touches the network or the DOM.

export interface Bubble {
  speaker: "companion" | "child";
  text: string;
  moveTags: string[]; // empty unless the parent overlay is on
  pending: boolean;
}

export interface InputPanel {
  enabled: boolean;
  quickAnswers: Control[];
  submit: Control;
}

export interface ModePanel {
  frequencyChoices: Control[];
  nUp: Control | null;
  nDown: Control | null;
  currentN: number | null;
  toggles: Control[];
}

export interface ConceptCard {
  statement: string;
  gradeDisplay: string;
  keyword: string;
}

export interface LibraryScreen {
  kind: "library";
  books: { id: string; title: string; pageCount: number; open: Control }[];
  uploadButton: Control;
  dashboardButton: Control;
  offlineBanner: boolean;
  notice: string | null;
}

export interface UploadScreen {
  kind: "upload";
  title: string | null;
  pages: { index: number; text: string; needsReview: boolean; edit: Control }[];
  pendingReview: number[];
  confirmButton: Control;
  backButton: Control;
  offlineBanner: boolean;
  notice: string | null;
}

export interface GreetingScreen {
  kind: "greeting";
  bubbles: Bubble[];
  typing: boolean;
  input: InputPanel | null;
  modePanel: ModePanel | null; // appears once the companion hands over to setup
  offlineBanner: boolean;
  notice: string | null;
}

export interface ReadingScreen {
  kind: "reading";
  bookTitle: string;
  pageNumber: number; // 1-based for display
  pageCount: number;
  caption: string[];
  conceptCard: ConceptCard | null;
  bubbles: Bubble[];
  typing: boolean;
  input: InputPanel | null; // null while just reading: no prompt on screen
  pageDoneButton: Control | null;
  modePanel: ModePanel;
  audioKey: string | null;
  offlineBanner: boolean;
  notice: string | null;
}

export interface DashboardScreen {
  kind: "dashboard";
  childId: string;
  readingMinutes: number;
  booksCompleted: number;
  learned: { statement: string; gradeLabel: string }[];
  history: { bookId: string; percent: number; completed: boolean }[];
  backButton: Control;
  offlineBanner: boolean;
  notice: string | null;
}

export type ScreenContent =
  | LibraryScreen
  | UploadScreen
  | GreetingScreen
  | ReadingScreen
  | DashboardScreen;

// ---------------------------------------------------------------------------
// pieces

export const DONT_KNOW = "I don't know.";
const QUICK_ANSWER_CHOICES = [DONT_KNOW, "Yes!", "Can you tell me more?"];

export function buildInputPanel(state: ReaderState): InputPanel | null {
  const expected = inputExpected(state);
  if (!expected && !state.view.pendingTurn) return null;
  return {
    enabled: expected,
    quickAnswers: QUICK_ANSWER_CHOICES.map((choice) =>
      mkControl("quick-answer", choice, { disabled: !expected, payload: choice }),
    ),
    submit: mkControl("send-text", "Send", { disabled: !expected }),
  };
}

function bubbleFromTurn(turn: SnapshotTurn, parentOverlay: boolean): Bubble {
  return {
    speaker: turn.speaker,
    text: turn.speaker === "companion" ? stripMoveTags(turn.text) : turn.text,
    moveTags: parentOverlay ? turn.moves : [],
    pending: false,
  };
}

export function conceptCardFor(snapshot: Snapshot): ConceptCard | null {
  const surfaced = snapshot.knowledge;
  if (!surfaced) return null;
  const onThisPage = surfaced.page_index === snapshot.current_page.index;
  const inSummary = surfaced.page_index === null && snapshot.state.phase === "Summary";
  if (!onThisPage && !inSummary) return null;
  return {
    statement: surfaced.statement,
    gradeDisplay: surfaced.grade_display,
    keyword: surfaced.keyword,
  };
}

const DEFAULT_MODE: ReadingMode = {
  interaction_enabled: true,
  frequency: { kind: "EveryPage", n: null },
  knowledge_extension_enabled: true,
  narration_enabled: false,
};

export function modeRequest(mode: ReadingMode): ModeRequest {
  const request: ModeRequest = {
    interaction_enabled: mode.interaction_enabled,
    frequency:
      mode.frequency.kind === "EveryNPages"
        ? { kind: "EveryNPages", n: mode.frequency.n ?? 2 }
        : { kind: mode.frequency.kind },
    knowledge_extension_enabled: mode.knowledge_extension_enabled,
    narration_enabled: mode.narration_enabled,
  };
  return request;
}

function modeControl(label: string, next: ReadingMode, active: boolean): Control {
  return mkControl("set-mode", label, {
    payload: JSON.stringify(modeRequest(next)),
    disabled: active,
  });
}

export function buildModePanel(mode: ReadingMode | null): ModePanel {
  const current = mode ?? DEFAULT_MODE;
  const freq = current.frequency;
  const n = freq.kind === "EveryNPages" ? (freq.n ?? 2) : null;

  const withFrequency = (
    kind: ReadingMode["frequency"]["kind"],
    newN: number | null,
  ): ReadingMode => ({ ...current, frequency: { kind, n: newN } });

  const frequencyChoices = [
    modeControl("Talk every page", withFrequency("EveryPage", null), freq.kind === "EveryPage"),
    modeControl(
      `Talk every ${n ?? 2} pages`,
      withFrequency("EveryNPages", n ?? 2),
      freq.kind === "EveryNPages",
    ),
    modeControl("Talk at the end", withFrequency("EndOnly", null), freq.kind === "EndOnly"),
  ];

  // The stepper refuses to go below 2: every page has its own setting.
  const nUp =
    freq.kind === "EveryNPages"
      ? modeControl("More pages between talks", withFrequency("EveryNPages", (n ?? 2) + 1), false)
      : null;
  const nDown =
    freq.kind === "EveryNPages"
      ? modeControl(
          "Fewer pages between talks",
          withFrequency("EveryNPages", Math.max(2, (n ?? 2) - 1)),
          (n ?? 2) <= 2,
        )
      : null;

  const toggles = [
    modeControl(
      current.interaction_enabled ? "Questions: on" : "Questions: off",
      { ...current, interaction_enabled: !current.interaction_enabled },
      false,
    ),
    modeControl(
      current.knowledge_extension_enabled ? "Fun facts: on" : "Fun facts: off",
      { ...current, knowledge_extension_enabled: !current.knowledge_extension_enabled },
      false,
    ),
    modeControl(
      current.narration_enabled ? "Read aloud: on" : "Read aloud: off",
      { ...current, narration_enabled: !current.narration_enabled },
      false,
    ),
  ];

  return { frequencyChoices, nUp, nDown, currentN: n, toggles };
}

/** Which narration clip the reading view should be playing, if any. */
export function audioKeyFor(snapshot: Snapshot): string | null {
  if (!snapshot.mode?.narration_enabled) return null;
  for (let i = snapshot.turns.length - 1; i >= 0; i--) {
    const turn = snapshot.turns[i];
    if (turn && turn.speaker === "companion" && turn.audio) return turn.audio;
  }
  return null;
}

// ---------------------------------------------------------------------------
// screens

function renderLibrary(state: ReaderState): LibraryScreen {
  const books = state.data.library?.books ?? [];
  return {
    kind: "library",
    books: books.map((book) => ({
      id: book.id,
      title: book.title,
      pageCount: book.page_count,
      open: mkControl("open-book", book.title, { payload: book.id, targetPx: 96 }),
    })),
    uploadButton: mkControl("open-upload", "Add a book from photos"),
    dashboardButton: mkControl("open-dashboard", "My reading"),
    offlineBanner: state.offline,
    notice: state.notice,
  };
}

function renderUpload(state: ReaderState): UploadScreen {
  const draft = state.data.draft;
  return {
    kind: "upload",
    title: draft?.title ?? null,
    pages:
      draft?.pages.map((page) => ({
        index: page.index,
        text: page.text,
        needsReview: page.needs_review,
        edit: mkControl("edit-page", `Fix page ${page.index + 1}`, {
          payload: String(page.index),
        }),
      })) ?? [],
    pendingReview: draft?.pending_review ?? [],
    confirmButton: mkControl("confirm-draft", "Add to library", {
      disabled: !draft || draft.pending_review.length > 0,
    }),
    backButton: mkControl("open-library", "Back to books"),
    offlineBanner: state.offline,
    notice: state.notice,
  };
}

function chatBubbles(
  state: ReaderState,
  kinds: readonly SnapshotTurn["kind"][],
): Bubble[] {
  const snapshot = state.data.snapshot;
  const bubbles = (snapshot?.turns ?? [])
    .filter((turn) => kinds.includes(turn.kind))
    .map((turn) => bubbleFromTurn(turn, state.parentOverlay));
  if (state.pendingChildText !== null) {
    bubbles.push({
      speaker: "child",
      text: state.pendingChildText,
      moveTags: [],
      pending: true,
    });
  }
  return bubbles;
}

function renderGreeting(state: ReaderState): GreetingScreen {
  const snapshot = state.data.snapshot;
  const atModeSetup = snapshot?.state.phase === "ModeSetup";
  return {
    kind: "greeting",
    bubbles: chatBubbles(state, ["greeting"]),
    typing: state.view.pendingTurn,
    input: atModeSetup ? null : buildInputPanel(state),
    modePanel: atModeSetup ? buildModePanel(snapshot?.mode ?? null) : null,
    offlineBanner: state.offline,
    notice: state.notice,
  };
}

function renderReading(state: ReaderState): ReadingScreen {
  const snapshot = state.data.snapshot;
  if (!snapshot) throw new Error("reading screen without a snapshot");
  const phase = snapshot.state.phase;
  const input = buildInputPanel(state);
  return {
    kind: "reading",
    bookTitle: snapshot.book.title,
    pageNumber: snapshot.current_page.index + 1,
    pageCount: snapshot.book.page_count,
    caption: splitSentences(snapshot.current_page.text),
    conceptCard: conceptCardFor(snapshot),
    bubbles: chatBubbles(state, ["interaction", "summary"]),
    typing: state.view.pendingTurn,
    input,
    pageDoneButton:
      phase === "Reading" && !state.view.pendingTurn
        ? mkControl("page-done", "I finished this page", { targetPx: 72 })
        : null,
    modePanel: buildModePanel(snapshot.mode),
    audioKey: audioKeyFor(snapshot),
    offlineBanner: state.offline,
    notice: state.notice,
  };
}

function renderDashboard(state: ReaderState): DashboardScreen {
  const dashboard = state.data.dashboard;
  return {
    kind: "dashboard",
    childId: dashboard?.child_id ?? "",
    readingMinutes: Math.round((dashboard?.total_reading_seconds ?? 0) / 60),
    booksCompleted: dashboard?.books_completed ?? 0,
    learned:
      dashboard?.knowledge_learned.map((item) => ({
        statement: item.statement,
        gradeLabel: item.grade_label,
      })) ?? [],
    history:
      dashboard?.history.map((row) => ({
        bookId: row.book_id,
        percent: Math.round(row.completion_fraction * 100),
        completed: row.completed,
      })) ?? [],
    backButton: mkControl("open-library", "Back to books"),
    offlineBanner: state.offline,
    notice: state.notice,
  };
}

export function render(state: ReaderState): ScreenContent {
  switch (state.view.screen) {
    case "Library":
      return renderLibrary(state);
    case "Upload":
      return renderUpload(state);
    case "Greeting":
      return renderGreeting(state);
    case "Reading":
      return renderReading(state);
    case "Dashboard":
      return renderDashboard(state);
  }
}

/** Every actionable control in a rendered screen, for accessibility audits. */
export function controlsOf(content: ScreenContent): Control[] {
  const controls: Control[] = [];
  const addPanel = (panel: InputPanel | null) => {
    if (!panel) return;
    controls.push(...panel.quickAnswers, panel.submit);
  };
  const addMode = (panel: ModePanel | null) => {
    if (!panel) return;
    controls.push(...panel.frequencyChoices, ...panel.toggles);
    if (panel.nUp) controls.push(panel.nUp);
    if (panel.nDown) controls.push(panel.nDown);
  };
  switch (content.kind) {
    case "library":
      controls.push(...content.books.map((b) => b.open));
      controls.push(content.uploadButton, content.dashboardButton);
      break;
    case "upload":
      controls.push(...content.pages.map((p) => p.edit));
      controls.push(content.confirmButton, content.backButton);
      break;
    case "greeting":
      addPanel(content.input);
      addMode(content.modePanel);
      break;
    case "reading":
      addPanel(content.input);
      addMode(content.modePanel);
      if (content.pageDoneButton) controls.push(content.pageDoneButton);
      break;
    case "dashboard":
      controls.push(content.backButton);
      break;
  }
  return controls;
}
