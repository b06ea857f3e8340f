import { ApiError, ApiUnreachable, ModeRequest, ReaderApi } from "./api.js";
import {
  ReaderState,
  checkViewInvariant,
  initialState,
  screenForPhase,
} from "./state.js";

// Drives the view from user actions. All authority lives on the server: every
// action ends by pulling a fresh snapshot and re-deriving the screen from it.

const GENTLE_RETRY = "Oops, let's try that again!";

export class ReaderController {
  state: ReaderState;
  private childId: string | null = null;

  constructor(private readonly api: ReaderApi) {
    this.state = initialState();
  }

  private async guard(work: () => Promise<void>): Promise<void> {
    try {
      await work();
      this.state.offline = false;
    } catch (error) {
      if (error instanceof ApiUnreachable) {
        this.state.offline = true;
      } else if (error instanceof ApiError && (error.status === 409 || error.status === 422)) {
        this.state.notice = GENTLE_RETRY;
      } else {
        throw error;
      }
    } finally {
      this.state.view.pendingTurn = false;
      this.state.pendingChildText = null;
      checkViewInvariant(this.state);
    }
  }

  /** Re-derive the bound session's screen from a fresh snapshot. */
  private async refreshSession(): Promise<void> {
    const sessionId = this.state.view.sessionId;
    if (!sessionId) return;
    const snapshot = await this.api.snapshot(sessionId);
    this.state.data.snapshot = snapshot;
    this.childId = snapshot.state.child_id;
    const screen = screenForPhase(snapshot.state.phase);
    this.state.view.screen = screen;
    if (screen === "Dashboard") {
      this.state.data.dashboard = await this.api.dashboard(snapshot.state.child_id);
    }
  }

  async boot(): Promise<void> {
    await this.guard(async () => {
      this.state.data.library = await this.api.library();
      this.state.view.screen = "Library";
      this.state.notice = null;
    });
  }

  async openBook(childId: string, bookId: string): Promise<void> {
    await this.guard(async () => {
      this.state.notice = null;
      const advance = await this.api.openSession(childId, bookId);
      this.childId = childId;
      this.state.view.sessionId = advance.session_id;
      this.state.data.lastAdvance = advance;
      await this.refreshSession();
    });
  }

  async sendText(text: string): Promise<void> {
    const { sessionId } = this.state.view;
    if (!sessionId || !text.trim()) return;
    this.state.view.pendingTurn = true;
    this.state.pendingChildText = text;
    await this.guard(async () => {
      this.state.notice = null;
      this.state.data.lastAdvance = await this.api.sendText(sessionId, text);
      await this.refreshSession();
    });
  }

  /** Choice buttons post their label verbatim, exactly like typed text. */
  async chooseQuickAnswer(label: string): Promise<void> {
    await this.sendText(label);
  }

  async pageDone(): Promise<void> {
    const { sessionId } = this.state.view;
    if (!sessionId) return;
    this.state.view.pendingTurn = true;
    await this.guard(async () => {
      this.state.notice = null;
      this.state.data.lastAdvance = await this.api.pageComplete(sessionId);
      await this.refreshSession();
    });
  }

  async setMode(mode: ModeRequest): Promise<void> {
    const { sessionId } = this.state.view;
    if (!sessionId) return;
    // The n floor is enforced here as well as in the panel controls.
    if (mode.frequency.kind === "EveryNPages") {
      mode = {
        ...mode,
        frequency: { kind: "EveryNPages", n: Math.max(2, mode.frequency.n ?? 2) },
      };
    }
    await this.guard(async () => {
      this.state.notice = null;
      this.state.data.lastAdvance = await this.api.setMode(sessionId, mode);
      await this.refreshSession();
    });
  }

  async openDashboard(): Promise<void> {
    const childId = this.childId;
    if (!childId) return;
    await this.guard(async () => {
      this.state.data.dashboard = await this.api.dashboard(childId);
      this.state.view.screen = "Dashboard";
    });
  }

  async openUpload(): Promise<void> {
    this.state.view.screen = "Upload";
    this.state.notice = null;
    checkViewInvariant(this.state);
  }

  async submitPhotos(title: string, photosBase64: string[]): Promise<void> {
    await this.guard(async () => {
      this.state.data.draft = await this.api.ingestPhotos(title, photosBase64);
      this.state.view.screen = "Upload";
    });
  }

  async editDraftPage(pageIndex: number, text: string): Promise<void> {
    const draft = this.state.data.draft;
    if (!draft) return;
    await this.guard(async () => {
      this.state.data.draft = await this.api.editDraftPage(draft.draft_id, pageIndex, text);
    });
  }

  async confirmDraft(): Promise<void> {
    const draft = this.state.data.draft;
    if (!draft) return;
    await this.guard(async () => {
      await this.api.confirmDraft(draft.draft_id);
      this.state.data.draft = null;
      this.state.data.library = await this.api.library();
      this.state.view.screen = "Library";
    });
  }

  async backToLibrary(): Promise<void> {
    await this.boot();
  }

  toggleParentOverlay(): void {
    this.state.parentOverlay = !this.state.parentOverlay;
  }
}
