import { ReaderApi, fetchTransport } from "./api.js";
import { ReaderController } from "./controller.js";
import { renderHtml } from "./html.js";
import { render } from "./screens.js";

// Browser shell. Everything interesting lives in the pure modules; this file
// only wires DOM events to controller calls and repaints after each one.

declare global {
  interface Window {
    READALONG_API?: string;
  }
}

function start(): void {
  const base = window.READALONG_API ?? "";
  const controller = new ReaderController(new ReaderApi(fetchTransport(base)));
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");

  let audio: HTMLAudioElement | null = null;

  const paint = () => {
    const content = render(controller.state);
    root.innerHTML = renderHtml(content);
    const key = content.kind === "reading" ? content.audioKey : null;
    if (key) {
      if (!audio || audio.dataset.key !== key) {
        audio?.pause();
        audio = new Audio(base + `/audio/${key}`);
        audio.dataset.key = key;
        void audio.play().catch(() => undefined);
      }
    } else {
      // Narration off or no clip for this view: stop anything playing.
      audio?.pause();
      audio = null;
    }
  };

  const run = (work: Promise<void>) => {
    paint(); // show pending state immediately
    void work.then(paint, (error) => {
      console.error(error);
      paint();
    });
  };

  root.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!target) return;
    const action = target.dataset.action ?? "";
    const payload = target.dataset.payload ?? "";
    const say = root.querySelector<HTMLInputElement>('input[data-role="say"]');
    switch (action) {
      case "open-library":
        return run(controller.backToLibrary());
      case "open-upload":
        return run(controller.openUpload());
      case "open-book": {
        const childId = window.prompt("Who is reading today?") ?? "";
        if (!childId.trim()) return;
        return run(controller.openBook(childId.trim().toLowerCase(), payload));
      }
      case "send-text": {
        const text = say?.value ?? "";
        if (!text.trim()) return;
        return run(controller.sendText(text));
      }
      case "quick-answer":
        return run(controller.chooseQuickAnswer(payload));
      case "page-done":
        return run(controller.pageDone());
      case "set-mode":
        return run(controller.setMode(JSON.parse(payload)));
      case "open-dashboard":
        return run(controller.openDashboard());
      case "edit-page": {
        const text = window.prompt("What should this page say?") ?? "";
        if (!text.trim()) return;
        return run(controller.editDraftPage(Number(payload), text));
      }
      case "confirm-draft":
        return run(controller.confirmDraft());
      default:
        return;
    }
  });

  root.addEventListener("keydown", (event) => {
    const keyboard = event as KeyboardEvent;
    const field = event.target as HTMLElement;
    if (keyboard.key === "Enter" && field.matches('input[data-role="say"]')) {
      const text = (field as HTMLInputElement).value;
      if (text.trim()) run(controller.sendText(text));
    }
  });

  // Parent overlay: long-press is fiddly in a plain shell, so a keyboard
  // chord does it here; a deployed build would hide this behind a gesture.
  document.addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "F2") {
      controller.toggleParentOverlay();
      paint();
    }
  });

  run(controller.boot());
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", start);
}
