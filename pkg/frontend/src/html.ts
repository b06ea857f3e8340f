import type { Control } from "./controls.js";
import type { Bubble, InputPanel, ModePanel, ScreenContent } from "./screens.js";

// Turns screen content into markup. Pure string building so it runs (and is
// tested) without a DOM; the browser shell wires events via data-action.

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function button(control: Control, extraClass = ""): string {
  const payload =
    control.payload === null ? "" : ` data-payload="${escapeHtml(control.payload)}"`;
  const disabled = control.disabled ? " disabled" : "";
  const size = `min-width:${control.targetPx}px;min-height:${control.targetPx}px`;
  return (
    `<button class="big-target ${extraClass}" data-action="${escapeHtml(control.action)}"` +
    `${payload} style="${size}"${disabled}>${escapeHtml(control.label)}</button>`
  );
}

function banner(offline: boolean, notice: string | null): string {
  const parts: string[] = [];
  if (offline) {
    parts.push('<div class="banner offline">We lost the connection. Hold on!</div>');
  }
  if (notice) {
    parts.push(`<div class="banner notice">${escapeHtml(notice)}</div>`);
  }
  return parts.join("");
}

function bubbles(items: Bubble[]): string {
  return items
    .map((bubble) => {
      const tags = bubble.moveTags.length
        ? `<span class="move-tags">${bubble.moveTags.map(escapeHtml).join(" · ")}</span>`
        : "";
      const pending = bubble.pending ? " pending" : "";
      return (
        `<div class="bubble ${bubble.speaker}${pending}">` +
        `${escapeHtml(bubble.text)}${tags}</div>`
      );
    })
    .join("");
}

function inputPanel(panel: InputPanel | null, typing: boolean): string {
  const indicator = typing ? '<div class="typing">...</div>' : "";
  if (!panel) return indicator;
  const quick = panel.quickAnswers.map((c) => button(c, "quick")).join("");
  const field = `<input class="say" type="text" data-role="say" ${panel.enabled ? "" : "disabled"}/>`;
  return `${indicator}<div class="input-panel">${quick}${field}${button(panel.submit)}</div>`;
}

function modePanel(panel: ModePanel | null): string {
  if (!panel) return "";
  const stepper =
    panel.nUp && panel.nDown
      ? `${button(panel.nDown)}<span class="n">${panel.currentN}</span>${button(panel.nUp)}`
      : "";
  return (
    '<div class="mode-panel">' +
    panel.frequencyChoices.map((c) => button(c)).join("") +
    stepper +
    panel.toggles.map((c) => button(c)).join("") +
    "</div>"
  );
}

export function renderHtml(content: ScreenContent): string {
  const head = banner(content.offlineBanner, content.notice);
  switch (content.kind) {
    case "library":
      return (
        `${head}<section class="library"><h1>Pick a story</h1>` +
        content.books
          .map(
            (book) =>
              `<div class="book-card">${button(book.open, "book")}` +
              `<span class="pages">${book.pageCount} pages</span></div>`,
          )
          .join("") +
        button(content.uploadButton) +
        button(content.dashboardButton) +
        "</section>"
      );
    case "upload":
      return (
        `${head}<section class="upload"><h1>${escapeHtml(content.title ?? "New book")}</h1>` +
        content.pages
          .map(
            (page) =>
              `<div class="draft-page${page.needsReview ? " review" : ""}">` +
              `<p>${escapeHtml(page.text) || "<em>needs your words</em>"}</p>` +
              button(page.edit) +
              "</div>",
          )
          .join("") +
        button(content.confirmButton) +
        button(content.backButton) +
        "</section>"
      );
    case "greeting":
      return (
        `${head}<section class="greeting">` +
        `<div class="chat">${bubbles(content.bubbles)}</div>` +
        inputPanel(content.input, content.typing) +
        modePanel(content.modePanel) +
        "</section>"
      );
    case "reading": {
      const concept = content.conceptCard
        ? `<aside class="concept-card"><strong>${escapeHtml(content.conceptCard.statement)}</strong>` +
          `<span class="grade">${escapeHtml(content.conceptCard.gradeDisplay)}</span></aside>`
        : "";
      const audio = content.audioKey
        ? `<audio data-key="${escapeHtml(content.audioKey)}" autoplay></audio>`
        : "";
      return (
        `${head}<section class="reading"><h1>${escapeHtml(content.bookTitle)}</h1>` +
        `<div class="page-number">Page ${content.pageNumber} of ${content.pageCount}</div>` +
        `<div class="caption">` +
        content.caption.map((s) => `<span class="sentence">${escapeHtml(s)}</span>`).join(" ") +
        "</div>" +
        concept +
        `<div class="chat">${bubbles(content.bubbles)}</div>` +
        inputPanel(content.input, content.typing) +
        (content.pageDoneButton ? button(content.pageDoneButton, "page-done") : "") +
        modePanel(content.modePanel) +
        audio +
        "</section>"
      );
    }
    case "dashboard":
      return (
        `${head}<section class="dashboard"><h1>My reading</h1>` +
        `<div class="stat">${content.readingMinutes} minutes read</div>` +
        `<div class="stat">${content.booksCompleted} books finished</div>` +
        `<ul class="learned">` +
        content.learned
          .map(
            (item) =>
              `<li>${escapeHtml(item.statement)} <span class="grade">${escapeHtml(item.gradeLabel)}</span></li>`,
          )
          .join("") +
        "</ul><ul class=\"history\">" +
        content.history
          .map(
            (row) =>
              `<li>${escapeHtml(row.bookId)}: ${row.percent}%${row.completed ? " ✓" : ""}</li>`,
          )
          .join("") +
        "</ul>" +
        button(content.backButton) +
        "</section>"
      );
  }
}
