import { z } from "zod";

// Wire schemas for every service payload the reader touches. Responses are
// parsed, not trusted; a shape drift fails loudly at the boundary.

export const PhaseSchema = z.enum([
  "LibraryBrowse",
  "Greeting",
  "ModeSetup",
  "Reading",
  "Interaction",
  "Summary",
  "Completed",
]);
export type Phase = z.infer<typeof PhaseSchema>;

export const SessionStateSchema = z.object({
  phase: PhaseSchema,
  page_index: z.number().int(),
  book_id: z.string(),
  child_id: z.string(),
});
export type SessionState = z.infer<typeof SessionStateSchema>;

export const BookSummarySchema = z.object({
  id: z.string(),
  title: z.string(),
  page_count: z.number().int(),
  tags: z.array(z.string()),
  source: z.string(),
});
export type BookSummary = z.infer<typeof BookSummarySchema>;

export const LibrarySchema = z.object({ books: z.array(BookSummarySchema) });
export type Library = z.infer<typeof LibrarySchema>;

export const HealthSchema = z.object({
  status: z.string(),
  api_version: z.string(),
  offline: z.boolean(),
  books: z.number().int(),
  knowledge_entries: z.number().int(),
});

export const FrequencySchema = z.object({
  kind: z.enum(["EveryPage", "EveryNPages", "EndOnly"]),
  n: z.number().int().nullable(),
});

export const ReadingModeSchema = z.object({
  interaction_enabled: z.boolean(),
  frequency: FrequencySchema,
  knowledge_extension_enabled: z.boolean(),
  narration_enabled: z.boolean(),
});
export type ReadingMode = z.infer<typeof ReadingModeSchema>;

// What PUT /sessions/{id}/mode accepts; omitted fields take server defaults.
export interface ModeRequest {
  interaction_enabled: boolean;
  frequency: { kind: "EveryPage" | "EveryNPages" | "EndOnly"; n?: number };
  knowledge_extension_enabled?: boolean;
  narration_enabled?: boolean;
}

export const AdvanceTurnSchema = z.object({
  speaker: z.enum(["companion", "child"]),
  text: z.string(),
  clean_text: z.string(),
  moves: z.array(z.string()),
  follow_up_expected: z.boolean(),
  audio: z.string().nullable(),
});
export type AdvanceTurn = z.infer<typeof AdvanceTurnSchema>;

export const AdvanceSchema = z.object({
  session_id: z.string(),
  state: SessionStateSchema,
  turns: z.array(AdvanceTurnSchema),
});
export type Advance = z.infer<typeof AdvanceSchema>;

export const SnapshotTurnSchema = z.object({
  kind: z.enum(["greeting", "interaction", "summary"]),
  speaker: z.enum(["companion", "child"]),
  text: z.string(),
  moves: z.array(z.string()),
  page_index: z.number().int().nullable(),
  audio: z.string().nullable(),
});
export type SnapshotTurn = z.infer<typeof SnapshotTurnSchema>;

export const SurfacedKnowledgeSchema = z.object({
  entry_id: z.string(),
  statement: z.string(),
  grade: z.string(),
  grade_display: z.string(),
  keyword: z.string(),
  similarity: z.number(),
  page_index: z.number().int().nullable(),
});
export type SurfacedKnowledge = z.infer<typeof SurfacedKnowledgeSchema>;

export const SnapshotSchema = z.object({
  session_id: z.string(),
  state: SessionStateSchema,
  mode: ReadingModeSchema.nullable(),
  profile: z.object({
    nickname: z.string().nullable(),
    age_years: z.number().int().nullable(),
    interests: z.array(z.string()),
  }),
  book: BookSummarySchema,
  current_page: z.object({
    index: z.number().int(),
    text: z.string(),
    is_last: z.boolean(),
  }),
  turns: z.array(SnapshotTurnSchema),
  knowledge: SurfacedKnowledgeSchema.nullable(),
});
export type Snapshot = z.infer<typeof SnapshotSchema>;

export const DraftSchema = z.object({
  draft_id: z.string(),
  title: z.string(),
  tags: z.array(z.string()),
  pending_review: z.array(z.number().int()),
  confirmed_book_id: z.string().nullable(),
  pages: z.array(
    z.object({
      index: z.number().int(),
      text: z.string(),
      ocr_confidence: z.number(),
      needs_review: z.boolean(),
    }),
  ),
});
export type Draft = z.infer<typeof DraftSchema>;

export const DashboardSchema = z.object({
  child_id: z.string(),
  total_reading_seconds: z.number(),
  books_completed: z.number().int(),
  knowledge_learned: z.array(
    z.object({
      entry_id: z.string(),
      statement: z.string(),
      grade_label: z.string(),
      first_surfaced_wall: z.number(),
    }),
  ),
  current_book: z
    .object({
      book_id: z.string(),
      page_index: z.number().int(),
      page_count: z.number().int(),
      completion_fraction: z.number(),
    })
    .nullable(),
  history: z.array(
    z.object({
      book_id: z.string(),
      completion_fraction: z.number(),
      last_read_wall: z.number(),
      completed: z.boolean(),
    }),
  ),
});
export type Dashboard = z.infer<typeof DashboardSchema>;

export const ErrorEnvelopeSchema = z.object({
  code: z.string(),
  message: z.string(),
  retryable: z.boolean(),
});

// ---------------------------------------------------------------------------
// transport

export type Method = "GET" | "POST" | "PUT" | "PATCH";

export interface TransportResponse {
  status: number;
  json: unknown;
}

/** One HTTP exchange. Tests inject a recorded-replay transport here. */
export type Transport = (
  method: Method,
  path: string,
  body?: unknown,
) => Promise<TransportResponse>;

/** The service said no: carries the stable error code from the envelope. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly retryable: boolean,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** The service could not be reached at all (network failure, not a 4xx/5xx). */
export class ApiUnreachable extends Error {
  constructor(cause: unknown) {
    super(`service unreachable: ${String(cause)}`);
    this.name = "ApiUnreachable";
  }
}

export function fetchTransport(baseUrl: string): Transport {
  return async (method, path, body) => {
    let res: Response;
    try {
      res = await fetch(baseUrl + path, {
        method,
        headers: body === undefined ? {} : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (cause) {
      throw new ApiUnreachable(cause);
    }
    return { status: res.status, json: await res.json() };
  };
}

// ---------------------------------------------------------------------------
// client

export class ReaderApi {
  constructor(private readonly transport: Transport) {}

  private async call<T>(
    schema: z.ZodType<T>,
    method: Method,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const res = await this.transport(method, path, body);
    if (res.status >= 400) {
      const envelope = ErrorEnvelopeSchema.safeParse(res.json);
      if (envelope.success) {
        const e = envelope.data;
        throw new ApiError(res.status, e.code, e.message, e.retryable);
      }
      throw new ApiError(res.status, "unknown_error", `HTTP ${res.status}`, false);
    }
    return schema.parse(res.json);
  }

  health() {
    return this.call(HealthSchema, "GET", "/healthz");
  }

  library() {
    return this.call(LibrarySchema, "GET", "/library");
  }

  ingestPhotos(title: string, photosBase64: string[], tags: string[] = []) {
    return this.call(DraftSchema, "POST", "/books/photos", {
      title,
      photos_base64: photosBase64,
      tags,
    });
  }

  editDraftPage(draftId: string, pageIndex: number, text: string) {
    return this.call(DraftSchema, "PATCH", `/books/${draftId}/pages/${pageIndex}`, {
      text,
    });
  }

  confirmDraft(draftId: string) {
    return this.call(BookSummarySchema, "POST", `/books/${draftId}/confirm`);
  }

  openSession(childId: string, bookId: string) {
    return this.call(AdvanceSchema, "POST", "/sessions", {
      child_id: childId,
      book_id: bookId,
    });
  }

  snapshot(sessionId: string) {
    return this.call(SnapshotSchema, "GET", `/sessions/${sessionId}`);
  }

  sendText(sessionId: string, text: string) {
    return this.call(AdvanceSchema, "POST", `/sessions/${sessionId}/turns`, { text });
  }

  pageComplete(sessionId: string) {
    return this.call(AdvanceSchema, "POST", `/sessions/${sessionId}/turns`, {
      page_complete: true,
    });
  }

  setMode(sessionId: string, mode: ModeRequest) {
    return this.call(AdvanceSchema, "PUT", `/sessions/${sessionId}/mode`, mode);
  }

  dashboard(childId: string) {
    return this.call(DashboardSchema, "GET", `/dashboard/${childId}`);
  }

  /** Narration bytes are fetched by the audio element, not through JSON. */
  audioPath(key: string): string {
    return `/audio/${key}`;
  }
}
