// Typed client for the /v1 JSON API. Every UI mutation goes through exactly
// one method here, and every method maps to exactly one endpoint.

export interface ApiErrorBody {
  code: string;
  message: string;
}

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

export interface LinkSpan {
  start: number; // byte offsets into the UTF-8 content
  end: number;
  target: string;
}

export interface EntrySummary {
  id: string;
  title: string;
  synonyms: string[];
  kind: string;
  owner: string | null;
  revision: number;
  review_state: string;
  created_at: string;
  updated_at: string;
  open_corrections: number;
}

export interface Correction {
  id: string;
  entry_id: string;
  filer: string;
  text: string;
  severity: string;
  state: string;
  action_taken: string | null;
  resolution_note: string | null;
  filed_at: string;
  resolved_at: string | null;
}

export interface Message {
  id: string;
  target_kind: string;
  target_id: string;
  author: string;
  subject: string;
  body: string;
  posted_at: string;
}

export interface ThreadNode {
  message: Message;
  children: ThreadNode[];
}

export interface EntryPayload extends EntrySummary {
  content: string;
  links: LinkSpan[];
  corrections: Correction[];
  thread: ThreadNode[];
  diagnostics: string[];
}

export interface RequestItem {
  id: string;
  title: string;
  description: string;
  creator: string;
  state: string;
  filled_by: string | null;
  created_at: string;
  filled_at: string | null;
}

export interface Notice {
  id: string;
  user_id: string;
  event_seq: number;
  summary: string;
  cause: string;
  read: boolean;
  created_at: string;
}

export interface ReportRow {
  user: string;
  c0: number;
  c1: number;
  c2: number;
  c3: number;
  total: number;
}

export interface ParticipationReport {
  rows: ReportRow[];
  grand: { c0: number; c1: number; c2: number; c3: number; total: number; owned_entries: number };
}

export interface ClosuresReport {
  from: string;
  to: string;
  tz_offset_minutes: number;
  days: { day: string; count: number }[];
  total: number;
  bunching_index: number | null;
}

export interface Session {
  token: string;
  user_id: string;
  role: string;
  expires_at: string;
}

export class NoosApi {
  token: string | null = null;
  userId: string | null = null;
  role: string | null = null;

  constructor(public baseUrl: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["content-type"] = "application/json";
    if (this.token) headers["authorization"] = `Bearer ${this.token}`;
    const response = await fetch(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    if (!response.ok) {
      let code = `http-${response.status}`;
      let message = text;
      try {
        const parsed = JSON.parse(text) as { error?: ApiErrorBody };
        if (parsed.error) {
          code = parsed.error.code;
          message = parsed.error.message;
        }
      } catch {
        // non-JSON error body; keep raw text
      }
      throw new ApiError(response.status, code, message);
    }
    return (text ? JSON.parse(text) : undefined) as T;
  }

  async login(user: string, secret: string): Promise<Session> {
    const session = await this.request<Session>("POST", "/v1/login", { user, secret });
    this.token = session.token;
    this.userId = session.user_id;
    this.role = session.role;
    return session;
  }

  logout(): void {
    this.token = null;
    this.userId = null;
    this.role = null;
  }

  listEntries(): Promise<{ entries: EntrySummary[] }> {
    return this.request("GET", "/v1/entries");
  }

  getEntry(id: string): Promise<EntryPayload> {
    return this.request("GET", `/v1/entries/${id}`);
  }

  createEntry(body: { title: string; synonyms?: string[]; kind?: string; content?: string }) {
    return this.request<EntryPayload>("POST", "/v1/entries", body);
  }

  reviseEntry(id: string, content: string, expectedRevision: number) {
    return this.request<EntrySummary>("PUT", `/v1/entries/${id}`, {
      content,
      expected_revision: expectedRevision,
    });
  }

  orphanEntry(id: string): Promise<EntrySummary> {
    return this.request("POST", `/v1/entries/${id}/orphan`);
  }

  adoptEntry(id: string): Promise<EntrySummary> {
    return this.request("POST", `/v1/entries/${id}/adopt`);
  }

  transferEntry(id: string, recipient: string): Promise<EntrySummary> {
    return this.request("POST", `/v1/entries/${id}/transfer`, { recipient });
  }

  listOrphans(): Promise<{ entries: EntrySummary[] }> {
    return this.request("GET", "/v1/orphans");
  }

  fileCorrection(entryId: string, text: string, severity: string): Promise<Correction> {
    return this.request("POST", `/v1/entries/${entryId}/corrections`, { text, severity });
  }

  resolveCorrection(correctionId: string, action: string, note: string): Promise<Correction> {
    return this.request("POST", `/v1/corrections/${correctionId}/resolve`, { action, note });
  }

  listRequests(filter: "active" | "filled" | "all"): Promise<{ requests: RequestItem[] }> {
    return this.request("GET", `/v1/requests?filter=${filter}`);
  }

  fulfillRequest(requestId: string, entryId: string): Promise<RequestItem> {
    return this.request("POST", `/v1/requests/${requestId}/fulfill`, { entry: entryId });
  }

  postMessage(targetKind: string, targetId: string, subject: string, body: string): Promise<Message> {
    return this.request("POST", "/v1/messages", {
      target_kind: targetKind,
      target_id: targetId,
      subject,
      body,
    });
  }

  inbox(filter: "all" | "unread"): Promise<{ notices: Notice[] }> {
    return this.request("GET", `/v1/inbox?filter=${filter}`);
  }

  markRead(noticeId: string): Promise<Notice> {
    return this.request("POST", `/v1/notices/${noticeId}/read`);
  }

  participation(): Promise<ParticipationReport> {
    return this.request("GET", "/v1/reports/participation");
  }

  closures(): Promise<ClosuresReport> {
    return this.request("GET", "/v1/reports/closures");
  }
}
