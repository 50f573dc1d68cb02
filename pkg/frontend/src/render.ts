// Pure DOM builders. Every mutation handler awaits exactly one API call and
// then asks the app to refetch; nothing is rendered optimistically.

import {
  ApiError,
  ClosuresReport,
  Correction,
  EntryPayload,
  EntrySummary,
  Notice,
  NoosApi,
  ParticipationReport,
  RequestItem,
  ThreadNode,
} from "./api.js";
import { renderMathIn } from "./math.js";

export interface ViewCtx {
  api: NoosApi;
  navigate: (route: string) => void;
  refresh: () => Promise<void>;
  flash: (text: string) => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function button(label: string, className: string, onClick: () => void): HTMLButtonElement {
  const node = el("button", className, label);
  node.addEventListener("click", onClick);
  return node;
}

// surfaces the machine-readable code verbatim, plus the human message
export function describeError(error: unknown): string {
  if (error instanceof ApiError) return `${error.code}: ${error.message}`;
  return String(error);
}

async function act(ctx: ViewCtx, mutation: () => Promise<unknown>): Promise<boolean> {
  try {
    await mutation();
  } catch (error) {
    ctx.flash(describeError(error));
    return false;
  }
  await ctx.refresh();
  return true;
}

// -- entry page -----------------------------------------------------------

export function linkedContentElement(content: string, links: EntryPayload["links"]): HTMLElement {
  const host = el("div", "entry-content");
  const bytes = new TextEncoder().encode(content);
  const decoder = new TextDecoder();
  let pos = 0;
  for (const span of [...links].sort((a, b) => a.start - b.start)) {
    if (span.start > pos) {
      host.appendChild(document.createTextNode(decoder.decode(bytes.slice(pos, span.start))));
    }
    const anchor = el("a", "nooslink");
    anchor.setAttribute("href", `#/entry/${span.target}`);
    anchor.dataset.target = span.target;
    anchor.textContent = decoder.decode(bytes.slice(span.start, span.end));
    host.appendChild(anchor);
    pos = span.end;
  }
  host.appendChild(document.createTextNode(decoder.decode(bytes.slice(pos))));
  renderMathIn(host);
  return host;
}

const SEVERITY_RANK: Record<string, number> = { error: 0, improvement: 1, style: 2 };

function correctionBlock(payload: EntryPayload, ctx: ViewCtx): HTMLElement {
  const block = el("section", "corrections");
  block.appendChild(el("h3", "", `Open corrections (${payload.corrections.length})`));
  const isOwner = ctx.api.userId !== null && ctx.api.userId === payload.owner;
  const isModerator = ctx.api.role === "instructor" || ctx.api.role === "admin";
  const displayOrder = [...payload.corrections].sort(
    (a, b) =>
      (SEVERITY_RANK[a.severity] ?? 9) - (SEVERITY_RANK[b.severity] ?? 9) ||
      a.filed_at.localeCompare(b.filed_at),
  );
  for (const correction of displayOrder) {
    const item = el("div", "correction pinned");
    item.dataset.correctionId = correction.id;
    item.appendChild(el("span", "severity", `[${correction.severity}] `));
    item.appendChild(el("span", "filer", `${correction.filer}: `));
    item.appendChild(el("span", "text", correction.text));
    if (isOwner || isModerator) {
      item.appendChild(resolveForm(correction, ctx));
    }
    block.appendChild(item);
  }
  return block;
}

function resolveForm(correction: Correction, ctx: ViewCtx): HTMLElement {
  const form = el("div", "resolve-form");
  const action = el("input");
  action.placeholder = "action taken";
  action.className = "resolve-action";
  const note = el("input");
  note.placeholder = "why";
  note.className = "resolve-note";
  form.append(
    action,
    note,
    button("Resolve", "resolve-button", () => {
      void act(ctx, () => ctx.api.resolveCorrection(correction.id, action.value, note.value));
    }),
  );
  return form;
}

function fileCorrectionForm(payload: EntryPayload, ctx: ViewCtx): HTMLElement {
  const form = el("div", "file-correction");
  const text = el("input");
  text.placeholder = "what is wrong";
  text.className = "correction-text";
  const severity = el("select");
  severity.className = "correction-severity";
  for (const value of ["error", "improvement", "style"]) {
    const option = el("option", "", value);
    option.value = value;
    severity.appendChild(option);
  }
  form.append(
    text,
    severity,
    button("File correction", "file-correction-button", () => {
      void act(ctx, () => ctx.api.fileCorrection(payload.id, text.value, severity.value));
    }),
  );
  return form;
}

function editor(payload: EntryPayload, ctx: ViewCtx): HTMLElement {
  const section = el("section", "editor");
  const textarea = el("textarea");
  textarea.className = "content-editor";
  // exact bytes in, exact bytes (plus the user's edits) out
  textarea.value = payload.content;
  const conflict = el("div", "conflict-prompt");
  conflict.style.display = "none";
  section.append(
    textarea,
    button("Save revision", "save-button", () => {
      void (async () => {
        try {
          await ctx.api.reviseEntry(payload.id, textarea.value, payload.revision);
        } catch (error) {
          if (error instanceof ApiError && error.code === "revision-conflict") {
            conflict.textContent =
              "revision-conflict: someone saved a newer revision; reload to merge your edit";
            conflict.style.display = "";
            conflict.appendChild(
              button("Reload", "reload-button", () => void ctx.refresh()),
            );
            return;
          }
          ctx.flash(describeError(error));
          return;
        }
        await ctx.refresh();
      })();
    }),
    conflict,
  );
  return section;
}

function threadNodeElement(node: ThreadNode, ctx: ViewCtx): HTMLElement {
  const item = el("div", "message");
  item.dataset.messageId = node.message.id;
  item.appendChild(el("div", "message-head", `${node.message.author} — ${node.message.subject}`));
  item.appendChild(el("div", "message-body", node.message.body));
  if (ctx.api.userId) {
    const reply = el("input");
    reply.placeholder = "reply";
    item.append(
      reply,
      button("Reply", "reply-button", () => {
        void act(ctx, () => ctx.api.postMessage("message", node.message.id, "", reply.value));
      }),
    );
  }
  const children = el("div", "replies");
  for (const child of node.children) children.appendChild(threadNodeElement(child, ctx));
  item.appendChild(children);
  return item;
}

export function entryPage(payload: EntryPayload, ctx: ViewCtx): HTMLElement {
  const page = el("article", "entry-page");
  page.dataset.entryId = payload.id;
  page.appendChild(el("h2", "entry-title", payload.title));
  const meta = el(
    "div",
    "entry-meta",
    `${payload.kind} · owner: ${payload.owner ?? "ORPHANED"} · revision ${payload.revision}` +
      ` · ${payload.review_state} `,
  );
  page.appendChild(meta);

  const me = ctx.api.userId;
  if (payload.owner === null && me) {
    meta.appendChild(
      button("Adopt", "adopt-button", () => {
        void act(ctx, () => ctx.api.adoptEntry(payload.id));
      }),
    );
  }

  page.appendChild(linkedContentElement(payload.content, payload.links));
  if (payload.diagnostics.length) {
    const diag = el("div", "diagnostics");
    for (const message of payload.diagnostics) diag.appendChild(el("div", "", message));
    page.appendChild(diag);
  }

  if (payload.corrections.length) page.appendChild(correctionBlock(payload, ctx));

  const isOwner = me !== null && me === payload.owner;
  const isModerator = ctx.api.role === "instructor" || ctx.api.role === "admin";
  if (me && !isOwner) page.appendChild(fileCorrectionForm(payload, ctx));
  if (isOwner || (isModerator && payload.owner !== null)) page.appendChild(editor(payload, ctx));

  const thread = el("section", "thread");
  thread.appendChild(el("h3", "", "Discussion"));
  for (const node of payload.thread) thread.appendChild(threadNodeElement(node, ctx));
  if (me) {
    const subject = el("input");
    subject.placeholder = "subject";
    subject.className = "post-subject";
    const body = el("input");
    body.placeholder = "ask or comment";
    body.className = "post-body";
    thread.append(
      subject,
      body,
      button("Post", "post-button", () => {
        void act(ctx, () => ctx.api.postMessage("entry", payload.id, subject.value, body.value));
      }),
    );
  }
  page.appendChild(thread);
  return page;
}

// -- workflow panels -----------------------------------------------------------

export function entriesTable(entries: EntrySummary[], caption: string): HTMLElement {
  const section = el("section", "entries");
  section.appendChild(el("h2", "", caption));
  const table = el("table", "entry-table");
  for (const entry of entries) {
    const row = el("tr");
    row.dataset.entryId = entry.id;
    const title = el("td");
    const link = el("a", "", entry.title);
    link.setAttribute("href", `#/entry/${entry.id}`);
    title.appendChild(link);
    row.appendChild(title);
    row.appendChild(el("td", "", entry.owner ?? "ORPHANED"));
    row.appendChild(el("td", "", `rev ${entry.revision}`));
    row.appendChild(el("td", "", `${entry.open_corrections} open`));
    table.appendChild(row);
  }
  section.appendChild(table);
  return section;
}

export function orphansPanel(entries: EntrySummary[], ctx: ViewCtx): HTMLElement {
  const section = el("section", "orphans");
  section.appendChild(el("h2", "", `Orphaned entries (${entries.length})`));
  for (const entry of entries) {
    const row = el("div", "orphan-row");
    row.dataset.entryId = entry.id;
    const link = el("a", "", entry.title);
    link.setAttribute("href", `#/entry/${entry.id}`);
    row.appendChild(link);
    if (ctx.api.userId) {
      row.appendChild(
        button("Adopt", "adopt-button", () => {
          void act(ctx, () => ctx.api.adoptEntry(entry.id));
        }),
      );
    }
    section.appendChild(row);
  }
  return section;
}

export function requestsPanel(
  requests: RequestItem[],
  filter: string,
  ctx: ViewCtx,
): HTMLElement {
  const section = el("section", "requests");
  section.appendChild(el("h2", "", `Requests (${filter})`));
  const filters = el("div", "request-filters");
  for (const value of ["active", "filled", "all"]) {
    filters.appendChild(
      button(value, `filter-${value}`, () => ctx.navigate(`#/requests/${value}`)),
    );
  }
  section.appendChild(filters);
  for (const request of requests) {
    const row = el("div", "request-row");
    row.dataset.requestId = request.id;
    row.appendChild(el("span", "request-state", `[${request.state}] `));
    row.appendChild(el("span", "request-title", request.title));
    if (request.state === "active" && ctx.api.userId) {
      const entryId = el("input");
      entryId.placeholder = "your entry id";
      row.append(
        entryId,
        button("Fulfill", "fulfill-button", () => {
          void act(ctx, () => ctx.api.fulfillRequest(request.id, entryId.value));
        }),
      );
    }
    if (request.filled_by) {
      const link = el("a", "", ` → ${request.filled_by}`);
      link.setAttribute("href", `#/entry/${request.filled_by}`);
      row.appendChild(link);
    }
    section.appendChild(row);
  }
  return section;
}

export function inboxPanel(notices: Notice[], filter: string, ctx: ViewCtx): HTMLElement {
  const section = el("section", "inbox");
  section.appendChild(el("h2", "", `Inbox (${filter})`));
  const toggle = filter === "unread" ? "all" : "unread";
  section.appendChild(button(`show ${toggle}`, "inbox-toggle", () => ctx.navigate(`#/inbox/${toggle}`)));
  for (const notice of notices) {
    const row = el("div", notice.read ? "notice read" : "notice unread");
    row.dataset.noticeId = notice.id;
    row.appendChild(el("span", "", notice.summary));
    if (!notice.read) {
      row.appendChild(
        button("Mark read", "mark-read-button", () => {
          void act(ctx, () => ctx.api.markRead(notice.id));
        }),
      );
    }
    section.appendChild(row);
  }
  return section;
}

export function scoreboard(report: ParticipationReport): HTMLElement {
  const section = el("section", "scoreboard");
  section.appendChild(el("h2", "", "Participation"));
  const table = el("table", "score-table");
  const head = el("tr");
  for (const label of ["user", "0", "1", "2", "3", "total"]) {
    head.appendChild(el("th", "", label));
  }
  table.appendChild(head);
  for (const row of report.rows) {
    const tr = el("tr", "score-row");
    tr.dataset.user = row.user;
    for (const value of [row.user, row.c0, row.c1, row.c2, row.c3, row.total]) {
      tr.appendChild(el("td", "", String(value)));
    }
    table.appendChild(tr);
  }
  section.appendChild(table);
  return section;
}

export function closuresChart(report: ClosuresReport): HTMLElement {
  const section = el("section", "closures");
  section.appendChild(el("h2", "", "Correction closures by day"));
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  const barWidth = 18;
  const height = 120;
  svg.setAttribute("width", String(report.days.length * (barWidth + 4) + 8));
  svg.setAttribute("height", String(height + 20));
  svg.setAttribute("class", "closures-chart");
  const max = Math.max(1, ...report.days.map((d) => d.count));
  report.days.forEach((day, i) => {
    const bar = document.createElementNS("http://www.w3.org/2000/svg", "rect");
    const h = Math.round((day.count / max) * height);
    bar.setAttribute("x", String(4 + i * (barWidth + 4)));
    bar.setAttribute("y", String(height - h + 4));
    bar.setAttribute("width", String(barWidth));
    bar.setAttribute("height", String(h));
    bar.setAttribute("class", "closure-bar");
    bar.setAttribute("data-day", day.day);
    bar.setAttribute("data-count", String(day.count));
    svg.appendChild(bar);
  });
  section.appendChild(svg);
  section.appendChild(
    el(
      "div",
      "bunching",
      report.bunching_index === null
        ? "no closures in range"
        : `bunching index: ${report.bunching_index.toFixed(3)}`,
    ),
  );
  return section;
}

export function loginPanel(ctx: ViewCtx): HTMLElement {
  const section = el("section", "login");
  if (ctx.api.userId) {
    section.appendChild(el("div", "whoami", `signed in as ${ctx.api.userId}`));
    section.appendChild(
      button("Log out", "logout-button", () => {
        ctx.api.logout();
        void ctx.refresh();
      }),
    );
    return section;
  }
  const user = el("input");
  user.placeholder = "user id";
  user.className = "login-user";
  const secret = el("input");
  secret.type = "password";
  secret.className = "login-secret";
  section.append(
    user,
    secret,
    button("Log in", "login-button", () => {
      void act(ctx, () => ctx.api.login(user.value, secret.value));
    }),
  );
  return section;
}
