// Hash router and view state. Snapshots are cached with a staleness window;
// any mutation invalidates the cache, so what renders is always what the
// server last confirmed.

import { ApiError, NoosApi } from "./api.js";
import {
  ViewCtx,
  closuresChart,
  describeError,
  entriesTable,
  entryPage,
  inboxPanel,
  loginPanel,
  orphansPanel,
  requestsPanel,
  scoreboard,
} from "./render.js";

interface CacheSlot {
  data: unknown;
  fetchedAt: number;
}

export class App {
  private cache = new Map<string, CacheSlot>();
  route = "#/entries";

  constructor(
    private root: HTMLElement,
    public api: NoosApi,
    private maxAgeMs = 4000,
  ) {}

  mount(): void {
    window.addEventListener("hashchange", () => {
      void this.render(window.location.hash || "#/entries");
    });
    void this.render(window.location.hash || "#/entries");
  }

  private async cached<T>(key: string, loader: () => Promise<T>): Promise<T> {
    const slot = this.cache.get(key);
    if (slot && Date.now() - slot.fetchedAt < this.maxAgeMs) {
      return slot.data as T;
    }
    const data = await loader();
    this.cache.set(key, { data, fetchedAt: Date.now() });
    return data;
  }

  invalidate(): void {
    this.cache.clear();
  }

  flash(text: string): void {
    let region = this.root.querySelector<HTMLElement>("#flash");
    if (!region) {
      region = document.createElement("div");
      region.id = "flash";
      this.root.prepend(region);
    }
    region.textContent = text;
  }

  private ctx(): ViewCtx {
    return {
      api: this.api,
      navigate: (route: string) => {
        window.location.hash = route;
        void this.render(route);
      },
      refresh: async () => {
        this.invalidate();
        await this.render(this.route);
      },
      flash: (text: string) => this.flash(text),
    };
  }

  async render(route: string = this.route): Promise<void> {
    this.route = route;
    const ctx = this.ctx();
    const parts = route.replace(/^#\//, "").split("/");
    let view: HTMLElement;
    try {
      switch (parts[0] || "entries") {
        case "entry": {
          const payload = await this.cached(route, () => this.api.getEntry(parts[1]));
          view = entryPage(payload, ctx);
          break;
        }
        case "mine": {
          const { entries } = await this.cached("#/entries", () => this.api.listEntries());
          const mine = entries.filter((e) => e.owner !== null && e.owner === this.api.userId);
          view = entriesTable(mine, "My entries");
          break;
        }
        case "orphans": {
          const { entries } = await this.cached(route, () => this.api.listOrphans());
          view = orphansPanel(entries, ctx);
          break;
        }
        case "requests": {
          const filter = (parts[1] as "active" | "filled" | "all") || "active";
          const { requests } = await this.cached(route, () => this.api.listRequests(filter));
          view = requestsPanel(requests, filter, ctx);
          break;
        }
        case "inbox": {
          const filter = (parts[1] as "all" | "unread") || "unread";
          const { notices } = await this.cached(route, () => this.api.inbox(filter));
          view = inboxPanel(notices, filter, ctx);
          break;
        }
        case "reports": {
          const report = await this.cached(route, () => this.api.participation());
          view = scoreboard(report);
          break;
        }
        case "closures": {
          const report = await this.cached(route, () => this.api.closures());
          view = closuresChart(report);
          break;
        }
        case "login": {
          view = loginPanel(ctx);
          break;
        }
        default: {
          const { entries } = await this.cached("#/entries", () => this.api.listEntries());
          view = entriesTable(entries, "All entries");
        }
      }
    } catch (error) {
      if (error instanceof ApiError && error.code === "authentication-required") {
        // expired or missing session: back to the login panel
        this.api.logout();
        this.flash(describeError(error));
        view = loginPanel(ctx);
      } else {
        view = document.createElement("section");
        view.className = "error-page";
        view.textContent = describeError(error);
      }
    }

    const main = this.ensureMain();
    main.replaceChildren(view);
  }

  private ensureMain(): HTMLElement {
    let main = this.root.querySelector<HTMLElement>("#main");
    if (!main) {
      const nav = document.createElement("nav");
      for (const [label, hash] of [
        ["entries", "#/entries"],
        ["my entries", "#/mine"],
        ["orphans", "#/orphans"],
        ["requests", "#/requests/active"],
        ["inbox", "#/inbox/unread"],
        ["scoreboard", "#/reports"],
        ["closures", "#/closures"],
        ["login", "#/login"],
      ]) {
        const link = document.createElement("a");
        link.setAttribute("href", hash);
        link.textContent = label;
        link.className = "nav-link";
        nav.appendChild(link);
      }
      this.root.appendChild(nav);
      main = document.createElement("div");
      main.id = "main";
      this.root.appendChild(main);
    }
    return main;
  }
}
