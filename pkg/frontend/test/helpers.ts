import { App } from "../src/app.js";
import { NoosApi } from "../src/api.js";
import { BASE_URL } from "./server.js";

export function freshApp(): { app: App; api: NoosApi; root: HTMLElement } {
  document.body.innerHTML = '<div id="app"></div>';
  const root = document.getElementById("app") as HTMLElement;
  const api = new NoosApi(BASE_URL);
  const app = new App(root, api);
  return { app, api, root };
}

export async function waitFor(
  predicate: () => boolean,
  what = "condition",
  timeoutMs = 10_000,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!predicate()) {
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((r) => setTimeout(r, 50));
  }
}

export function click(element: Element | null): void {
  if (!element) throw new Error("nothing to click");
  (element as HTMLElement).click();
}

export function setValue(input: Element | null, value: string): void {
  if (!input) throw new Error("missing input");
  (input as HTMLInputElement).value = value;
}

export async function loginViaUi(app: App, root: HTMLElement, user: string, secret: string) {
  await app.render("#/login");
  if (root.querySelector(".logout-button")) {
    click(root.querySelector(".logout-button"));
    await waitFor(() => root.querySelector(".login-button") !== null, "login form");
  }
  setValue(root.querySelector(".login-user"), user);
  setValue(root.querySelector(".login-secret"), secret);
  click(root.querySelector(".login-button"));
  await waitFor(() => root.querySelector(".whoami") !== null, `login as ${user}`);
}
