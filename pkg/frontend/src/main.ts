import { NoosApi } from "./api.js";
import { App } from "./app.js";

function apiBase(): string {
  const meta = document.querySelector<HTMLMetaElement>('meta[name="noos-api-base"]');
  return meta?.content ?? "";
}

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
new App(root, new NoosApi(apiBase())).mount();
