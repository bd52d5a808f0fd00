import { ApiClient } from "./api.js";
import { App } from "./app.js";

declare global {
  interface Window {
    __API_BASE__?: string;
  }
}

const root = document.getElementById("app");
if (root) {
  // Served by the API itself by default; an injected base URL overrides.
  const api = new ApiClient(window.__API_BASE__ ?? "");
  const app = new App(root, api, window.sessionStorage);
  void app.start();
}
