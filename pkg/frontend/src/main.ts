import { ExpandocApp, type AppConfig } from "./app";
import type { PaletteVariant } from "./types";

declare global {
  interface Window {
    __EXPANDOC_CONFIG__?: Partial<AppConfig> & { variant?: PaletteVariant };
    expandocApp?: ExpandocApp;
  }
}

function bootstrap(): void {
  const host = document.getElementById("app");
  if (!host) {
    return;
  }
  const overrides = window.__EXPANDOC_CONFIG__ ?? {};
  const config: AppConfig = {
    baseUrl: overrides.baseUrl ?? "http://127.0.0.1:8000",
    paperId: overrides.paperId ?? "",
    treeId: overrides.treeId ?? "default",
    variant: overrides.variant ?? "base",
    fetchFn: overrides.fetchFn,
  };
  if (!config.paperId) {
    host.textContent = "Set window.__EXPANDOC_CONFIG__.paperId to load a paper.";
    return;
  }
  const app = new ExpandocApp(host, config);
  window.expandocApp = app;
  void app.load();
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", bootstrap);
} else {
  bootstrap();
}
