/**
 * Browser entry point. Configuration comes from URL query parameters
 * (?api_base=...&token=...&reviewer=...) with localStorage fallback, so the
 * page needs no build-time configuration.
 */

import { mountReviewUi } from "./ui.js";

function configValue(name: string, fallback: string): string {
  const params = new URLSearchParams(window.location.search);
  const fromUrl = params.get(name);
  if (fromUrl !== null) {
    window.localStorage.setItem(`medmatch.${name}`, fromUrl);
    return fromUrl;
  }
  return window.localStorage.getItem(`medmatch.${name}`) ?? fallback;
}

const container = document.getElementById("app");
if (!container) throw new Error("missing #app container");

const ui = mountReviewUi(container, {
  apiBase: configValue("api_base", "http://127.0.0.1:8000"),
  token: configValue("token", "") || undefined,
  reviewer: configValue("reviewer", "reviewer"),
});

void ui.session.start();
