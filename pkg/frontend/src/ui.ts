/**
 * DOM layer: renders the review loop into a container element and wires the
 * keyboard shortcuts (1..k accept, s skip, / focus search) plus the stats
 * panel and mode/k toggles. All state lives in ReviewSession.
 */

import { ApiClient, Mode, ReviewItem, Stats, Suggestion } from "./api.js";
import { ReviewSession } from "./session.js";

export interface UiConfig {
  apiBase: string;
  token?: string;
  reviewer: string;
  statsPollMs?: number;
  fetchFn?: typeof fetch;
}

export interface ReviewUi {
  session: ReviewSession;
  root: HTMLElement;
  destroy(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className: string,
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.className = className;
  if (text) node.textContent = text;
  return node;
}

function pct(value: number | null): string {
  return value === null ? "—" : `${(value * 100).toFixed(0)}%`;
}

export function mountReviewUi(container: HTMLElement, config: UiConfig): ReviewUi {
  const client = new ApiClient({
    apiBase: config.apiBase,
    token: config.token,
    fetchFn: config.fetchFn,
  });

  const root = el("div", "mm-root");
  const banner = el("div", "mm-banner");
  banner.hidden = true;
  const itemPanel = el("section", "mm-item");
  const clinicText = el("h2", "mm-clinic-text");
  const suggestionList = el("ol", "mm-suggestions");
  const skipButton = el("button", "mm-skip", "skip (s)");
  const searchBox = el("input", "mm-search");
  searchBox.placeholder = "manual override — type to search (/)";
  const searchList = el("ul", "mm-search-results");
  const statsPanel = el("aside", "mm-stats");
  const controls = el("div", "mm-controls");

  const modeSelect = el("select", "mm-mode");
  for (const mode of ["hybrid", "sparse", "dense"] as Mode[]) {
    const opt = document.createElement("option");
    opt.value = mode;
    opt.textContent = mode;
    modeSelect.appendChild(opt);
  }
  const kSelect = el("select", "mm-k");
  for (const k of [5, 3]) {
    const opt = document.createElement("option");
    opt.value = String(k);
    opt.textContent = `top-${k}`;
    kSelect.appendChild(opt);
  }
  controls.append(modeSelect, kSelect);

  itemPanel.append(clinicText, suggestionList, skipButton, searchBox, searchList);
  root.append(banner, controls, itemPanel, statsPanel);
  container.appendChild(root);

  const session = new ReviewSession(
    client,
    {
      onItem: renderItem,
      onStats: renderStats,
      onBanner: (level, message) => {
        banner.hidden = false;
        banner.dataset.level = level;
        banner.textContent = message;
      },
      onBusyChange: (busy) => {
        // Optimistic disable: no further decisions until the response lands.
        root.querySelectorAll("button").forEach((b) => (b.disabled = busy));
        root.classList.toggle("mm-busy", busy);
      },
      onSearchResults: renderSearchResults,
    },
    { reviewer: config.reviewer },
  );

  function renderItem(item: ReviewItem | null, suggestions: Suggestion[]): void {
    suggestionList.replaceChildren();
    searchList.replaceChildren();
    searchBox.value = "";
    if (item === null) {
      clinicText.textContent = "queue empty 🎉";
      return;
    }
    clinicText.textContent = item.clinic_text;
    suggestions.forEach((s, i) => {
      const li = el("li", "mm-suggestion");
      li.dataset.masterlistId = s.masterlist_id;
      const button = el("button", "mm-accept", `${i + 1}. ${s.text}`);
      button.dataset.rank = String(i + 1);
      button.addEventListener("click", () => void session.acceptRank(i + 1));
      const score = el("span", "mm-score", s.score.toFixed(4));
      li.append(button, score);
      suggestionList.appendChild(li);
    });
  }

  function renderSearchResults(results: Suggestion[]): void {
    searchList.replaceChildren();
    for (const s of results) {
      const li = el("li", "mm-search-result");
      const button = el("button", "mm-manual", s.text);
      button.dataset.masterlistId = s.masterlist_id;
      button.addEventListener("click", () => void session.acceptManual(s.masterlist_id));
      li.appendChild(button);
      searchList.appendChild(li);
    }
  }

  function renderStats(stats: Stats): void {
    statsPanel.replaceChildren(
      el("div", "mm-stat mm-stat-reviewed", `reviewed: ${stats.reviewed}`),
      el("div", "mm-stat mm-stat-acc1", `acc@1: ${pct(stats.acc_at_1)}`),
      el("div", "mm-stat mm-stat-acc2", `acc@2: ${pct(stats.acc_at_2)}`),
      el("div", "mm-stat mm-stat-manual", `manual: ${pct(stats.manual)}`),
      el("div", "mm-stat mm-stat-pending", `pending: ${stats.pending}`),
    );
  }

  function onKeydown(event: KeyboardEvent): void {
    if (event.target === searchBox) {
      if (event.key === "Escape") searchBox.blur();
      return; // typing in the search box must not trigger shortcuts
    }
    if (event.key === "/") {
      event.preventDefault();
      searchBox.focus();
      return;
    }
    void session.handleKey(event.key);
  }

  skipButton.addEventListener("click", () => void session.skip());
  searchBox.addEventListener("input", () => void session.search(searchBox.value));
  modeSelect.addEventListener("change", () => {
    session.setMode(modeSelect.value as Mode);
    void session.loadNext();
  });
  kSelect.addEventListener("change", () => {
    session.setK(Number(kSelect.value) as 3 | 5);
    void session.loadNext();
  });
  document.addEventListener("keydown", onKeydown);

  const pollMs = config.statsPollMs ?? 5000;
  const statsTimer = setInterval(() => void session.refreshStats(), pollMs);
  const flushTimer = setInterval(() => void session.flushOutbox(), pollMs);

  return {
    session,
    root,
    destroy() {
      clearInterval(statsTimer);
      clearInterval(flushTimer);
      document.removeEventListener("keydown", onKeydown);
      root.remove();
    },
  };
}
