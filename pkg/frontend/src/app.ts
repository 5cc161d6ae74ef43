// Application shell: session picker/creator, the polling loop, answer
// staging, and conflict handling (a 409 simply refreshes from the
// authoritative state and drops the staged batch).

import { ApiClient, ConflictError } from "./api.js";
import { buildBatch, emptyStaging, renderQueryPanel, Staging } from "./cards.js";
import { renderDashboard } from "./dashboard.js";
import { el } from "./format.js";
import type { SessionState } from "./types.js";

interface AppState {
  client: ApiClient;
  sessionId: string | null;
  staging: Staging;
  pollHandle: number | null;
  pollMs: number;
  lastState: SessionState | null;
}

function statusLine(text: string, kind: "info" | "error" = "info"): void {
  const node = document.getElementById("status");
  if (node) {
    node.textContent = text;
    node.className = `status ${kind}`;
  }
}

async function refresh(app: AppState): Promise<void> {
  if (!app.sessionId) return;
  const state = await app.client.getState(app.sessionId);
  app.lastState = state;
  const phase = document.getElementById("phase");
  if (phase) {
    phase.textContent = `${state.session_id} — ${state.phase}`;
    phase.className = `phase phase-${state.phase}`;
  }
  const queries = document.getElementById("queries");
  if (queries) {
    renderQueryPanel(queries as HTMLElement, state, app.staging, () => submit(app));
  }
  const dash = document.getElementById("dashboard");
  if (dash) {
    renderDashboard(
      dash as HTMLElement,
      state,
      app.client.traceUrl(state.session_id),
    );
  }
}

async function submit(app: AppState): Promise<void> {
  if (!app.sessionId) return;
  const batch = buildBatch(app.staging);
  if (batch.observations.length + batch.comparisons.length === 0) {
    statusLine("nothing staged yet", "error");
    return;
  }
  try {
    const result = await app.client.submitAnswers(app.sessionId, batch);
    app.staging = emptyStaging();
    statusLine(`accepted ${result.accepted} answers; phase ${result.phase}`);
  } catch (err) {
    if (err instanceof ConflictError) {
      // someone (or a retry) already answered: drop the stale staging and
      // re-render from the authoritative state
      app.staging = emptyStaging();
      statusLine(`conflict: ${err.message}; refreshed`, "error");
    } else {
      statusLine(String(err), "error");
      return;
    }
  }
  await refresh(app);
}

function schedulePolling(app: AppState): void {
  if (app.pollHandle !== null) window.clearInterval(app.pollHandle);
  app.pollHandle = window.setInterval(() => {
    refresh(app).catch((err) => statusLine(String(err), "error"));
  }, app.pollMs);
}

async function selectSession(app: AppState, sessionId: string): Promise<void> {
  app.sessionId = sessionId;
  app.staging = emptyStaging();
  await refresh(app);
  schedulePolling(app);
}

async function renderSessionList(app: AppState): Promise<void> {
  const box = document.getElementById("sessions");
  if (!box) return;
  const { sessions } = await app.client.listSessions();
  box.replaceChildren();
  if (sessions.length === 0) {
    box.appendChild(el("p", "empty-state", "no sessions yet"));
  }
  for (const s of sessions) {
    const btn = el("button", "session-link", `${s.session_id} (${s.phase})`);
    btn.type = "button";
    btn.addEventListener("click", () => {
      selectSession(app, s.session_id).catch((err) => statusLine(String(err), "error"));
    });
    box.appendChild(btn);
  }
}

function wireCreateForm(app: AppState): void {
  const form = document.getElementById("create-form") as HTMLFormElement | null;
  if (!form) return;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const dim = parseInt(String(data.get("dim") ?? "1"), 10);
    const boundsText = String(data.get("bounds") ?? "0..1");
    const bounds = boundsText.split(";").map((part) => {
      const [lo, hi] = part.split("..").map((v) => parseFloat(v.trim()));
      return [lo, hi];
    });
    const names = String(data.get("properties") ?? "")
      .split(",")
      .map((s) => s.trim())
      .filter(Boolean);
    const payload: Record<string, unknown> = {
      dim,
      bounds: bounds.length === dim ? bounds : Array(dim).fill(bounds[0]),
      n_properties: names.length || parseInt(String(data.get("n_properties") ?? "2"), 10),
      seed: parseInt(String(data.get("seed") ?? "0"), 10),
    };
    if (names.length > 0) payload.property_names = names;
    const budget = String(data.get("budget") ?? "").trim();
    if (budget) payload.budget = parseInt(budget, 10);
    app.client
      .createSession(payload)
      .then(({ session_id }) => {
        statusLine(`created session ${session_id}`);
        return renderSessionList(app).then(() => selectSession(app, session_id));
      })
      .catch((err) => statusLine(String(err), "error"));
  });
}

function wirePollInterval(app: AppState): void {
  const input = document.getElementById("poll-ms") as HTMLInputElement | null;
  if (!input) return;
  input.value = String(app.pollMs);
  input.addEventListener("change", () => {
    const ms = parseInt(input.value, 10);
    if (Number.isFinite(ms) && ms >= 250) {
      app.pollMs = ms;
      schedulePolling(app);
    }
  });
}

export async function boot(): Promise<void> {
  try {
    const client = await ApiClient.connect();
    const app: AppState = {
      client,
      sessionId: null,
      staging: emptyStaging(),
      pollHandle: null,
      pollMs: 1500,
      lastState: null,
    };
    wireCreateForm(app);
    wirePollInterval(app);
    await renderSessionList(app);
    statusLine("connected");
  } catch (err) {
    statusLine(String(err), "error");
  }
}

if (typeof window !== "undefined" && document.getElementById("app-root")) {
  boot();
}
