/** Browser bootstrap: wires the API client, the event stream and the DOM.
 * The service base URL comes from ?api=, defaulting to same-origin. */

import { ApiClient } from "./api.js";
import { renderRequirementForm, renderRunView } from "./render.js";
import { eventSourceFactory, subscribe } from "./stream.js";
import type { Report, Snapshot } from "./types.js";
import { buildViewModel } from "./viewmodel.js";

const params = new URLSearchParams(window.location.search);
const api = new ApiClient(params.get("api") ?? "");
const root = document.getElementById("app")!;

let currentRun: string | null = params.get("run");
let latestReport: Report | null = null;

async function refresh(): Promise<void> {
  if (!currentRun) return;
  const snapshot: Snapshot = await api.getSnapshot(currentRun);
  if (["finalizing", "casting", "simulating", "sealed"].includes(snapshot.phase)) {
    try {
      latestReport = await api.getReport(currentRun);
    } catch {
      // report not ready yet; keep the previous one
    }
  }
  render(snapshot);
}

function render(snapshot: Snapshot): void {
  const vm = buildViewModel(snapshot, latestReport);
  root.innerHTML = renderRunView(vm);
  wireSteering(vm.runId);
}

function wireSteering(runId: string): void {
  const eventForm = document.getElementById("event-form") as HTMLFormElement | null;
  eventForm?.addEventListener("submit", async (submit) => {
    submit.preventDefault();
    const data = new FormData(eventForm);
    await api.postEvent(
      runId,
      Number(data.get("day_index")),
      String(data.get("description")),
      crypto.randomUUID(),
    );
    await refresh();
  });
  const overrideForm = document.getElementById("override-form") as HTMLFormElement | null;
  overrideForm?.addEventListener("submit", async (submit) => {
    submit.preventDefault();
    const data = new FormData(overrideForm);
    await api.postOverride(
      runId,
      Number(data.get("day_index")),
      String(data.get("agent_id")),
      String(data.get("replacement")),
      crypto.randomUUID(),
    );
    await refresh();
  });
}

function follow(runId: string): void {
  currentRun = runId;
  void refresh();
  subscribe({
    makeUrl: (fromIndex) => api.eventsUrl(runId, fromIndex),
    source: eventSourceFactory(EventSource),
    onEvent: () => void refresh(),
    onClose: () => void refresh(),
    reconnectDelayMs: 1000,
  });
}

function showRequirementForm(): void {
  root.innerHTML = renderRequirementForm();
  const form = document.getElementById("requirement-form") as HTMLFormElement;
  form.addEventListener("submit", async (submit) => {
    submit.preventDefault();
    const data = new FormData(form);
    const config: Record<string, unknown> = {
      days: Number(data.get("days") || 13),
      start_date: String(data.get("start_date") || "1962-10-16"),
    };
    const fixture = String(data.get("fixture") || "").trim();
    if (fixture) config.fixture = fixture;
    const { run_id } = await api.createRun(
      {
        research_goal: String(data.get("research_goal")),
        core_variables: String(data.get("core_variables"))
          .split(",")
          .map((s) => s.trim())
          .filter(Boolean),
        target_object: String(data.get("target_object")),
        narrative: String(data.get("narrative") || "") || null,
      },
      config,
    );
    const url = new URL(window.location.href);
    url.searchParams.set("run", run_id);
    window.history.pushState({}, "", url);
    follow(run_id);
  });
}

if (currentRun) follow(currentRun);
else showRequirementForm();
