/** View model assembly.
 *
 * Renders only what the service sent: totals, eliminated flags and series
 * values are taken verbatim from snapshots and reports, never recomputed
 * on the client. */

import type {
  CastDocument,
  ChannelMessage,
  Phase,
  Report,
  Scorecard,
  ScriptDocument,
  Snapshot,
} from "./types.js";

export interface ProbabilitySeries {
  name: string;
  categories: string[];
  /** one row per completed day, each row one value per category */
  rows: number[][];
}

export interface ViewModel {
  runId: string;
  phase: Phase;
  error: string | null;
  steeringEnabled: boolean;
  day: number;
  daysTotal: number | null;
  scorecards: Scorecard[];
  selectedScriptId: string | null;
  candidates: ScriptDocument[];
  tension: number[];
  probability: ProbabilitySeries | null;
  transcript: ChannelMessage[];
  cast: CastDocument | null;
  outcome: { label: string; category: string } | null;
  pendingEvents: number;
  pendingOverrides: number;
}

export function steeringEnabled(phase: Phase): boolean {
  return phase === "simulating";
}

function selectedScript(snapshot: Snapshot): ScriptDocument | null {
  const candidates = snapshot.candidates ?? [];
  const index = snapshot.selected?.candidate_index;
  if (index === undefined) return candidates[0] ?? null;
  return candidates.find((c) => c.provenance?.candidate_index === index) ?? null;
}

export function probabilitySeries(snapshot: Snapshot): ProbabilitySeries | null {
  const series = snapshot.response_series ?? {};
  const script = selectedScript(snapshot);
  for (const [name, rows] of Object.entries(series)) {
    if (!rows.length || !Array.isArray(rows[0])) continue;
    const categories =
      script?.responses.find((r) => r.name === name)?.categories ??
      (rows[0] as number[]).map((_, i) => `category ${i + 1}`);
    return { name, categories, rows: rows as number[][] };
  }
  return null;
}

export function buildViewModel(snapshot: Snapshot, report: Report | null): ViewModel {
  return {
    runId: snapshot.run_id,
    phase: snapshot.phase,
    error: snapshot.error,
    steeringEnabled: steeringEnabled(snapshot.phase),
    day: snapshot.day ?? 0,
    daysTotal: snapshot.days_total ?? null,
    scorecards: report?.scorecards ?? [],
    selectedScriptId: report?.selected_script_id ?? snapshot.selected?.script_id ?? null,
    candidates: snapshot.candidates ?? [],
    tension: snapshot.tension_series ?? [],
    probability: probabilitySeries(snapshot),
    transcript: snapshot.channel ?? [],
    cast: snapshot.cast ?? null,
    outcome: snapshot.outcome ?? null,
    pendingEvents: (snapshot.pending_events ?? []).length,
    pendingOverrides: (snapshot.pending_overrides ?? []).length,
  };
}
