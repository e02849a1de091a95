/** Wire types mirroring the dstage service snapshots and reports. */

export type Phase =
  | "composing"
  | "finalizing"
  | "casting"
  | "simulating"
  | "sealed"
  | "failed";

export interface Requirement {
  research_goal: string;
  core_variables: string[];
  target_object: string;
  narrative?: string | null;
  scenario_tag?: string | null;
}

export interface ScriptResponse {
  name: string;
  description?: string;
  kind: "scalar" | "probability_vector" | "categorical";
  categories?: string[];
}

export interface ScriptDocument {
  goal: { statement: string; success_criteria?: string[] };
  factors: { name: string; levels: (string | number)[] }[];
  responses: ScriptResponse[];
  design_points: { id: string; assignments: Record<string, string | number> }[];
  perspective?: string;
  provenance?: { candidate_index: number };
}

export interface ScorecardRow {
  criterion: string;
  weight: number | null;
  score: number;
  rationale: string;
}

export interface Scorecard {
  script_id: string;
  candidate_index: number;
  perspective?: string;
  rows: ScorecardRow[];
  total: number;
  eliminated: boolean;
  elimination_reason: string | null;
}

export interface Report {
  scorecards: Scorecard[];
  selected_script_id: string | null;
  outcome?: { label: string; category: string };
  similarity?: {
    mean_embedding: number | null;
    mean_judge: number | null;
    outcome_match: { expected_category: string | null; actual_category: string | null; matched: boolean };
  };
}

export interface ChannelMessage {
  day_index: number;
  seq: number;
  sender: string;
  text: string;
  kind: "statement" | "action" | "emergent_event" | "override_notice";
}

export interface CastEdge {
  a: string;
  b: string;
  label: string;
}

export interface CastDocument {
  actors: { id: string; name: string; identity: string }[];
  edges: CastEdge[];
}

export interface Snapshot {
  run_id: string;
  phase: Phase;
  error: string | null;
  requirement: Requirement;
  candidates?: ScriptDocument[];
  evaluations?: unknown;
  selected?: { script_id: string; candidate_index: number };
  cast?: CastDocument;
  day?: number;
  days_total?: number | null;
  tension_series?: number[];
  response_series?: Record<string, unknown[]>;
  channel?: ChannelMessage[];
  outcome?: { label: string; category: string };
  pending_events?: unknown[];
  pending_overrides?: unknown[];
}

export interface StreamEvent {
  index: number;
  type: string;
  data: unknown;
}
