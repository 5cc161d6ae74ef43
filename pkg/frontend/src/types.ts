// Payload shapes of the session service. Field names mirror the frozen
// contract; the UI displays these values verbatim and never derives
// algorithmic quantities of its own.

export interface SessionConfigView {
  dim: number;
  bounds: number[][];
  mode: string;
  n_properties: number;
  property_names: string[];
  seed: number;
  t_init: number;
  budget: number;
  true_max: number | null;
}

export interface ObservationQueryView {
  id: string;
  eval_index: number;
  x: number[];
}

export interface ComparisonQueryView {
  id: string;
  property_index: number;
  property_name: string;
  left_index: number;
  right_index: number;
  left_x: number[];
  right_x: number[];
}

export type Phase =
  | "awaiting_observation"
  | "awaiting_preferences"
  | "suggesting"
  | "finished";

export interface TraceRecord {
  type: "init" | "step" | "summary";
  t?: number;
  arm?: "human" | "control";
  x?: number[];
  y?: number;
  incumbent_x?: number[];
  incumbent_y?: number;
  regret?: number | null;
  pred_likelihood_human?: number | null;
  pred_likelihood_control?: number | null;
  [key: string]: unknown;
}

export interface SessionState {
  session_id: string;
  phase: Phase;
  config: SessionConfigView;
  open_queries: {
    observations: ObservationQueryView[];
    comparisons: ComparisonQueryView[];
  };
  answered_count: number;
  trace: TraceRecord[];
}

export interface SessionSummary {
  session_id: string;
  phase: Phase;
}

export type Choice = "left" | "right" | "skip";

export interface AnswerBatch {
  observations: { id: string; value: number; true_value?: number | null }[];
  comparisons: { id: string; choice: Choice }[];
}

export interface Contract {
  name: string;
  version: number;
  base_path: string;
  endpoints: Record<string, { method: string; path: string }>;
  schemas: Record<string, unknown>;
}
