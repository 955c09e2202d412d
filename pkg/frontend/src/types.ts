// Payload shapes of the read-only results API. The client renders these
// as-is: every number on screen comes from a payload field.

export interface TopologyNode {
  node_id: string;
  step_count: number;
}

export interface TopologyEdge {
  from: string;
  to: string;
  transition_count: number;
}

export interface Topology {
  nodes: TopologyNode[];
  edges: TopologyEdge[];
  entry_counts: Record<string, number>;
  exit_counts: Record<string, number>;
}

export interface SourceRef {
  trace_id: string;
  step_index: number | null;
}

export interface Insight {
  insight_id: string;
  title: string;
  description: string;
  frequency: number;
  instance_refs: SourceRef[];
  scope: string;
}

export interface InsightSet {
  scope: string;
  insights: Insight[];
  coverage: number;
  note: string | null;
}

export interface GlobalScores {
  mean_trace_score: number | null;
  mean_step_score: number | null;
  mean_rubric_fraction: number | null;
}

export interface ReliabilityReport {
  auc: Record<string, number>;
  n_traces: number;
  n_positive: number;
  notes: string[];
}

export interface SystemPayload {
  format_version: number;
  topology: Topology | null;
  global_scores: GlobalScores;
  insights: InsightSet;
  reliability: ReliabilityReport | null;
}

export interface NodeStats {
  node_id: string;
  step_count: number;
  scored_steps: number;
  mean_score: number | null;
  min_score: number | null;
  max_score: number | null;
  histogram: number[];
  issue_counts: Record<string, number>;
}

export interface StepRow {
  trace_id: string;
  step_index: number;
  node_id: string;
  score: number | null;
  justification: string | null;
  dimension_scores: Record<string, number>;
  input_preview: string;
  output_preview: string;
  insight_ids: string[];
}

export interface NodeDetailPayload {
  format_version: number;
  node_id: string;
  stats: NodeStats | null;
  insights: InsightSet;
  steps: StepRow[];
  total: number;
  limit: number;
  offset: number;
}

export interface NodeListPayload {
  format_version: number;
  nodes: NodeStats[];
}

export interface TraceStepPayload {
  step_index: number;
  node_id: string;
  input_text: string;
  output_text: string;
}

export interface TracePayload {
  trace_id: string;
  task_text: string;
  steps: TraceStepPayload[];
  ground_truth: number | null;
}

export interface StepCritiquePayload {
  trace_id: string;
  step_index: number;
  node_id: string;
  justification: string;
  score: number;
  dimension_scores: Record<string, number>;
}

export interface RubricPayload {
  rubric_id: string;
  criterion_text: string;
}

export interface RubricVerdictPayload {
  rubric_id: string;
  fulfilled: boolean;
  reasoning: string;
}

export interface EvaluationPayload {
  trace_id: string;
  step_critiques: StepCritiquePayload[];
  trace_critique: { justification: string; score: number; dimension_scores: Record<string, number> } | null;
  rubric_set: { rubrics: RubricPayload[] } | null;
  rubric_verdicts: { verdicts: RubricVerdictPayload[]; fraction_fulfilled: number } | null;
}

export interface TraceDetailPayload {
  format_version: number;
  trace: TracePayload;
  evaluation: EvaluationPayload | null;
  system_insight_ids: string[];
}

export interface TraceSummary {
  trace_id: string;
  task_preview: string;
  n_steps: number;
  ground_truth: number | null;
  trace_score: number | null;
  rubric_fraction: number | null;
}

export interface TraceListPayload {
  format_version: number;
  traces: TraceSummary[];
  total: number;
  limit: number;
  offset: number;
}

export interface MetaPayload {
  format_version: number;
  trace_ids: string[];
  node_ids: string[];
  insights: { insight_id: string; title: string; scope: string }[];
}
