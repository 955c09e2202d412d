// Presentation helpers. Display rounding (2 decimals) is the only
// client-side arithmetic the app performs on fetched numbers.

export function fmtScore(value: number | null | undefined): string {
  if (value === null || value === undefined) return "—";
  return value.toFixed(2);
}

export type ScoreBand = "low" | "mid" | "high";

export function scoreBand(
  value: number | null | undefined,
  lowThreshold = 0.33,
  highThreshold = 0.66,
): ScoreBand | "none" {
  if (value === null || value === undefined) return "none";
  if (value < lowThreshold) return "low";
  if (value < highThreshold) return "mid";
  return "high";
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function scoreChip(value: number | null | undefined): string {
  return `<span class="score score-${scoreBand(value)}">${fmtScore(value)}</span>`;
}
