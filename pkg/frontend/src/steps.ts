/**
 * Wizard step model.
 *
 * The wizard mirrors the server's job lifecycle; a step is reachable only
 * when the job has advanced far enough, so a page reload lands on the same
 * step the job's status implies. The server remains the source of truth --
 * this module only decides what to show.
 */

import type { JobStatus } from "./api.js";

export type StepId = "upload" | "template" | "marks" | "data" | "review";

export const STEP_ORDER: StepId[] = ["upload", "template", "marks", "data", "review"];

export const STEP_TITLES: Record<StepId, string> = {
  upload: "Upload contract",
  template: "Pick a template",
  marks: "Edit marks",
  data: "Fill the data model",
  review: "Review & download",
};

const STATUS_RANK: Record<JobStatus, number> = {
  Created: 0,
  TemplateSelected: 1,
  Marked: 2,
  Extracted: 3,
  Emitted: 4,
};

/** The step a job should open on: the furthest one its status unlocks. */
export function stepForStatus(status: JobStatus | null): StepId {
  if (status === null) return "upload";
  switch (status) {
    case "Created":
      return "template";
    case "TemplateSelected":
      return "marks";
    case "Marked":
    case "Extracted":
      return "data";
    case "Emitted":
      return "review";
  }
}

/** Which steps the user may navigate to for a job in the given status. */
export function enabledSteps(status: JobStatus | null): StepId[] {
  const steps: StepId[] = ["upload"];
  if (status === null) return steps;
  steps.push("template");
  const rank = STATUS_RANK[status];
  if (rank >= STATUS_RANK.TemplateSelected) steps.push("marks");
  if (rank >= STATUS_RANK.Marked) steps.push("data");
  if (rank >= STATUS_RANK.Emitted) steps.push("review");
  return steps;
}

export function isEnabled(step: StepId, status: JobStatus | null): boolean {
  return enabledSteps(status).includes(step);
}
