/**
 * Wizard state store.
 *
 * A small observable container around the API client. Every action sends
 * the mutation to the server and replaces local state with the server's
 * response, so the view always reconciles to server truth; errors from the
 * service envelope are kept in state for inline rendering instead of being
 * thrown at the view layer.
 */

import {
  ApiClient,
  ApiError,
  type JobPayload,
  type MarkEdit,
  type OutputPayload,
  type TemplateSuggestion,
} from "./api.js";
import { isEnabled, stepForStatus, type StepId } from "./steps.js";

export interface InlineError {
  code: string;
  message: string;
}

export interface WizardState {
  job: JobPayload | null;
  suggestions: TemplateSuggestion[];
  step: StepId;
  busy: boolean;
  error: InlineError | null;
  notice: string | null;
}

export type Listener = (state: WizardState) => void;

const INITIAL: WizardState = {
  job: null,
  suggestions: [],
  step: "upload",
  busy: false,
  error: null,
  notice: null,
};

export class WizardStore {
  private state: WizardState = { ...INITIAL };
  private listeners = new Set<Listener>();

  constructor(private readonly api: ApiClient) {}

  getState(): WizardState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private setState(partial: Partial<WizardState>): void {
    this.state = { ...this.state, ...partial };
    for (const listener of this.listeners) listener(this.state);
  }

  /** Run one server call, tracking busy state and inline errors. */
  private async run<T>(action: () => Promise<T>): Promise<T | null> {
    this.setState({ busy: true, error: null, notice: null });
    try {
      return await action();
    } catch (error) {
      if (error instanceof ApiError) {
        this.setState({ error: { code: error.code, message: error.message } });
        return null;
      }
      this.setState({
        error: { code: "UNREACHABLE", message: String(error) },
      });
      return null;
    } finally {
      this.setState({ busy: false });
    }
  }

  private reconcile(job: JobPayload): void {
    this.setState({ job, step: stepForStatus(job.status) });
  }

  /** Rebuild the whole view for an existing job, e.g. after a page reload. */
  async load(jobId: string): Promise<void> {
    await this.run(async () => {
      const job = await this.api.getJob(jobId);
      this.reconcile(job);
      if (job.status === "Created") await this.loadSuggestions();
    });
  }

  async upload(text: string): Promise<JobPayload | null> {
    return this.run(async () => {
      const job = await this.api.createJob(text);
      this.reconcile(job);
      await this.loadSuggestions();
      return job;
    });
  }

  async loadSuggestions(): Promise<void> {
    const job = this.state.job;
    if (!job) return;
    const { suggestions } = await this.api.suggestTemplates(job.id);
    this.setState({ suggestions });
  }

  async selectTemplate(templateId: string): Promise<void> {
    const job = this.requireJob();
    await this.run(async () => {
      this.reconcile(await this.api.selectTemplate(job.id, templateId));
    });
  }

  async autoMark(threshold?: number): Promise<void> {
    const job = this.requireJob();
    await this.run(async () => {
      this.reconcile(await this.api.autoMark(job.id, threshold));
    });
  }

  async applyEdits(edits: MarkEdit[]): Promise<void> {
    if (edits.length === 0) return;
    const job = this.requireJob();
    await this.run(async () => {
      this.reconcile(await this.api.editMarks(job.id, edits));
    });
  }

  async extract(): Promise<void> {
    const job = this.requireJob();
    await this.run(async () => {
      this.reconcile(await this.api.extract(job.id));
    });
  }

  async setValue(field: string, value: unknown): Promise<void> {
    const job = this.requireJob();
    await this.run(async () => {
      this.reconcile(await this.api.setValue(job.id, field, value));
    });
  }

  async emit(force = false): Promise<OutputPayload | null> {
    const job = this.requireJob();
    return this.run(async () => {
      const output = await this.api.emitOutput(job.id, force);
      // The job carries the output and the Emitted status now; re-fetch so
      // local state matches what a reload would see.
      this.reconcile(await this.api.getJob(job.id));
      return output;
    });
  }

  async contribute(name: string): Promise<void> {
    const job = this.requireJob();
    await this.run(async () => {
      const contribution = await this.api.contribute(job.id, name);
      this.setState({
        notice: `contributed as template "${contribution.name}" (${contribution.template_id})`,
      });
    });
  }

  /** Navigate between steps the current status has unlocked. */
  goTo(step: StepId): void {
    const status = this.state.job?.status ?? null;
    if (!isEnabled(step, status)) return;
    this.setState({ step, error: null, notice: null });
  }

  reset(): void {
    this.state = { ...INITIAL };
    this.setState({});
  }

  private requireJob(): JobPayload {
    const job = this.state.job;
    if (!job) throw new Error("no active job");
    return job;
  }
}
