/**
 * Typed client for the conversion service HTTP API.
 *
 * Every method resolves to the server's JSON payload or rejects with an
 * ApiError carrying the service's error envelope ({ code, message,
 * details }) plus the HTTP status. The UI performs every mutation through
 * this client; it never computes marks or answers locally.
 */

export type JobStatus =
  | "Created"
  | "TemplateSelected"
  | "Marked"
  | "Extracted"
  | "Emitted";

export interface SpanPayload {
  start: number;
  end: number;
  label: string;
  probability: number;
}

export interface MarkPayload {
  span: SpanPayload;
  variable_name: string;
  concerto_type: string;
  raw: boolean;
  secondary_spans: SpanPayload[];
}

export interface ProvenancePayload {
  template_id: string;
  tagger_versions: Record<string, string>;
  extractor_id: string | null;
  threshold: number | null;
  created_at: string;
  emitted_at: string;
}

export interface OutputPayload {
  cicero_text: string;
  instance_json: string;
  provenance: ProvenancePayload;
}

export interface JobPayload {
  id: string;
  document_id: string;
  text: string;
  template_id: string | null;
  data_class: string | null;
  marks: MarkPayload[];
  instance: Record<string, unknown> | null;
  tagger_versions: Record<string, string>;
  status: JobStatus;
  mark_threshold: number | null;
  extractor_id: string | null;
  confidences: Record<string, number>;
  missing_fields: string[];
  created_at: string;
  emitted_at: string | null;
  output: OutputPayload | null;
}

export interface TemplateSuggestion {
  id: string;
  name: string;
  score: number;
  metadata: Record<string, unknown>;
}

export interface TemplateListing {
  id: string;
  name: string;
  metadata: Record<string, unknown>;
}

export interface ContributionPayload {
  id: string;
  job_id: string;
  template_id: string;
  name: string;
  sample_text: string;
  marks: MarkPayload[];
  instance_json: string;
  queued_at: string;
}

export interface HealthPayload {
  status: string;
  templates: number;
  jobs: number;
}

/** One entry of a PATCH /jobs/{id}/marks batch. */
export type MarkEdit =
  | {
      op: "add";
      variable_name: string;
      start: number;
      end: number;
      label?: string;
      concerto_type?: string;
      raw?: boolean;
    }
  | { op: "remove"; variable_name: string }
  | { op: "rename"; variable_name: string; new_name: string }
  | { op: "retype"; variable_name: string; concerto_type: string; raw?: boolean };

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly details: Record<string, unknown>,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    private readonly baseUrl: string = "",
    fetchImpl?: FetchLike,
  ) {
    // Bind the global fetch so calling it unbound does not lose `this`.
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const payload = await response.json().catch(() => null);
    if (!response.ok) {
      const envelope = (payload ?? {}) as Partial<{
        code: string;
        message: string;
        details: Record<string, unknown>;
      }>;
      throw new ApiError(
        envelope.code ?? "HTTP_ERROR",
        envelope.message ?? `request failed with status ${response.status}`,
        envelope.details ?? {},
        response.status,
      );
    }
    return payload as T;
  }

  health(): Promise<HealthPayload> {
    return this.request("GET", "/health");
  }

  createJob(text: string): Promise<JobPayload> {
    return this.request("POST", "/jobs", { text });
  }

  getJob(jobId: string): Promise<JobPayload> {
    return this.request("GET", `/jobs/${encodeURIComponent(jobId)}`);
  }

  suggestTemplates(jobId: string, n = 5): Promise<{ suggestions: TemplateSuggestion[] }> {
    return this.request("GET", `/jobs/${encodeURIComponent(jobId)}/templates?n=${n}`);
  }

  selectTemplate(jobId: string, templateId: string): Promise<JobPayload> {
    return this.request("PUT", `/jobs/${encodeURIComponent(jobId)}/template`, {
      template_id: templateId,
    });
  }

  autoMark(jobId: string, threshold?: number): Promise<JobPayload> {
    const body = threshold === undefined ? {} : { threshold };
    return this.request("POST", `/jobs/${encodeURIComponent(jobId)}/marks:auto`, body);
  }

  editMarks(jobId: string, edits: MarkEdit[]): Promise<JobPayload> {
    return this.request("PATCH", `/jobs/${encodeURIComponent(jobId)}/marks`, { edits });
  }

  extract(jobId: string, window?: number, stride?: number): Promise<JobPayload> {
    const body: Record<string, number> = {};
    if (window !== undefined) body.window = window;
    if (stride !== undefined) body.stride = stride;
    return this.request("POST", `/jobs/${encodeURIComponent(jobId)}/extract`, body);
  }

  setValue(jobId: string, field: string, value: unknown): Promise<JobPayload> {
    return this.request("PATCH", `/jobs/${encodeURIComponent(jobId)}/values`, {
      field,
      value,
    });
  }

  emitOutput(jobId: string, force = false): Promise<OutputPayload> {
    return this.request("POST", `/jobs/${encodeURIComponent(jobId)}/output`, { force });
  }

  contribute(jobId: string, name: string): Promise<ContributionPayload> {
    return this.request("POST", "/templates", { job_id: jobId, name });
  }

  listTemplates(): Promise<{ templates: TemplateListing[] }> {
    return this.request("GET", "/templates");
  }
}
