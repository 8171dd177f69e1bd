/**
 * Typed client for the clone service JSON API.
 *
 * Every response carries the service revision; mutations must echo the
 * revision they were computed against, and a stale one fails with 409.
 */

export interface InstanceLocation {
  file: string;
  span: string;
}

export interface ReportClass {
  id: number;
  kind: "intra-module" | "inter-module";
  occurrences: number;
  sizeLoc: number;
  similarity: number;
  newParams: number;
  totalParams: number;
  firstInstance: InstanceLocation;
}

export interface ThresholdValues {
  min_len: number;
  min_toks: number;
  min_freq: number;
  max_new_params: number;
  min_similarity: number;
}

export interface Report {
  revision: number;
  order: string;
  thresholds: ThresholdValues;
  classes: ReportClass[];
}

export interface CloneInstance extends InstanceLocation {
  substitution: Record<string, string>;
}

export interface CloneDetail {
  revision: number;
  id: number;
  params: string[];
  newParams: string[];
  exports: string[];
  template: string;
  kind: string;
  similarity: number;
  instances: CloneInstance[];
}

export interface SourcePayload {
  revision: number;
  file: string;
  text: string;
}

export interface InstanceOutcome {
  file: string;
  clause: [number, number];
  range: [number, number];
  applied: boolean;
  reason: string;
}

export interface PreviewResponse {
  revision: number;
  diffs: Record<string, string>;
  outcomes: InstanceOutcome[];
}

export interface ApplyResponse {
  revision: number;
  report: Report;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly payload: Record<string, unknown>,
  ) {
    super(String(payload["error"] ?? `request failed with ${status}`));
  }

  get stale(): boolean {
    return this.status === 409;
  }
}

export class Client {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    const payload = (await response.json()) as Record<string, unknown>;
    if (!response.ok) {
      throw new ApiError(response.status, payload);
    }
    return payload as T;
  }

  report(order: "size" | "freq"): Promise<Report> {
    return this.request(`/report?order=${order}`);
  }

  clone(id: number): Promise<CloneDetail> {
    return this.request(`/clone/${id}`);
  }

  source(file: string): Promise<SourcePayload> {
    return this.request(`/source?file=${encodeURIComponent(file)}`);
  }

  private post<T>(path: string, body: Record<string, unknown>): Promise<T> {
    return this.request(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  preview(
    revision: number,
    refactoring: string,
    args: Record<string, unknown>,
  ): Promise<PreviewResponse> {
    return this.post("/preview", { revision, refactoring, args });
  }

  apply(revision: number): Promise<ApplyResponse> {
    return this.post("/apply", { revision });
  }

  undo(revision: number): Promise<ApplyResponse> {
    return this.post("/undo", { revision });
  }
}
