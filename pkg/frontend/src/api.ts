/**
 * Typed client for the review service HTTP API (all routes under /v1).
 * This is the only place the frontend touches the network.
 */

import type {
  AnnotationBody,
  CaseDetail,
  CaseSummary,
  Conflict,
  ReviewBody,
  ReviewTable,
  ServiceError,
} from "./schema.js";
import { validateAnnotation, validateReview } from "./schema.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly field: string | undefined,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Raised before any network traffic when a body fails client-side rules. */
export class ClientValidationError extends Error {
  constructor(readonly field: string) {
    super(`invalid field: ${field}`);
    this.name = "ClientValidationError";
  }
}

export interface ApiOptions {
  baseUrl: string; // e.g. http://localhost:8000/v1
  token?: string;
  fetchFn?: typeof fetch;
}

export class ReviewApi {
  private readonly baseUrl: string;
  private readonly token: string;
  private readonly fetchFn: typeof fetch;

  constructor(options: ApiOptions) {
    this.baseUrl = options.baseUrl.replace(/\/$/, "");
    this.token = options.token ?? "";
    this.fetchFn = options.fetchFn ?? fetch;
  }

  async health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  async listCases(split?: string): Promise<CaseSummary[]> {
    const query = split ? `?split=${encodeURIComponent(split)}` : "";
    const body = await this.request<{ cases: CaseSummary[] }>(
      "GET",
      `/cases${query}`,
    );
    return body.cases;
  }

  async getCase(caseId: string): Promise<CaseDetail> {
    return this.request("GET", `/cases/${encodeURIComponent(caseId)}`);
  }

  frameUrl(caseId: string): string {
    return `${this.baseUrl}/cases/${encodeURIComponent(caseId)}/frame.png`;
  }

  async postAnnotation(body: AnnotationBody): Promise<{ revision: number }> {
    const bad = validateAnnotation(body);
    if (bad) throw new ClientValidationError(bad);
    return this.request("POST", "/annotations", body);
  }

  async postReview(body: ReviewBody): Promise<{ revision: number }> {
    const bad = validateReview(body);
    if (bad) throw new ClientValidationError(bad);
    return this.request("POST", "/reviews", body);
  }

  async conflicts(): Promise<Conflict[]> {
    const body = await this.request<{ conflicts: Conflict[] }>(
      "GET",
      "/annotations/conflicts",
    );
    return body.conflicts;
  }

  async reviewTable(): Promise<ReviewTable> {
    return this.request("GET", "/exports/review-table");
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    if (body !== undefined) headers["Content-Type"] = "application/json";
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = (await response.json()) as T | ServiceError;
    if (!response.ok) {
      const err = payload as ServiceError;
      throw new ApiError(
        response.status,
        err.code ?? "UnknownError",
        err.field,
        err.message ?? response.statusText,
      );
    }
    return payload as T;
  }
}
