import { describe, expect, it } from "vitest";

import { ApiError, ClientValidationError, ReviewApi } from "../src/api.js";
import { validateAnnotation, validateReview } from "../src/schema.js";
import { loadFixture, makeFetchStub } from "./fixtures.js";

const BASE = "http://localhost:9999/v1";

describe("ReviewApi against recorded fixtures", () => {
  it("returns the health payload verbatim", async () => {
    const fixture = loadFixture("health");
    const { fetchFn, calls } = makeFetchStub({
      "GET /v1/health": { status: fixture.status, body: fixture.body },
    });
    const api = new ReviewApi({ baseUrl: BASE, fetchFn });
    await expect(api.health()).resolves.toEqual(fixture.body);
    expect(calls[0]?.path).toBe("/v1/health");
  });

  it("lists cases exactly as the service sent them", async () => {
    const fixture = loadFixture("cases");
    const { fetchFn } = makeFetchStub({
      "GET /v1/cases": { status: fixture.status, body: fixture.body },
    });
    const api = new ReviewApi({ baseUrl: BASE, token: "tokA", fetchFn });
    const cases = await api.listCases();
    expect(cases).toEqual(fixture.body.cases);
  });

  it("sends the bearer token on every request", async () => {
    const fixture = loadFixture("cases");
    const { fetchFn, calls } = makeFetchStub({
      "GET /v1/cases": { status: 200, body: fixture.body },
    });
    const api = new ReviewApi({ baseUrl: BASE, token: "tokA", fetchFn });
    await api.listCases();
    expect(calls[0]?.headers["Authorization"]).toBe("Bearer tokA");
  });

  it("surfaces the recorded unauthorized error shape", async () => {
    const fixture = loadFixture("unauthorized");
    const { fetchFn } = makeFetchStub({
      "GET /v1/cases": { status: fixture.status, body: fixture.body },
    });
    const api = new ReviewApi({ baseUrl: BASE, fetchFn });
    const err = await api.listCases().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(401);
    expect(err.code).toBe(fixture.body.code);
  });

  it("posts the recorded annotation body and returns the revision", async () => {
    const fixture = loadFixture("annotation_accepted");
    const { fetchFn, calls } = makeFetchStub({
      "POST /v1/annotations": { status: fixture.status, body: fixture.body },
    });
    const api = new ReviewApi({ baseUrl: BASE, token: "tokA", fetchFn });
    const out = await api.postAnnotation(fixture.request);
    expect(out).toEqual(fixture.body);
    expect(calls[0]?.body).toEqual(fixture.request);
    expect(validateAnnotation(fixture.request)).toBeNull();
  });

  it("blocks the recorded invalid annotation before any network call", async () => {
    const fixture = loadFixture("annotation_invalid_label");
    const { fetchFn, calls } = makeFetchStub({});
    const api = new ReviewApi({ baseUrl: BASE, fetchFn });
    const err = await api.postAnnotation(fixture.request).catch((e) => e);
    expect(err).toBeInstanceOf(ClientValidationError);
    // the client-side rule flags the same field the service rejected
    expect(err.field).toBe(fixture.body.field);
    expect(calls).toHaveLength(0);
  });

  it("posts the recorded review body and returns the revision", async () => {
    const fixture = loadFixture("review_accepted");
    const { fetchFn, calls } = makeFetchStub({
      "POST /v1/reviews": { status: fixture.status, body: fixture.body },
    });
    const api = new ReviewApi({ baseUrl: BASE, token: "tokA", fetchFn });
    const out = await api.postReview(fixture.request);
    expect(out).toEqual(fixture.body);
    expect(calls[0]?.body).toEqual(fixture.request);
    expect(validateReview(fixture.request)).toBeNull();
  });

  it("blocks the recorded out-of-range review client-side", async () => {
    const fixture = loadFixture("review_invalid_overall");
    const { fetchFn, calls } = makeFetchStub({});
    const api = new ReviewApi({ baseUrl: BASE, fetchFn });
    const err = await api.postReview(fixture.request).catch((e) => e);
    expect(err).toBeInstanceOf(ClientValidationError);
    expect(err.field).toBe(fixture.body.field); // "overall", same as the service
    expect(calls).toHaveLength(0);
  });

  it("returns the conflicts payload untouched", async () => {
    const fixture = loadFixture("conflicts");
    const { fetchFn } = makeFetchStub({
      "GET /v1/annotations/conflicts": { status: 200, body: fixture.body },
    });
    const api = new ReviewApi({ baseUrl: BASE, fetchFn });
    await expect(api.conflicts()).resolves.toEqual(fixture.body.conflicts);
  });

  it("fetches the review table with the recorded column order", async () => {
    const fixture = loadFixture("review_table");
    const { fetchFn } = makeFetchStub({
      "GET /v1/exports/review-table": { status: 200, body: fixture.body },
    });
    const api = new ReviewApi({ baseUrl: BASE, fetchFn });
    const table = await api.reviewTable();
    expect(table.headers).toEqual([
      "Model", "Mean", "SD", "Laterality Error", "Vessel Error",
      "Treatment Error", "Logical Error", "Stenosis Detect Error",
    ]);
  });

  it("escapes case ids in URLs", async () => {
    const detail = loadFixture("case_detail");
    const caseId: string = detail.case_id;
    const { fetchFn, calls } = makeFetchStub({
      [`GET /v1/cases/${encodeURIComponent(caseId)}`]: {
        status: 200,
        body: detail.body,
      },
    });
    const api = new ReviewApi({ baseUrl: BASE, fetchFn });
    await api.getCase(caseId);
    expect(calls[0]?.path).toBe(`/v1/cases/${encodeURIComponent(caseId)}`);
    expect(api.frameUrl(caseId)).toBe(
      `${BASE}/cases/${encodeURIComponent(caseId)}/frame.png`,
    );
  });
});
