import { describe, expect, it } from "vitest";

import { ReviewApi } from "../src/api.js";
import { AnnotateFlow, KEY_BINDINGS, keyLegend } from "../src/annotate.js";
import { SIX_CLASSES, validateAnnotation } from "../src/schema.js";
import { loadFixture, makeFetchStub } from "./fixtures.js";

const BASE = "http://localhost:9999/v1";

const QUEUE = [
  { caseId: "e1:v1:1", videoId: "v1", frameIndex: 1 },
  { caseId: "e1:v1:3", videoId: "v1", frameIndex: 3 },
];

function apiWith(routes: Record<string, { status: number; body: unknown }>) {
  const { fetchFn, calls } = makeFetchStub(routes);
  return { api: new ReviewApi({ baseUrl: BASE, token: "tokA", fetchFn }), calls };
}

describe("keyboard bindings", () => {
  it("covers all six classes with one key each", () => {
    expect(Object.values(KEY_BINDINGS).sort()).toEqual([...SIX_CLASSES].sort());
    expect(new Set(Object.keys(KEY_BINDINGS)).size).toBe(6);
    expect(keyLegend()).toHaveLength(6);
  });
});

describe("annotate flow", () => {
  it("posts the bound label and advances optimistically", async () => {
    const accepted = loadFixture("annotation_accepted");
    const { api, calls } = apiWith({
      "POST /v1/annotations": { status: 201, body: accepted.body },
    });
    const flow = new AnnotateFlow(api, QUEUE);
    const label = flow.pressKey("1");
    expect(label).toBe("LCA_better");
    // advanced before the POST settled
    expect(flow.current()?.caseId).toBe("e1:v1:3");
    await flow.flush();
    expect(calls).toHaveLength(1);
    expect(calls[0]?.body).toEqual({
      video_id: "v1",
      frame_index: 1,
      label: "LCA_better",
    });
    // the body we send is exactly the shape the service accepted on record
    expect(calls[0]?.body).toEqual(accepted.request);
    expect(validateAnnotation(calls[0]?.body as any)).toBeNull();
    expect(flow.progress()).toMatchObject({ done: 1, pending: 1, failed: 0 });
  });

  it("ignores unbound keys", () => {
    const { api, calls } = apiWith({});
    const flow = new AnnotateFlow(api, QUEUE);
    expect(flow.pressKey("x")).toBeNull();
    expect(flow.current()?.caseId).toBe("e1:v1:1");
    expect(calls).toHaveLength(0);
  });

  it("requeues failed posts with a visible error and retries them", async () => {
    const failure = loadFixture("unauthorized");
    let failNext = true;
    const { fetchFn, calls } = makeFetchStub({
      "POST /v1/annotations": { status: 201, body: { revision: 1 } },
    });
    const flaky: typeof fetch = async (input, init) => {
      if (failNext) {
        failNext = false;
        return {
          ok: false,
          status: failure.status,
          statusText: "",
          json: async () => failure.body,
        } as Response;
      }
      return fetchFn(input, init);
    };
    const api = new ReviewApi({ baseUrl: BASE, token: "tokA", fetchFn: flaky });
    const flow = new AnnotateFlow(api, QUEUE);
    flow.pressKey("2");
    await flow.flush();
    expect(flow.progress()).toMatchObject({ done: 0, failed: 1 });
    expect(flow.failed[0]?.label).toBe("LCA_bad");
    expect(flow.failed[0]?.error).toContain(failure.body.message);

    flow.retryFailed();
    await flow.flush();
    expect(flow.progress()).toMatchObject({ done: 1, failed: 0 });
    expect(calls[0]?.body).toEqual({
      video_id: "v1",
      frame_index: 1,
      label: "LCA_bad",
    });
  });

  it("renders the conflict queue exactly from the service payload", async () => {
    const fixture = loadFixture("conflicts");
    const { api } = apiWith({
      "GET /v1/annotations/conflicts": { status: 200, body: fixture.body },
    });
    await expect(api.conflicts()).resolves.toEqual(fixture.body.conflicts);
  });

  it("marks adjudication passes with resolving=true", async () => {
    const { api, calls } = apiWith({
      "POST /v1/annotations": { status: 201, body: { revision: 1 } },
    });
    const flow = new AnnotateFlow(api, QUEUE, true);
    flow.pressKey("4");
    await flow.flush();
    expect(calls[0]?.body).toMatchObject({ label: "RCA_better", resolving: true });
  });
});
