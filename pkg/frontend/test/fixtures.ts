/** Recorded-fixture loading and a fetch stub keyed by method+path. */

import { readFileSync } from "node:fs";

export function loadFixture<T = any>(name: string): T {
  const url = new URL(`./fixtures/${name}.json`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

export interface StubResponse {
  status: number;
  body: unknown;
}

export interface RecordedCall {
  method: string;
  path: string;
  headers: Record<string, string>;
  body?: unknown;
}

export function makeFetchStub(routes: Record<string, StubResponse>) {
  const calls: RecordedCall[] = [];
  const fetchFn = (async (input: any, init?: any) => {
    const url = String(input);
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const method = init?.method ?? "GET";
    calls.push({
      method,
      path,
      headers: (init?.headers as Record<string, string>) ?? {},
      body: init?.body ? JSON.parse(init.body as string) : undefined,
    });
    const route = routes[`${method} ${path}`];
    if (!route) {
      return {
        ok: false,
        status: 404,
        statusText: "Not Found",
        json: async () => ({ code: "NotFound", message: `no stub for ${method} ${path}` }),
      } as Response;
    }
    return {
      ok: route.status >= 200 && route.status < 300,
      status: route.status,
      statusText: "",
      json: async () => route.body,
    } as Response;
  }) as typeof fetch;
  return { fetchFn, calls };
}
