/** Fixture loading and a fetch stub that serves the golden responses.
 *
 * The stub resolves POST /query by exact query text, so a test fails loudly
 * the moment the explorer emits anything that was not captured from the real
 * server.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/api.js";

const here = dirname(fileURLToPath(import.meta.url));

export function fixture<T>(name: string): T {
  const raw = readFileSync(join(here, "fixtures", `${name}.json`), "utf8");
  return JSON.parse(raw) as T;
}

export interface FixtureManifest {
  dataset: Record<string, unknown>;
  queries: Record<string, string>;
  extra_queries: Record<string, string>;
  errors: Record<string, string>;
  slice_value: string;
  post_ingest: Record<string, string[]>;
  files: Record<string, string>;
}

export const manifest = fixture<FixtureManifest>("manifest");

function byName(file: string): unknown {
  return fixture(file.replace(/\.json$/, ""));
}

/** Plain stand-in for Response; the client only uses ok/status/text(). */
export function fakeResponse(status: number, body: unknown): Response {
  const text = typeof body === "string" ? body : JSON.stringify(body);
  return {
    ok: status >= 200 && status < 300,
    status,
    text: () => Promise.resolve(text),
  } as unknown as Response;
}

export interface RecordedCall {
  url: string;
  method: string;
  body: string | null;
}

export function fixtureFetch(calls?: RecordedCall[]): FetchLike {
  const queryFiles = new Map<string, string>([
    ...Object.entries(manifest.queries),
    ...Object.entries(manifest.extra_queries),
  ]);
  return (url, init) => {
    const method = init?.method ?? "GET";
    const body = typeof init?.body === "string" ? init.body : null;
    calls?.push({ url, method, body });
    const path = url.replace(/^https?:\/\/[^/]+/, "").split("?")[0];
    if (method === "GET" && path === "/schema") {
      return Promise.resolve(fakeResponse(200, byName("schema.json")));
    }
    if (method === "POST" && path === "/query") {
      const q = (JSON.parse(body ?? "{}") as { q: string }).q;
      const errorFile = manifest.errors[q];
      if (errorFile) {
        const err = byName(errorFile) as { status: number; body: unknown };
        return Promise.resolve(fakeResponse(err.status, err.body));
      }
      const file = queryFiles.get(q);
      if (!file) return Promise.reject(new Error(`no fixture for query: ${q}`));
      return Promise.resolve(fakeResponse(200, byName(file)));
    }
    if (method === "GET" && path === "/cubes") {
      return Promise.resolve(fakeResponse(200, byName("cubes_initial.json")));
    }
    if (method === "POST" && path === "/cubes/build") {
      return Promise.resolve(fakeResponse(200, byName("cube_build.json")));
    }
    if (method === "POST" && path === "/cubes/merge-delta") {
      return Promise.resolve(fakeResponse(200, byName("merge_delta.json")));
    }
    if (method === "POST" && path === "/ingest") {
      return Promise.resolve(fakeResponse(200, byName("ingest_delta.json")));
    }
    if (method === "GET" && path === "/quality") {
      return Promise.resolve(fakeResponse(200, byName("quality.json")));
    }
    return Promise.reject(new Error(`no fixture route for ${method} ${path}`));
  };
}
