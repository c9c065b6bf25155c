import { describe, expect, it } from "vitest";

import { ApiError, Client, type Grid, type SchemaInfo } from "../src/api.js";
import { fakeResponse, fixture, fixtureFetch, type RecordedCall } from "./helpers.js";

function recordingClient(): { client: Client; calls: RecordedCall[] } {
  const calls: RecordedCall[] = [];
  return { client: new Client("http://api.test/", fixtureFetch(calls)), calls };
}

describe("request construction", () => {
  it("strips the trailing slash and posts query text as JSON", async () => {
    const { client, calls } = recordingClient();
    const grid = await client.query("from Yield measure quantity_t");
    expect(calls[0].url).toBe("http://api.test/query");
    expect(calls[0].method).toBe("POST");
    expect(JSON.parse(calls[0].body!)).toEqual({ q: "from Yield measure quantity_t" });
    expect(grid).toEqual(fixture<Grid>("q_yield_qt"));
  });

  it("sends ingest as raw CSV with table and partition in the URL", async () => {
    const csvBody = "Crop,Field,Farmer,quantity_t,area_ha\n1,1,1,2.5,1.0\n";
    const calls: RecordedCall[] = [];
    const client = new Client("http://api.test", (url, init) => {
      calls.push({ url, method: init?.method ?? "GET", body: (init?.body as string) ?? null });
      expect((init?.headers as Record<string, string>)["content-type"]).toBe("text/csv");
      return Promise.resolve(fakeResponse(200, fixture("ingest_delta")));
    });
    const outcome = await client.ingest("Yield", csvBody, "delta");
    expect(calls[0].url).toBe("http://api.test/ingest?table=Yield&partition=delta");
    expect(calls[0].body).toBe(csvBody);
    expect(outcome.load.inserted).toBe(3);
  });

  it("covers the remaining endpoints", async () => {
    const { client, calls } = recordingClient();
    const schema = await client.schema();
    expect(schema.facts.length).toBe(4);
    expect((await client.cubes())).toEqual([]);
    const built = await client.buildCubes("Yield");
    expect(built).toMatchObject({ fact: "Yield", policy: "full", cuboids: 24 });
    expect((await client.mergeDelta("Yield")).absorbed).toBe(3);
    const quality = await client.quality();
    expect(Object.keys(quality.tables).length).toBeGreaterThan(0);
    expect(calls.map((c) => `${c.method} ${c.url.slice("http://api.test".length)}`)).toEqual([
      "GET /schema",
      "GET /cubes",
      "POST /cubes/build",
      "POST /cubes/merge-delta",
      "GET /quality",
    ]);
    expect(JSON.parse(calls[2].body!)).toEqual({ fact: "Yield", policy: "full" });
  });
});

describe("error mapping", () => {
  it("raises ApiError from the flat {code, message, detail} body", async () => {
    const { client } = recordingClient();
    const err = await client.query("from Nope measure x").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    const apiErr = err as ApiError;
    expect(apiErr.status).toBe(400);
    expect(apiErr.code).toBe("semantic_error");
    expect(apiErr.message).toBe("unknown fact 'Nope'");
    expect(apiErr.detail).toBeNull();
  });

  it("keeps the parse position detail", async () => {
    const { client } = recordingClient();
    const err = (await client.query("from Yield measure").catch((e: unknown) => e)) as ApiError;
    expect(err.code).toBe("parse_error");
    expect(err.detail).toEqual({ line: 1, column: 19 });
  });

  it("falls back to the raw text for a non-JSON error body", async () => {
    const client = new Client("http://api.test", () =>
      Promise.resolve(fakeResponse(502, "bad gateway")),
    );
    const err = (await client.schema().catch((e: unknown) => e)) as ApiError;
    expect(err.code).toBe("internal");
    expect(err.status).toBe(502);
    expect(err.message).toBe("bad gateway");
  });
});

describe("schema fixture sanity", () => {
  it("describes the full constellation", () => {
    const schema = fixture<SchemaInfo>("schema");
    expect(schema.dimensions.length).toBe(19);
    expect(schema.facts.map((f) => f.name).sort()).toEqual(
      ["Operation", "Trading", "Treatment", "Yield"],
    );
    for (const dim of schema.dimensions) {
      expect(dim.drill_path[0]).toBe("key");
      expect(dim.attributes.some((a) => a.name === dim.key)).toBe(true);
    }
  });
});
