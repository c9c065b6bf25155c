/** Typed client for the warehouse HTTP API.
 *
 * Every response shape here mirrors the server's JSON byte for byte; the
 * explorer never reinterprets grids, it lays out exactly what arrived.
 */

export interface AttributeInfo {
  name: string;
  kind: string; // identifier | integer | decimal | date | text | enumeration
  nullable: boolean;
}

export interface HierarchyInfo {
  name: string;
  levels: string[];
}

export interface LinkInfo {
  attribute: string;
  target: string;
}

export interface DimensionInfo {
  name: string;
  key: string;
  attributes: AttributeInfo[];
  hierarchies: HierarchyInfo[];
  links: LinkInfo[];
  levels: string[];
  /** Finest first: "key", then hierarchy levels up to the coarsest. */
  drill_path: string[];
}

export interface MeasureInfo {
  name: string;
  kind: string; // additive | count | ratio
  unit: string;
  numerator: string | null;
  denominator: string | null;
}

export interface FactInfo {
  name: string;
  dimensions: string[];
  measures: MeasureInfo[];
}

export interface SchemaInfo {
  name: string;
  dimensions: DimensionInfo[];
  facts: FactInfo[];
}

/** Group members as they appear on grid axes; null is the absent member. */
export type HeaderValue = string | number | null;

export interface GridCell {
  r: number;
  c: number;
  /** Keyed by measure name; a ratio is omitted where its denominator is 0. */
  values: Record<string, number>;
}

export interface Provenance {
  source: string;
  delta_rows_scanned: number;
  base_rows_covered: number;
}

export interface Grid {
  rows: HeaderValue[][];
  cols: HeaderValue[][];
  cells: GridCell[];
  provenance: Provenance;
}

export interface LoadBlock {
  input: number;
  inserted: number;
  rejected: number;
  quarantined: number;
  merged_duplicates: number;
  reasons: Record<string, number>;
}

export interface IngestOutcome {
  table: string;
  partition: string | null;
  load: LoadBlock;
  quality: Record<string, number>;
  quality_delta: Record<string, Record<string, number>>;
}

export interface CubeInfo {
  fact: string;
  policy: string;
  cuboids: number;
  entries: number;
  skipped: number;
  built_epoch: number;
  stale: boolean;
}

export interface TableMetrics {
  completeness: number;
  referential_integrity: number;
  duplicates: number;
  consistency: number;
  timeliness: number;
}

export interface QualityInfo {
  tables: Record<string, TableMetrics>;
  load_counts: Record<string, number>;
}

/** Server-reported failure: flat {code, message, detail?} body. */
export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly detail: Record<string, unknown> | null;

  constructor(
    status: number,
    code: string,
    message: string,
    detail: Record<string, unknown> | null = null,
  ) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.detail = detail;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class Client {
  readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  schema(): Promise<SchemaInfo> {
    return this.request<SchemaInfo>("GET", "/schema");
  }

  query(q: string): Promise<Grid> {
    return this.request<Grid>("POST", "/query", { q });
  }

  async ingest(
    table: string,
    csv: string,
    partition: "base" | "delta" = "base",
  ): Promise<IngestOutcome> {
    const params = new URLSearchParams({ table, partition });
    const response = await this.fetchFn(`${this.baseUrl}/ingest?${params}`, {
      method: "POST",
      headers: { "content-type": "text/csv" },
      body: csv,
    });
    return this.decode<IngestOutcome>(response);
  }

  cubes(): Promise<CubeInfo[]> {
    return this.request<CubeInfo[]>("GET", "/cubes");
  }

  buildCubes(fact: string, policy = "full"): Promise<CubeInfo> {
    return this.request<CubeInfo>("POST", "/cubes/build", { fact, policy });
  }

  mergeDelta(fact: string): Promise<{ absorbed: number }> {
    return this.request<{ absorbed: number }>("POST", "/cubes/merge-delta", { fact });
  }

  quality(): Promise<QualityInfo> {
    return this.request<QualityInfo>("GET", "/quality");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    return this.decode<T>(response);
  }

  private async decode<T>(response: Response): Promise<T> {
    const text = await response.text();
    if (!response.ok) {
      let code = "internal";
      let message = text || `HTTP ${response.status}`;
      let detail: Record<string, unknown> | null = null;
      try {
        const parsed = JSON.parse(text) as Record<string, unknown>;
        if (typeof parsed.code === "string") code = parsed.code;
        if (typeof parsed.message === "string") message = parsed.message;
        if (parsed.detail && typeof parsed.detail === "object") {
          detail = parsed.detail as Record<string, unknown>;
        }
      } catch {
        // non-JSON body: keep the raw text as the message
      }
      throw new ApiError(response.status, code, message, detail);
    }
    return JSON.parse(text) as T;
  }
}
