/** Explorer state and its transitions.
 *
 * Mirrors the server's query algebra exactly: roll-up and drill-down walk a
 * dimension's drill path (finest first, "key" at index 0), a dimension rolled
 * past its coarsest level leaves the group-by, and a dimension drilled into
 * from outside enters at the coarsest level in the fact's canonical slot.
 * Keeping both ends on the same rules is what makes down-then-up land on the
 * identical query text, hence the identical grid.
 */

import type { DimensionInfo, FactInfo, SchemaInfo } from "./api.js";

export const KEY_LEVEL = "key";

export type LiteralValue = string | number;

export interface GroupRef {
  dimension: string;
  selector: string;
}

export interface FilterSpec {
  dimension: string;
  attribute: string;
  op: "=" | "!=" | "<" | "<=" | ">" | ">=" | "in";
  literal: LiteralValue | LiteralValue[];
}

export interface PivotState {
  rows: GroupRef[];
  cols: GroupRef[];
}

export interface ExplorerState {
  fact: string;
  group: GroupRef[];
  filters: FilterSpec[];
  measures: string[];
  pivot: PivotState | null;
}

export function factInfo(schema: SchemaInfo, name: string): FactInfo {
  const fact = schema.facts.find((f) => f.name === name);
  if (!fact) throw new Error(`unknown fact ${name}`);
  return fact;
}

export function dimensionInfo(schema: SchemaInfo, name: string): DimensionInfo {
  const dim = schema.dimensions.find((d) => d.name === name);
  if (!dim) throw new Error(`unknown dimension ${name}`);
  return dim;
}

export function initialState(schema: SchemaInfo, fact: string): ExplorerState {
  const info = factInfo(schema, fact);
  const additive = info.measures.find((m) => m.kind === "additive");
  return {
    fact,
    group: [],
    filters: [],
    measures: [additive ? additive.name : info.measures[0].name],
    pivot: null,
  };
}

function sameRef(a: GroupRef, b: GroupRef): boolean {
  return a.dimension === b.dimension && a.selector === b.selector;
}

/** Group-by order is the fact's declared dimension order, not click order. */
function canonicalGroup(fact: FactInfo, group: GroupRef[]): GroupRef[] {
  const slot = new Map(fact.dimensions.map((d, i) => [d, i]));
  return [...group].sort((a, b) => slot.get(a.dimension)! - slot.get(b.dimension)!);
}

function repoint(pivot: PivotState | null, from: GroupRef, to: GroupRef): PivotState | null {
  if (!pivot) return null;
  const swap = (axis: GroupRef[]) => axis.map((e) => (sameRef(e, from) ? to : e));
  return { rows: swap(pivot.rows), cols: swap(pivot.cols) };
}

function dropRef(pivot: PivotState | null, ref: GroupRef): PivotState | null {
  if (!pivot) return null;
  const keep = (axis: GroupRef[]) => axis.filter((e) => !sameRef(e, ref));
  return { rows: keep(pivot.rows), cols: keep(pivot.cols) };
}

export function rollUp(state: ExplorerState, schema: SchemaInfo, dimension: string): ExplorerState {
  const entry = state.group.find((e) => e.dimension === dimension);
  if (!entry) throw new Error(`${dimension} is not in the group-by`);
  const path = dimensionInfo(schema, dimension).drill_path;
  const i = path.indexOf(entry.selector);
  if (i >= 0 && i + 1 < path.length) {
    const coarser = { dimension, selector: path[i + 1] };
    return {
      ...state,
      group: state.group.map((e) => (e.dimension === dimension ? coarser : e)),
      pivot: repoint(state.pivot, entry, coarser),
    };
  }
  // coarsest level, or an attribute outside the path: leave the group-by
  return {
    ...state,
    group: state.group.filter((e) => e.dimension !== dimension),
    pivot: dropRef(state.pivot, entry),
  };
}

export function drillDown(state: ExplorerState, schema: SchemaInfo, dimension: string): ExplorerState {
  const fact = factInfo(schema, state.fact);
  if (!fact.dimensions.includes(dimension)) {
    throw new Error(`${state.fact} has no dimension ${dimension}`);
  }
  const path = dimensionInfo(schema, dimension).drill_path;
  const entry = state.group.find((e) => e.dimension === dimension);
  if (!entry) {
    const added = { dimension, selector: path[path.length - 1] };
    return {
      ...state,
      group: canonicalGroup(fact, [...state.group, added]),
      pivot: state.pivot
        ? { rows: [...state.pivot.rows, added], cols: state.pivot.cols }
        : null,
    };
  }
  const i = path.indexOf(entry.selector);
  if (i < 0 || entry.selector === KEY_LEVEL) {
    throw new Error(`${dimension} is already at its finest granularity`);
  }
  const finer = { dimension, selector: path[i - 1] };
  return {
    ...state,
    group: state.group.map((e) => (e.dimension === dimension ? finer : e)),
    pivot: repoint(state.pivot, entry, finer),
  };
}

/** Jump a dimension straight to a level (null removes it from the group-by). */
export function setLevel(
  state: ExplorerState,
  schema: SchemaInfo,
  dimension: string,
  selector: string | null,
): ExplorerState {
  const fact = factInfo(schema, state.fact);
  if (!fact.dimensions.includes(dimension)) {
    throw new Error(`${state.fact} has no dimension ${dimension}`);
  }
  const entry = state.group.find((e) => e.dimension === dimension);
  if (selector === null) {
    if (!entry) return state;
    return {
      ...state,
      group: state.group.filter((e) => e.dimension !== dimension),
      pivot: dropRef(state.pivot, entry),
    };
  }
  const target = { dimension, selector };
  if (entry) {
    if (entry.selector === selector) return state;
    return {
      ...state,
      group: state.group.map((e) => (e.dimension === dimension ? target : e)),
      pivot: repoint(state.pivot, entry, target),
    };
  }
  return {
    ...state,
    group: canonicalGroup(fact, [...state.group, target]),
    pivot: state.pivot
      ? { rows: [...state.pivot.rows, target], cols: state.pivot.cols }
      : null,
  };
}

/** Add one equality filter; the group-by is untouched. */
export function sliceFilter(
  state: ExplorerState,
  dimension: string,
  attribute: string,
  value: LiteralValue,
): ExplorerState {
  return {
    ...state,
    filters: [...state.filters, { dimension, attribute, op: "=", literal: value }],
  };
}

export function removeFilter(state: ExplorerState, index: number): ExplorerState {
  return { ...state, filters: state.filters.filter((_, i) => i !== index) };
}

export function toggleMeasure(state: ExplorerState, schema: SchemaInfo, name: string): ExplorerState {
  const fact = factInfo(schema, state.fact);
  if (!fact.measures.some((m) => m.name === name)) {
    throw new Error(`${state.fact} has no measure ${name}`);
  }
  if (state.measures.includes(name)) {
    if (state.measures.length === 1) throw new Error("at least one measure required");
    return { ...state, measures: state.measures.filter((m) => m !== name) };
  }
  // keep the fact's declared measure order regardless of click order
  const order = fact.measures.map((m) => m.name);
  const measures = order.filter((m) => state.measures.includes(m) || m === name);
  return { ...state, measures };
}

export function setPivot(state: ExplorerState, rows: GroupRef[], cols: GroupRef[]): ExplorerState {
  const covered = [...rows, ...cols].map(refText).sort();
  const grouped = state.group.map(refText).sort();
  if (JSON.stringify(covered) !== JSON.stringify(grouped)) {
    throw new Error("pivot axes must cover the group-by entries exactly");
  }
  return { ...state, pivot: { rows, cols } };
}

export function clearPivot(state: ExplorerState): ExplorerState {
  return { ...state, pivot: null };
}

export function setFact(state: ExplorerState, schema: SchemaInfo, fact: string): ExplorerState {
  if (fact === state.fact) return state;
  return initialState(schema, fact);
}

// -- serialization back to query text ----------------------------------------

export function refText(ref: GroupRef): string {
  return `${ref.dimension}.${ref.selector}`;
}

function attributeKind(schema: SchemaInfo, dimension: string, attribute: string): string {
  const dim = dimensionInfo(schema, dimension);
  const attr = dim.attributes.find((a) => a.name === attribute);
  if (!attr) throw new Error(`${dimension} has no attribute ${attribute}`);
  return attr.kind;
}

const ISO_DATE = /^\d{4}-\d{2}-\d{2}$/;

function literalText(kind: string, value: LiteralValue): string {
  if (kind === "date") {
    if (typeof value !== "string" || !ISO_DATE.test(value)) {
      throw new Error(`date literal must be YYYY-MM-DD, got ${JSON.stringify(value)}`);
    }
    return value; // bare ISO date
  }
  if (kind === "text" || kind === "enumeration") {
    if (typeof value !== "string") {
      throw new Error(`literal ${JSON.stringify(value)} does not match kind ${kind}`);
    }
    if (value.includes('"')) {
      // the grammar has no escape sequences inside string literals
      throw new Error(`string literal may not contain a double quote: ${JSON.stringify(value)}`);
    }
    return `"${value}"`;
  }
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new Error(`literal ${JSON.stringify(value)} does not match kind ${kind}`);
  }
  return String(value);
}

function filterText(schema: SchemaInfo, f: FilterSpec): string {
  const kind = attributeKind(schema, f.dimension, f.attribute);
  const lhs = `${f.dimension}.${f.attribute}`;
  if (f.op === "in") {
    const values = Array.isArray(f.literal) ? f.literal : [f.literal];
    return `${lhs} in (${values.map((v) => literalText(kind, v)).join(", ")})`;
  }
  if (Array.isArray(f.literal)) {
    throw new Error(`operator ${f.op} takes a single literal`);
  }
  return `${lhs} ${f.op} ${literalText(kind, f.literal)}`;
}

/** Canonical query text; clause order is fixed by the grammar. */
export function queryText(schema: SchemaInfo, state: ExplorerState): string {
  if (state.measures.length === 0) throw new Error("at least one measure required");
  const fact = factInfo(schema, state.fact);
  const group = canonicalGroup(fact, state.group);
  const parts = [`from ${state.fact}`];
  if (group.length > 0) {
    parts.push("group by " + group.map(refText).join(", "));
  }
  if (state.filters.length > 0) {
    parts.push("where " + state.filters.map((f) => filterText(schema, f)).join(" and "));
  }
  parts.push("measure " + state.measures.join(", "));
  if (state.pivot) {
    const rows = state.pivot.rows.map(refText).join(", ");
    const cols = state.pivot.cols.map(refText).join(", ");
    parts.push(`pivot rows=${rows} cols=${cols}`);
  }
  return parts.join(" ");
}
