/** Vanilla-DOM explorer over the warehouse HTTP API.
 *
 * One screen: pick a fact, set per-dimension granularity, toggle measures,
 * add filters, optionally split the group-by across pivot axes, and every
 * interaction re-runs the query against the live server. Row-header clicks
 * slice: they add an equality filter for each header component whose level
 * is a plain attribute.
 */

import { ApiError, Client } from "./api.js";
import type { DimensionInfo, Grid, HeaderValue, SchemaInfo } from "./api.js";
import {
  drillDown,
  type ExplorerState,
  dimensionInfo,
  factInfo,
  initialState,
  KEY_LEVEL,
  queryText,
  refText,
  removeFilter,
  rollUp,
  setFact,
  setLevel,
  setPivot,
  clearPivot,
  sliceFilter,
  toggleMeasure,
  type FilterSpec,
  type GroupRef,
  type LiteralValue,
} from "./state.js";
import { cellMatrix, headerLabel } from "./grid.js";

export interface ExplorerHandle {
  state(): ExplorerState;
  grid(): Grid | null;
  text(): string;
  element: HTMLElement;
  /** Resolves once every interaction issued so far has rendered. */
  settled(): Promise<void>;
}

/** Header components at this level can become equality filters. */
function sliceTarget(dim: DimensionInfo, selector: string): string | null {
  if (selector === KEY_LEVEL) return dim.key;
  if (dim.attributes.some((a) => a.name === selector)) return selector;
  return null; // date-part levels such as month(order_date)
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export async function mountExplorer(root: HTMLElement, client: Client): Promise<ExplorerHandle> {
  const schema = await client.schema();
  let state = initialState(schema, schema.facts[0].name);
  let grid: Grid | null = null;
  let pending: Promise<void> = Promise.resolve();

  root.classList.add("explorer");

  const controls = el("div", "controls");
  const factSelect = el("select", "fact-select");
  const dimensionPanel = el("div", "dimension-panel");
  const measurePanel = el("div", "measure-panel");
  const filterPanel = el("div", "filter-panel");
  const pivotPanel = el("div", "pivot-panel");
  const queryBox = el("div", "query-text");
  const errorBox = el("div", "error-box");
  const gridTable = el("table", "grid-table");
  const provenanceLine = el("div", "provenance");
  controls.append(factSelect, dimensionPanel, measurePanel, filterPanel, pivotPanel);
  root.append(controls, queryBox, errorBox, gridTable, provenanceLine);

  for (const fact of schema.facts) {
    const option = el("option", undefined, fact.name);
    option.value = fact.name;
    factSelect.appendChild(option);
  }
  factSelect.value = state.fact;
  factSelect.addEventListener("change", () => {
    apply(() => setFact(state, schema, factSelect.value));
  });

  function apply(transition: () => ExplorerState): void {
    try {
      state = transition();
      errorBox.textContent = "";
    } catch (err) {
      errorBox.textContent = String(err instanceof Error ? err.message : err);
      renderControls();
      return;
    }
    const run = refresh();
    pending = pending.then(() => run);
  }

  async function refresh(): Promise<void> {
    let text: string;
    try {
      text = queryText(schema, state);
    } catch (err) {
      errorBox.textContent = String(err instanceof Error ? err.message : err);
      renderControls();
      return;
    }
    queryBox.textContent = text;
    try {
      grid = await client.query(text);
      errorBox.textContent = "";
    } catch (err) {
      grid = null;
      errorBox.textContent =
        err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    }
    renderControls();
    renderGrid();
  }

  function groupedSelector(dimension: string): string | null {
    const entry = state.group.find((e) => e.dimension === dimension);
    return entry ? entry.selector : null;
  }

  function renderControls(): void {
    const fact = factInfo(schema, state.fact);

    dimensionPanel.textContent = "";
    for (const name of fact.dimensions) {
      const dim = dimensionInfo(schema, name);
      const row = el("div", "dimension-row");
      row.dataset.dimension = name;
      row.appendChild(el("span", "dimension-name", name));

      const level = el("select", "level-select");
      level.dataset.dimension = name;
      const none = el("option", undefined, "(none)");
      none.value = "";
      level.appendChild(none);
      const plain = dim.attributes
        .map((a) => a.name)
        .filter((a) => a !== dim.key && !dim.drill_path.includes(a));
      for (const selector of [...dim.drill_path, ...plain]) {
        const option = el("option", undefined, selector);
        option.value = selector;
        level.appendChild(option);
      }
      level.value = groupedSelector(name) ?? "";
      level.addEventListener("change", () => {
        apply(() => setLevel(state, schema, name, level.value === "" ? null : level.value));
      });
      row.appendChild(level);

      const up = el("button", "rollup-button", "roll up");
      up.dataset.dimension = name;
      up.disabled = groupedSelector(name) === null;
      up.addEventListener("click", () => apply(() => rollUp(state, schema, name)));
      row.appendChild(up);

      const down = el("button", "drilldown-button", "drill down");
      down.dataset.dimension = name;
      down.disabled = groupedSelector(name) === KEY_LEVEL;
      down.addEventListener("click", () => apply(() => drillDown(state, schema, name)));
      row.appendChild(down);

      dimensionPanel.appendChild(row);
    }

    measurePanel.textContent = "";
    for (const measure of fact.measures) {
      const label = el("label", "measure-label");
      const box = el("input", "measure-toggle");
      box.type = "checkbox";
      box.dataset.measure = measure.name;
      box.checked = state.measures.includes(measure.name);
      box.addEventListener("change", () => {
        apply(() => toggleMeasure(state, schema, measure.name));
      });
      label.append(box, document.createTextNode(measure.name));
      measurePanel.appendChild(label);
    }

    renderFilters(fact.dimensions);
    renderPivot();
  }

  function renderFilters(dimensions: string[]): void {
    filterPanel.textContent = "";
    state.filters.forEach((f, index) => {
      const chip = el("span", "filter-chip");
      const literal = Array.isArray(f.literal) ? `(${f.literal.join(", ")})` : String(f.literal);
      chip.appendChild(
        el("span", "filter-text", `${f.dimension}.${f.attribute} ${f.op} ${literal}`),
      );
      const remove = el("button", "filter-remove", "x");
      remove.addEventListener("click", () => apply(() => removeFilter(state, index)));
      chip.appendChild(remove);
      filterPanel.appendChild(chip);
    });

    const adder = el("div", "filter-adder");
    const target = el("select", "filter-attribute");
    for (const name of dimensions) {
      for (const attr of dimensionInfo(schema, name).attributes) {
        const option = el("option", undefined, `${name}.${attr.name}`);
        option.value = `${name}.${attr.name}`;
        target.appendChild(option);
      }
    }
    const op = el("select", "filter-op");
    for (const o of ["=", "!=", "<", "<=", ">", ">=", "in"]) {
      const option = el("option", undefined, o);
      option.value = o;
      op.appendChild(option);
    }
    const input = el("input", "filter-value");
    input.type = "text";
    const add = el("button", "filter-add", "add filter");
    add.addEventListener("click", () => {
      const [dimension, attribute] = target.value.split(".", 2);
      apply(() => {
        const kind = dimensionInfo(schema, dimension)
          .attributes.find((a) => a.name === attribute)!.kind;
        const parse = (raw: string): LiteralValue => {
          const trimmed = raw.trim();
          if (kind === "date" || kind === "text" || kind === "enumeration") return trimmed;
          const value = Number(trimmed);
          if (!Number.isFinite(value)) throw new Error(`not a number: ${trimmed}`);
          return value;
        };
        const literal =
          op.value === "in" ? input.value.split(",").map(parse) : parse(input.value);
        return {
          ...state,
          filters: [
            ...state.filters,
            { dimension, attribute, op: op.value as FilterSpec["op"], literal },
          ],
        };
      });
    });
    adder.append(target, op, input, add);
    filterPanel.appendChild(adder);
  }

  function renderPivot(): void {
    pivotPanel.textContent = "";
    const label = el("label", "pivot-label");
    const toggle = el("input", "pivot-toggle");
    toggle.type = "checkbox";
    toggle.checked = state.pivot !== null;
    toggle.addEventListener("change", () => {
      apply(() => (toggle.checked ? setPivot(state, state.group, []) : clearPivot(state)));
    });
    label.append(toggle, document.createTextNode("pivot"));
    pivotPanel.appendChild(label);
    if (!state.pivot) return;

    const cols = new Set(state.pivot.cols.map(refText));
    for (const entry of state.group) {
      const entryLabel = el("label", "pivot-axis-label");
      const box = el("input", "pivot-axis-toggle");
      box.type = "checkbox";
      box.dataset.ref = refText(entry);
      box.checked = cols.has(refText(entry));
      box.addEventListener("change", () => {
        apply(() => {
          const wantCols = new Set(cols);
          if (box.checked) wantCols.add(refText(entry));
          else wantCols.delete(refText(entry));
          const rows = state.group.filter((e) => !wantCols.has(refText(e)));
          const colRefs = state.group.filter((e) => wantCols.has(refText(e)));
          return setPivot(state, rows, colRefs);
        });
      });
      entryLabel.append(box, document.createTextNode(`${refText(entry)} on cols`));
      pivotPanel.appendChild(entryLabel);
    }
  }

  function rowAxisRefs(): GroupRef[] {
    return state.pivot ? state.pivot.rows : state.group;
  }

  function renderGrid(): void {
    gridTable.textContent = "";
    provenanceLine.textContent = "";
    if (!grid) return;
    const data = grid;

    const matrices = state.measures.map((m) => cellMatrix(data, m));
    const head = el("tr");
    head.appendChild(el("th", "corner", ""));
    data.cols.forEach((tuple) => {
      for (const measure of state.measures) {
        const th = el("th", "col-header");
        th.textContent =
          tuple.length === 0 ? measure : `${headerLabel(tuple)} · ${measure}`;
        head.appendChild(th);
      }
    });
    gridTable.appendChild(head);

    const axis = rowAxisRefs();
    data.rows.forEach((tuple, r) => {
      const tr = el("tr");
      const th = el("th", "row-header", headerLabel(tuple));
      th.addEventListener("click", () => sliceOnHeader(axis, tuple));
      tr.appendChild(th);
      data.cols.forEach((_, c) => {
        for (const [m] of state.measures.entries()) {
          const value = matrices[m][r][c];
          tr.appendChild(el("td", "cell", value === null ? "" : String(value)));
        }
      });
      gridTable.appendChild(tr);
    });

    const p = data.provenance;
    provenanceLine.textContent =
      `source=${p.source} delta_rows_scanned=${p.delta_rows_scanned} ` +
      `base_rows_covered=${p.base_rows_covered}`;
  }

  function sliceOnHeader(axis: GroupRef[], tuple: HeaderValue[]): void {
    apply(() => {
      let next = state;
      let applied = 0;
      axis.forEach((entry, i) => {
        const value = tuple[i];
        if (value === null || value === undefined) return; // no null literal
        const attribute = sliceTarget(dimensionInfo(schema, entry.dimension), entry.selector);
        if (!attribute) return;
        next = sliceFilter(next, entry.dimension, attribute, value);
        applied += 1;
      });
      if (applied === 0) throw new Error("no sliceable attribute on this header");
      return next;
    });
  }

  const first = refresh();
  pending = pending.then(() => first);
  renderControls();

  return {
    state: () => state,
    grid: () => grid,
    text: () => queryText(schema, state),
    element: root,
    settled: () => pending,
  };
}

// standalone page: mount on #explorer against ?api=<base url> (same origin
// by default)
const mount = typeof document !== "undefined" ? document.getElementById("explorer") : null;
if (mount) {
  const base = new URLSearchParams(window.location.search).get("api") ?? "";
  void mountExplorer(mount, new Client(base));
}
