// @vitest-environment happy-dom

import { beforeEach, describe, expect, it } from "vitest";

import { Client, type Grid } from "../src/api.js";
import { mountExplorer, type ExplorerHandle } from "../src/app.js";
import { fakeResponse, fixture, fixtureFetch, manifest } from "./helpers.js";

async function mount(): Promise<ExplorerHandle> {
  const root = document.createElement("div");
  document.body.appendChild(root);
  const handle = await mountExplorer(root, new Client("http://api.test", fixtureFetch()));
  await handle.settled();
  return handle;
}

function pick<T extends Element>(root: HTMLElement, selector: string): T {
  const node = root.querySelector(selector);
  if (!node) throw new Error(`missing element: ${selector}`);
  return node as T;
}

async function click(handle: ExplorerHandle, selector: string): Promise<void> {
  pick<HTMLElement>(handle.element, selector).click();
  await handle.settled();
}

async function choose(handle: ExplorerHandle, selector: string, value: string): Promise<void> {
  const select = pick<HTMLSelectElement>(handle.element, selector);
  select.value = value;
  select.dispatchEvent(new Event("change"));
  await handle.settled();
}

beforeEach(() => {
  document.body.textContent = "";
});

describe("mounting", () => {
  it("shows the first fact's apex total", async () => {
    const handle = await mount();
    expect(handle.state().fact).toBe("Trading");
    expect(handle.text()).toBe("from Trading measure quantity_t");
    expect(handle.grid()).toEqual(fixture<Grid>("q_trading_apex"));

    const table = pick<HTMLTableElement>(handle.element, ".grid-table");
    expect(table.querySelectorAll("tr").length).toBe(2); // header + apex row
    expect(pick(handle.element, ".row-header").textContent).toBe("(all)");
    expect(pick(handle.element, ".query-text").textContent).toBe(handle.text());
    expect(pick(handle.element, ".provenance").textContent).toContain("source=scan");
  });

  it("lists every dimension of the selected fact with its levels", async () => {
    const handle = await mount();
    const rows = handle.element.querySelectorAll(".dimension-row");
    expect([...rows].map((r) => (r as HTMLElement).dataset.dimension)).toEqual(
      ["Product", "Order", "Supplier", "Purchaser"],
    );
    const orderLevels = pick<HTMLSelectElement>(handle.element, ".level-select[data-dimension='Order']");
    const values = [...orderLevels.options].map((o) => o.value);
    expect(values.slice(0, 5)).toEqual(["", "key", "order_date", "month(order_date)", "year(order_date)"]);
  });
});

describe("drill, roll, slice through the controls", () => {
  it("round-trips the rendered grid and supports row-header slicing", async () => {
    const handle = await mount();
    await choose(handle, ".fact-select", "Yield");
    expect(handle.text()).toBe("from Yield measure quantity_t");

    await click(handle, ".measure-toggle[data-measure='row_count']");
    expect(handle.text()).toBe("from Yield measure quantity_t, row_count");

    await click(handle, ".drilldown-button[data-dimension='Crop']");
    expect(handle.text()).toBe("from Yield group by Crop.name measure quantity_t, row_count");
    const byName = handle.grid()!;
    expect(byName).toEqual(fixture<Grid>("q_crop_name"));
    const namedRows = handle.element.querySelectorAll(".row-header").length;

    await click(handle, ".drilldown-button[data-dimension='Crop']");
    expect(handle.text()).toBe(
      "from Yield group by Crop.variety_name measure quantity_t, row_count",
    );
    expect(handle.grid()).toEqual(fixture<Grid>("q_crop_variety"));
    expect(handle.element.querySelectorAll(".row-header").length).toBe(
      fixture<Grid>("q_crop_variety").rows.length,
    );

    // the adjoint, at the DOM level: up after down restores the same grid
    await click(handle, ".rollup-button[data-dimension='Crop']");
    expect(handle.grid()).toEqual(byName);
    expect(handle.element.querySelectorAll(".row-header").length).toBe(namedRows);

    // clicking a row header slices on the plain attribute behind the level
    const header = [...handle.element.querySelectorAll(".row-header")].find(
      (th) => th.textContent === manifest.slice_value,
    ) as HTMLElement;
    header.click();
    await handle.settled();
    expect(handle.text()).toBe(
      `from Yield group by Crop.name where Crop.name = "${manifest.slice_value}"`
      + " measure quantity_t, row_count",
    );
    expect(handle.grid()).toEqual(fixture<Grid>("q_crop_name_row_sliced"));
    expect(handle.element.querySelectorAll(".row-header").length).toBe(1);
    expect(pick(handle.element, ".filter-text").textContent).toBe(
      `Crop.name = ${manifest.slice_value}`,
    );

    await click(handle, ".filter-remove");
    expect(handle.grid()).toEqual(byName);
  });

  it("splits the group-by across pivot axes", async () => {
    const handle = await mount();
    await choose(handle, ".fact-select", "Yield");
    await choose(handle, ".level-select[data-dimension='Crop']", "name");
    await choose(handle, ".level-select[data-dimension='Farmer']", "key");
    expect(handle.text()).toBe("from Yield group by Crop.name, Farmer.key measure quantity_t");

    await click(handle, ".pivot-toggle");
    expect(handle.text()).toBe(
      "from Yield group by Crop.name, Farmer.key measure quantity_t"
      + " pivot rows=Crop.name, Farmer.key cols=",
    );

    await click(handle, ".pivot-axis-toggle[data-ref='Farmer.key']");
    expect(handle.text()).toBe(
      "from Yield group by Crop.name, Farmer.key measure quantity_t"
      + " pivot rows=Crop.name cols=Farmer.key",
    );
    const pivoted = fixture<Grid>("q_pair_pivot");
    expect(handle.grid()).toEqual(pivoted);
    expect(handle.element.querySelectorAll(".col-header").length).toBe(pivoted.cols.length);
    expect(handle.element.querySelectorAll(".row-header").length).toBe(pivoted.rows.length);
    // uncovered row/column positions render as empty cells
    const blanks = [...handle.element.querySelectorAll(".cell")].filter(
      (td) => td.textContent === "",
    );
    expect(blanks.length).toBe(pivoted.rows.length * pivoted.cols.length - pivoted.cells.length);
  });
});

describe("failure surfaces", () => {
  it("keeps the last valid state when a transition is rejected", async () => {
    const handle = await mount();
    const before = handle.text();
    await click(handle, ".measure-toggle[data-measure='quantity_t']"); // the only one
    expect(pick(handle.element, ".error-box").textContent).toMatch(/at least one measure/);
    expect(handle.text()).toBe(before);
    const box = pick<HTMLInputElement>(handle.element, ".measure-toggle[data-measure='quantity_t']");
    expect(box.checked).toBe(true); // re-rendered from the unchanged state
  });

  it("renders server errors with their code", async () => {
    const failing = fixtureFetch();
    const client = new Client("http://api.test", (url, init) => {
      if (init?.method === "POST" && url.endsWith("/query")) {
        return Promise.resolve(
          fakeResponse(400, fixture<{ body: unknown }>("err_semantic").body),
        );
      }
      return failing(url, init);
    });
    const root = document.createElement("div");
    document.body.appendChild(root);
    const handle = await mountExplorer(root, client);
    await handle.settled();
    expect(pick(handle.element, ".error-box").textContent).toBe(
      "semantic_error: unknown fact 'Nope'",
    );
    expect(handle.grid()).toBeNull();
    expect(pick(handle.element, ".grid-table").textContent).toBe("");
  });
});
