/** Layout and comparison helpers for result grids.
 *
 * A grid arrives fully formed: `rows` and `cols` are the axis header tuples
 * (a lone empty tuple means the axis is collapsed to a single total line) and
 * each cell carries its measure values keyed by name. Nothing here aggregates;
 * comparison is the only arithmetic, and it is tolerance-based so that two
 * routes to the same numbers (scan vs cuboid, before vs after a merge) compare
 * equal without demanding bitwise-identical float summation order.
 */

import type { Grid, GridCell, HeaderValue } from "./api.js";

/** Dense r-major matrix of one measure; null where the cell or value is absent. */
export function cellMatrix(grid: Grid, measure: string): (number | null)[][] {
  const matrix: (number | null)[][] = grid.rows.map(() =>
    grid.cols.map(() => null),
  );
  for (const cell of grid.cells) {
    const value = cell.values[measure];
    matrix[cell.r][cell.c] = value === undefined ? null : value;
  }
  return matrix;
}

export function headerLabel(tuple: HeaderValue[]): string {
  if (tuple.length === 0) return "(all)";
  return tuple.map((v) => (v === null ? "(null)" : String(v))).join(" / ");
}

function closeEnough(a: number, b: number, relTol: number): boolean {
  if (a === b) return true;
  return Math.abs(a - b) <= relTol * Math.max(Math.abs(a), Math.abs(b));
}

function sameHeaders(a: HeaderValue[][], b: HeaderValue[][]): boolean {
  if (a.length !== b.length) return false;
  return a.every(
    (tuple, i) =>
      tuple.length === b[i].length && tuple.every((v, j) => v === b[i][j]),
  );
}

function cellKey(cell: GridCell): string {
  return `${cell.r},${cell.c}`;
}

/** Content equality: axes and every measure value; provenance is not content. */
export function gridsEqual(a: Grid, b: Grid, relTol = 1e-9): boolean {
  if (!sameHeaders(a.rows, b.rows) || !sameHeaders(a.cols, b.cols)) return false;
  if (a.cells.length !== b.cells.length) return false;
  const other = new Map(b.cells.map((cell) => [cellKey(cell), cell.values]));
  for (const cell of a.cells) {
    const values = other.get(cellKey(cell));
    if (!values) return false;
    const names = Object.keys(cell.values);
    if (names.length !== Object.keys(values).length) return false;
    for (const name of names) {
      const got = values[name];
      if (got === undefined || !closeEnough(cell.values[name], got, relTol)) {
        return false;
      }
    }
  }
  return true;
}

/** All values of one measure, sorted; invariant under pivot re-layout. */
export function valueMultiset(grid: Grid, measure: string): number[] {
  const values: number[] = [];
  for (const cell of grid.cells) {
    const v = cell.values[measure];
    if (v !== undefined) values.push(v);
  }
  return values.sort((x, y) => x - y);
}
