/** Minimal numeric-CSV reader for the experiment logs.
 *
 * The logs are plain comma-separated numbers with a single header row
 * (no quoting, no embedded commas), so a hand-rolled parser keeps the
 * figure tool dependency-free.
 */

export interface Table {
  columns: string[];
  /** column name -> values, all rows parsed as numbers */
  data: Map<string, number[]>;
  rows: number;
}

export class CsvError extends Error {}

export function parseCsv(text: string): Table {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new CsvError("empty CSV: no header row");
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  if (new Set(columns).size !== columns.length) {
    throw new CsvError("duplicate column names in header");
  }
  const data = new Map<string, number[]>(columns.map((c) => [c, []]));
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== columns.length) {
      throw new CsvError(
        `row ${i}: expected ${columns.length} cells, got ${cells.length}`,
      );
    }
    for (let j = 0; j < columns.length; j++) {
      const v = Number(cells[j]);
      if (!Number.isFinite(v)) {
        throw new CsvError(`row ${i}, column ${columns[j]}: not a number: ${cells[j]}`);
      }
      data.get(columns[j])!.push(v);
    }
  }
  return { columns, data, rows: lines.length - 1 };
}

/** Fetch a column, with a descriptive error naming what is available. */
export function getColumn(table: Table, name: string): number[] {
  const col = table.data.get(name);
  if (col === undefined) {
    throw new CsvError(
      `missing column ${name}; available: ${table.columns.join(", ")}`,
    );
  }
  return col;
}

/** Fetch a column and require at least one data row. */
export function getNonEmptyColumn(table: Table, name: string): number[] {
  const col = getColumn(table, name);
  if (col.length === 0) {
    throw new CsvError(`column ${name} has no data rows`);
  }
  return col;
}
