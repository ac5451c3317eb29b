import { readFileSync } from "node:fs";
import Papa from "papaparse";

export interface Table {
  columns: string[];
  rows: Array<Record<string, number | null>>;
}

export class ChartInputError extends Error {}

/** Parse a treecast CSV and check it carries the required columns. */
export function parseCsv(text: string, required: string[]): Table {
  const parsed = Papa.parse<Record<string, unknown>>(text.trim(), {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new ChartInputError(`CSV parse error: ${parsed.errors[0].message}`);
  }
  const columns = parsed.meta.fields ?? [];
  for (const col of required) {
    if (!columns.includes(col)) {
      throw new ChartInputError(
        `missing column "${col}" (found: ${columns.join(", ") || "none"})`,
      );
    }
  }
  if (parsed.data.length === 0) {
    throw new ChartInputError("CSV has a header but no data rows");
  }
  const rows = parsed.data.map((raw) => {
    const row: Record<string, number | null> = {};
    for (const col of columns) {
      const v = raw[col];
      row[col] = typeof v === "number" && Number.isFinite(v) ? v : null;
    }
    return row;
  });
  return { columns, rows };
}

export function readCsvTable(path: string, required: string[]): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new ChartInputError(`cannot read ${path}: ${(err as Error).message}`);
  }
  return parseCsv(text, required);
}

/** Numeric column accessor; null cells are dropped in tandem across columns. */
export function numericColumns(table: Table, names: string[]): number[][] {
  const out: number[][] = names.map(() => []);
  for (const row of table.rows) {
    if (names.some((n) => row[n] === null)) continue;
    names.forEach((n, i) => out[i].push(row[n] as number));
  }
  if (out[0].length === 0) {
    throw new ChartInputError(`no complete rows for columns ${names.join(", ")}`);
  }
  return out;
}
