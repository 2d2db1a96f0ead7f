/** CSV loading against the experiment runner's column contract. */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

import { SchemaError } from "./spec.js";

export interface Table {
  columns: string[];
  rows: Record<string, string>[];
}

export function loadCsv(path: string): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new SchemaError(`cannot read CSV ${path}: ${(err as Error).message}`);
  }
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`malformed CSV ${path}: ${parsed.errors[0].message}`);
  }
  const columns = parsed.meta.fields ?? [];
  if (columns.length === 0 || parsed.data.length === 0) {
    throw new SchemaError(`CSV ${path} has no data rows`);
  }
  return { columns, rows: parsed.data };
}

export function requireColumns(table: Table, needed: string[], path: string): void {
  for (const col of needed) {
    if (!table.columns.includes(col)) {
      throw new SchemaError(`CSV ${path} is missing required column '${col}'`);
    }
  }
}

/** First nonempty value of a column, as a number, or null. */
export function fitColumn(table: Table, name: string): number | null {
  if (!table.columns.includes(name)) {
    return null;
  }
  for (const row of table.rows) {
    const v = row[name];
    if (v !== undefined && v !== "") {
      const num = Number(v);
      return Number.isFinite(num) ? num : null;
    }
  }
  return null;
}
