// Readers for the versioned CSV/JSON files the simulator emits.
// Every CSV starts with a "# becstrobe <kind> schema v1" comment line.

import { readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";
import Papa from "papaparse";

export const SCHEMA_VERSION = 1;

export interface Table {
  kind: string;
  path: string;
  columns: string[];
  rows: number[][];
}

const HEADER_RE = /^# becstrobe (\w+) schema v(\d+)\s*$/;

export function loadTable(path: string, expectedKind: string): Table {
  const text = readFileSync(path, "utf8");
  const newline = text.indexOf("\n");
  const first = newline < 0 ? text : text.slice(0, newline);
  const m = HEADER_RE.exec(first.trim());
  if (!m) {
    throw new Error(`${path}: missing "# becstrobe <kind> schema" header line`);
  }
  if (m[1] !== expectedKind) {
    throw new Error(`${path}: expected a ${expectedKind} csv, found ${m[1]}`);
  }
  if (Number(m[2]) !== SCHEMA_VERSION) {
    throw new Error(`${path}: schema v${m[2]} not supported (want v${SCHEMA_VERSION})`);
  }
  const parsed = Papa.parse<string[]>(text.slice(newline + 1), {
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new Error(`${path}: ${parsed.errors[0].message}`);
  }
  const data = parsed.data;
  if (data.length === 0) {
    throw new Error(`${path}: no header row`);
  }
  const columns = data[0];
  const rows = data.slice(1).map((cells) => cells.map(Number));
  if (rows.length === 0) {
    throw new Error(`${path}: empty ${expectedKind} (no data rows)`);
  }
  for (const row of rows) {
    if (row.length !== columns.length || row.some((v) => Number.isNaN(v))) {
      throw new Error(`${path}: malformed numeric row`);
    }
  }
  return { kind: expectedKind, path, columns, rows };
}

// all-or-nothing lookup so the error names every absent column at once
export function requireColumns(table: Table, names: string[]): number[] {
  const missing = names.filter((n) => !table.columns.includes(n));
  if (missing.length > 0) {
    throw new Error(
      `${table.path}: missing column(s) ${missing.join(", ")} in ${table.kind} csv`,
    );
  }
  return names.map((n) => table.columns.indexOf(n));
}

export function column(table: Table, name: string): number[] {
  const [idx] = requireColumns(table, [name]);
  return table.rows.map((r) => r[idx]);
}

export function columnsMatching(table: Table, re: RegExp): string[] {
  return table.columns.filter((c) => re.test(c));
}

export interface Metadata {
  schema_version: number;
  config: Record<string, unknown>;
  derived?: Record<string, unknown>;
  sweep?: Record<string, unknown>;
  [key: string]: unknown;
}

export function loadMetadata(dir: string): Metadata {
  const path = join(dir, "metadata.json");
  const meta = JSON.parse(readFileSync(path, "utf8")) as Metadata;
  if (meta.schema_version !== SCHEMA_VERSION) {
    throw new Error(`${path}: schema_version ${meta.schema_version} not supported`);
  }
  return meta;
}

// covariance snapshots are named covariance_t<zero padded time>.csv
export function covariancePaths(dir: string): string[] {
  return readdirSync(dir)
    .filter((f) => /^covariance_t[0-9.]+\.csv$/.test(f))
    .sort()
    .map((f) => join(dir, f));
}

export function latestCovariancePath(dir: string): string {
  const paths = covariancePaths(dir);
  if (paths.length === 0) {
    throw new Error(`${dir}: no covariance_t*.csv snapshot found`);
  }
  return paths[paths.length - 1];
}

export function loadCovariance(path: string): number[][] {
  const table = loadTable(path, "covariance");
  const n = table.columns.length;
  if (table.rows.length !== n) {
    throw new Error(`${path}: expected a square ${n}x${n} matrix`);
  }
  return table.rows;
}
