import { BindingValidationError } from "./errors.js";

/**
 * Serialize one number for a CSV cell. `String(x)` emits the shortest
 * decimal that round-trips to the same double, so the engine parses the
 * exact value we hold in memory.
 */
export function numberCell(x: number, where: string): string {
  if (typeof x !== "number" || !Number.isFinite(x)) {
    throw new BindingValidationError(`${where} is not a finite number`);
  }
  return String(x);
}

export function headerCell(name: string, where: string): string {
  if (typeof name !== "string" || name.length === 0) {
    throw new BindingValidationError(`${where} must be a non-empty string`);
  }
  if (/[",\r\n]/.test(name)) {
    throw new BindingValidationError(
      `${where} must not contain commas, quotes, or newlines (got ${JSON.stringify(name)})`,
    );
  }
  return name;
}

export function toCsv(header: string[], rows: string[][]): string {
  const lines = [header.join(",")];
  for (const row of rows) {
    lines.push(row.join(","));
  }
  return lines.join("\n") + "\n";
}

export interface ParsedCsv {
  header: string[];
  rows: string[][];
}

/**
 * Minimal reader for the plain (unquoted) CSV files this package and
 * its fixtures produce. Quoted cells are out of scope and rejected.
 */
export function parseCsv(text: string, where: string): ParsedCsv {
  if (text.includes('"')) {
    throw new BindingValidationError(`${where}: quoted CSV cells are not supported`);
  }
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length < 2) {
    throw new BindingValidationError(`${where}: need a header row and at least one data row`);
  }
  const header = (lines[0] as string).split(",").map((cell) => cell.trim());
  const rows: string[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = (lines[i] as string).split(",");
    if (cells.length !== header.length) {
      throw new BindingValidationError(
        `${where}, line ${i + 1}: expected ${header.length} cells, got ${cells.length}`,
      );
    }
    rows.push(cells);
  }
  return { header, rows };
}

export function parseNumber(cell: string, where: string): number {
  const value = Number(cell);
  if (cell.trim() === "" || Number.isNaN(value)) {
    throw new BindingValidationError(`${where}: could not parse ${JSON.stringify(cell)} as a number`);
  }
  return value;
}
