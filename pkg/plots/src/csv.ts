/**
 * Reader for the result CSVs the solver harness writes.
 *
 * The format is plain comma-separated text with a single header row; any
 * line starting with '#' is a comment (the harness echoes its config that
 * way) and is kept verbatim for provenance.  Values stay strings here;
 * numeric interpretation happens at the plot layer where the column's
 * meaning is known.
 */

export class PlotError extends Error {}

export interface CsvTable {
  comments: string[];
  header: string[];
  rows: Record<string, string>[];
}

export function parseCsv(text: string, name = "input"): CsvTable {
  const comments: string[] = [];
  let header: string[] | null = null;
  const rows: Record<string, string>[] = [];

  const lines = text.split(/\r?\n/);
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i]!;
    if (line.trim() === "") continue;
    if (line.startsWith("#")) {
      comments.push(line);
      continue;
    }
    const cells = line.split(",");
    if (header === null) {
      header = cells.map((c) => c.trim());
      continue;
    }
    if (cells.length !== header.length) {
      throw new PlotError(
        `${name}: line ${i + 1} has ${cells.length} fields, header has ${header.length}`
      );
    }
    const row: Record<string, string> = {};
    for (let j = 0; j < header.length; j++) row[header[j]!] = cells[j]!.trim();
    rows.push(row);
  }

  if (header === null) throw new PlotError(`${name}: no header row found`);
  return { comments, header, rows };
}

/** Throw one error naming every required column the table lacks. */
export function requireColumns(table: CsvTable, cols: string[], context: string): void {
  const missing = cols.filter((c) => !table.header.includes(c));
  if (missing.length > 0) {
    throw new PlotError(
      `missing column${missing.length > 1 ? "s" : ""} ${missing.join(", ")} (needed by ${context})`
    );
  }
}

/** Parse a cell as a finite number; blank cells are returned as null. */
export function numericCell(row: Record<string, string>, col: string): number | null {
  const raw = row[col];
  if (raw === undefined || raw === "") return null;
  const v = Number(raw);
  if (!Number.isFinite(v)) throw new PlotError(`column ${col}: not a number: '${raw}'`);
  return v;
}
