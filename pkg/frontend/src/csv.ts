/**
 * Parser for the recparity sweep CSV:
 *
 *   sweep_param,sweep_value,dataset_id,model,metric,k,seed,replication,value,error
 *
 * Rows with a non-empty error field or a non-finite value are dropped (they
 * are flagged failures, not measurements).
 */

import { readFileSync } from "fs";

export interface SweepRow {
  sweepParam: string;
  sweepValue: number;
  datasetId: string;
  model: string;
  metric: string;
  k: number;
  seed: number;
  replication: number;
  value: number;
}

const REQUIRED = [
  "sweep_param",
  "sweep_value",
  "model",
  "metric",
  "replication",
  "value",
];

export function parseSweepCsv(path: string): SweepRow[] {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new Error(`cannot read CSV ${path}: ${(err as Error).message}`);
  }
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length < 1) {
    throw new Error(`${path}: empty CSV`);
  }
  const header = lines[0].split(",");
  const col = new Map(header.map((name, i) => [name, i]));
  for (const name of REQUIRED) {
    if (!col.has(name)) {
      throw new Error(`${path}: missing required column '${name}'`);
    }
  }
  const errorCol = col.get("error");
  const rows: SweepRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const fields = lines[i].split(",");
    if (fields.length < REQUIRED.length) {
      throw new Error(`${path}:${i + 1}: expected at least ${REQUIRED.length} fields`);
    }
    if (errorCol !== undefined && (fields[errorCol] ?? "") !== "") {
      continue;
    }
    const value = Number(fields[col.get("value")!]);
    if (!Number.isFinite(value)) {
      continue;
    }
    const sweepValue = Number(fields[col.get("sweep_value")!]);
    if (!Number.isFinite(sweepValue)) {
      throw new Error(`${path}:${i + 1}: sweep_value is not numeric`);
    }
    rows.push({
      sweepParam: fields[col.get("sweep_param")!],
      sweepValue,
      datasetId: fields[col.get("dataset_id") ?? -1] ?? "",
      model: fields[col.get("model")!],
      metric: fields[col.get("metric")!],
      k: Number(fields[col.get("k") ?? -1] ?? 0),
      seed: Number(fields[col.get("seed") ?? -1] ?? 0),
      replication: Number(fields[col.get("replication")!]),
      value,
    });
  }
  if (rows.length === 0) {
    throw new Error(`${path}: no usable measurement rows`);
  }
  return rows;
}

export function metricsIn(rows: SweepRow[]): Set<string> {
  return new Set(rows.map((r) => r.metric));
}

export function modelsIn(rows: SweepRow[]): string[] {
  return [...new Set(rows.map((r) => r.model))].sort();
}
