import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { headerCell, numberCell, toCsv } from "./csv.js";
import { BindingValidationError, CliRunError } from "./errors.js";
import { BoundReport } from "./report.js";

export type TaskKind = "classification" | "regression";
export type RankAlignmentStrategy = "mass_coverage" | "count_proportion";

export interface ComputeOptions {
  task: TaskKind;
  /** Column names for the feature matrix; defaults to f0, f1, ... */
  featureNames?: string[];
  targetName?: string;
  modelName?: string;
  /** Per-class scores, one row per sample (classification only). */
  probabilities?: number[][];
  alpha?: number;
  gridSize?: number;
  interpPoints?: number;
  repeats?: number;
  bootstraps?: number;
  rankAlignmentStrategy?: RankAlignmentStrategy;
  seed?: number;
  /** Path to the metrics CLI; defaults to $EAMEX_BIN, then "eamex". */
  eamexBin?: string;
}

function checkMatrix(matrix: number[][], field: string): { rows: number; cols: number } {
  if (!Array.isArray(matrix) || matrix.length === 0) {
    throw new BindingValidationError(`${field} must be a non-empty array of rows`);
  }
  const first = matrix[0];
  if (!Array.isArray(first) || first.length === 0) {
    throw new BindingValidationError(`${field}[0] must be a non-empty array`);
  }
  const cols = first.length;
  for (let i = 0; i < matrix.length; i++) {
    const row = matrix[i];
    if (!Array.isArray(row)) {
      throw new BindingValidationError(`${field}[${i}] must be an array`);
    }
    if (row.length !== cols) {
      throw new BindingValidationError(
        `${field}[${i}] has ${row.length} cells but row 0 has ${cols}`,
      );
    }
    for (let j = 0; j < cols; j++) {
      numberCell(row[j] as number, `${field}[${i}][${j}]`);
    }
  }
  return { rows: matrix.length, cols };
}

function checkVector(vector: number[], expected: number, field: string, against: string): void {
  if (!Array.isArray(vector)) {
    throw new BindingValidationError(`${field} must be an array of numbers`);
  }
  if (vector.length !== expected) {
    throw new BindingValidationError(
      `${field} has ${vector.length} entries but ${against}`,
    );
  }
  for (let i = 0; i < vector.length; i++) {
    numberCell(vector[i] as number, `${field}[${i}]`);
  }
}

function positiveInt(value: number | undefined, field: string): number | undefined {
  if (value === undefined) {
    return undefined;
  }
  if (typeof value !== "number" || !Number.isInteger(value) || value < 1) {
    throw new BindingValidationError(`${field} must be a positive integer`);
  }
  return value;
}

function resolveNames(nFeatures: number, options: ComputeOptions): {
  featureNames: string[];
  targetName: string;
} {
  let featureNames: string[];
  if (options.featureNames === undefined) {
    featureNames = Array.from({ length: nFeatures }, (_, j) => `f${j}`);
  } else {
    if (options.featureNames.length !== nFeatures) {
      throw new BindingValidationError(
        `options.featureNames has ${options.featureNames.length} names ` +
          `but features has ${nFeatures} columns`,
      );
    }
    featureNames = options.featureNames.map((name, j) =>
      headerCell(name, `options.featureNames[${j}]`),
    );
    const seen = new Set<string>();
    for (const name of featureNames) {
      if (seen.has(name)) {
        throw new BindingValidationError(
          `options.featureNames contains the duplicate name ${JSON.stringify(name)}`,
        );
      }
      seen.add(name);
    }
  }
  const targetName = headerCell(options.targetName ?? "target", "options.targetName");
  if (featureNames.includes(targetName)) {
    throw new BindingValidationError(
      `options.targetName ${JSON.stringify(targetName)} collides with a feature name`,
    );
  }
  return { featureNames, targetName };
}

function buildParams(options: ComputeOptions): Record<string, number | string> {
  const params: Record<string, number | string> = {};
  if (options.alpha !== undefined) {
    if (typeof options.alpha !== "number" || !Number.isFinite(options.alpha)) {
      throw new BindingValidationError("options.alpha must be a finite number");
    }
    params["alpha"] = options.alpha;
  }
  const gridSize = positiveInt(options.gridSize, "options.gridSize");
  if (gridSize !== undefined) {
    params["grid_size"] = gridSize;
  }
  const interpPoints = positiveInt(options.interpPoints, "options.interpPoints");
  if (interpPoints !== undefined) {
    params["interp_points"] = interpPoints;
  }
  const repeats = positiveInt(options.repeats, "options.repeats");
  if (repeats !== undefined) {
    params["repeats"] = repeats;
  }
  const bootstraps = positiveInt(options.bootstraps, "options.bootstraps");
  if (bootstraps !== undefined) {
    params["bootstraps"] = bootstraps;
  }
  if (options.rankAlignmentStrategy !== undefined) {
    if (
      options.rankAlignmentStrategy !== "mass_coverage" &&
      options.rankAlignmentStrategy !== "count_proportion"
    ) {
      throw new BindingValidationError(
        'options.rankAlignmentStrategy must be "mass_coverage" or "count_proportion"',
      );
    }
    params["rank_alignment_strategy"] = options.rankAlignmentStrategy;
  }
  return params;
}

function matrixCsv(header: string[], matrix: number[][], field: string): string {
  const rows = matrix.map((row, i) =>
    row.map((x, j) => numberCell(x, `${field}[${i}][${j}]`)),
  );
  return toCsv(header, rows);
}

/**
 * Run the full metric battery on in-memory arrays.
 *
 * The arrays are staged as CSV files in a temp directory, handed to the
 * metrics CLI as a frozen prediction-table model, and the CLI's JSON
 * report is returned verbatim. Because the serialized numbers round-trip
 * to the exact doubles held here, the result is byte-identical to running
 * the CLI on equivalent files directly.
 */
export function computeMetrics(
  features: number[][],
  target: number[],
  predictions: number[],
  localImportances: number[][] | null,
  globalImportance: number[] | null,
  options: ComputeOptions,
): BoundReport {
  if (options.task !== "classification" && options.task !== "regression") {
    throw new BindingValidationError(
      `options.task must be "classification" or "regression", got ${JSON.stringify(
        (options as { task: unknown }).task,
      )}`,
    );
  }
  const shape = checkMatrix(features, "features");
  checkVector(target, shape.rows, "target", `features has ${shape.rows} rows`);
  checkVector(predictions, shape.rows, "predictions", `features has ${shape.rows} rows`);

  let probShape: { rows: number; cols: number } | null = null;
  if (options.probabilities !== undefined) {
    if (options.task !== "classification") {
      throw new BindingValidationError(
        "options.probabilities only applies to classification tasks",
      );
    }
    probShape = checkMatrix(options.probabilities, "options.probabilities");
    if (probShape.rows !== shape.rows) {
      throw new BindingValidationError(
        `options.probabilities has ${probShape.rows} rows but features has ${shape.rows} rows`,
      );
    }
    if (probShape.cols < 2) {
      throw new BindingValidationError(
        "options.probabilities needs at least two class columns",
      );
    }
  }
  if (localImportances !== null) {
    const localShape = checkMatrix(localImportances, "localImportances");
    if (localShape.rows !== shape.rows) {
      throw new BindingValidationError(
        `localImportances has ${localShape.rows} rows but features has ${shape.rows} rows`,
      );
    }
    if (localShape.cols !== shape.cols) {
      throw new BindingValidationError(
        `localImportances rows have ${localShape.cols} cells but features has ${shape.cols} columns`,
      );
    }
  }
  if (globalImportance !== null) {
    checkVector(
      globalImportance,
      shape.cols,
      "globalImportance",
      `features has ${shape.cols} columns`,
    );
  }

  const { featureNames, targetName } = resolveNames(shape.cols, options);
  const modelName = options.modelName ?? "model";
  if (typeof modelName !== "string" || modelName.length === 0) {
    throw new BindingValidationError("options.modelName must be a non-empty string");
  }
  const params = buildParams(options);
  if (options.seed !== undefined) {
    if (typeof options.seed !== "number" || !Number.isInteger(options.seed) || options.seed < 0) {
      throw new BindingValidationError("options.seed must be a non-negative integer");
    }
  }

  const workDir = mkdtempSync(join(tmpdir(), "eamex-binding-"));
  try {
    const dataRows = features.map((row, i) => {
      const cells = row.map((x, j) => numberCell(x, `features[${i}][${j}]`));
      cells.push(numberCell(target[i] as number, `target[${i}]`));
      return cells;
    });
    writeFileSync(
      join(workDir, "data.csv"),
      toCsv([...featureNames, targetName], dataRows),
    );

    const predHeader = ["prediction"];
    if (probShape !== null) {
      for (let k = 0; k < probShape.cols; k++) {
        predHeader.push(`p${k}`);
      }
    }
    const predRows = predictions.map((value, i) => {
      const cells = [numberCell(value, `predictions[${i}]`)];
      if (probShape !== null) {
        const probRow = (options.probabilities as number[][])[i] as number[];
        for (let k = 0; k < probShape.cols; k++) {
          cells.push(numberCell(probRow[k] as number, `options.probabilities[${i}][${k}]`));
        }
      }
      return cells;
    });
    writeFileSync(join(workDir, "preds.csv"), toCsv(predHeader, predRows));

    const explainers: Record<string, string> = {};
    if (globalImportance !== null) {
      writeFileSync(
        join(workDir, "global.csv"),
        toCsv(featureNames, [
          globalImportance.map((x, j) => numberCell(x, `globalImportance[${j}]`)),
        ]),
      );
      explainers["global"] = "global.csv";
    }
    if (localImportances !== null) {
      writeFileSync(
        join(workDir, "local.csv"),
        matrixCsv(featureNames, localImportances, "localImportances"),
      );
      explainers["local"] = "local.csv";
    }

    const config: Record<string, unknown> = {
      dataset: { path: "data.csv", target: targetName, task: options.task },
      models: [{ name: modelName, kind: "table", predictions_path: "preds.csv" }],
    };
    if (Object.keys(explainers).length > 0) {
      config["explainers"] = explainers;
    }
    if (Object.keys(params).length > 0) {
      config["params"] = params;
    }
    if (options.seed !== undefined) {
      config["seed"] = options.seed;
    }
    const configPath = join(workDir, "config.json");
    writeFileSync(configPath, JSON.stringify(config, null, 2) + "\n");

    const reportPath = join(workDir, "report.json");
    const bin = options.eamexBin ?? process.env["EAMEX_BIN"] ?? "eamex";
    const result = spawnSync(
      bin,
      [
        "run",
        "--config",
        configPath,
        "--out-json",
        reportPath,
        "--out-table",
        join(workDir, "report.txt"),
      ],
      { encoding: "utf8", maxBuffer: 16 * 1024 * 1024 },
    );
    if (result.error !== undefined) {
      throw new CliRunError(
        `could not launch the metrics CLI ${JSON.stringify(bin)}: ${result.error.message}`,
        null,
        "",
      );
    }
    const stderr = result.stderr ?? "";
    if (result.status !== 0) {
      const detail = stderr.trim().length > 0 ? `: ${stderr.trim()}` : "";
      throw new CliRunError(
        `metrics CLI exited with status ${result.status}${detail}`,
        result.status,
        stderr,
      );
    }
    return new BoundReport(readFileSync(reportPath, "utf8"));
  } finally {
    rmSync(workDir, { recursive: true, force: true });
  }
}
