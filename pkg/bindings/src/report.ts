import { readFileSync } from "node:fs";

import { BindingValidationError } from "./errors.js";

export const REPORT_VERSION = "eamex-report/1";

/** A metric the engine could not compute, with the reason it recorded. */
export interface SkipMarker {
  skipped: string;
}

export type MetricValue = number | SkipMarker;

export function isSkipped(value: MetricValue | undefined): value is SkipMarker {
  return typeof value === "object" && value !== null && "skipped" in value;
}

export interface RunConfigInfo {
  task: "classification" | "regression";
  seed: number;
  alpha: number;
  grid_size: number;
  interp_points: number;
  repeats: number;
  bootstraps: number;
  rank_alignment_strategy: string;
  explainers: { global: string; local: string };
  families: string[];
  n_samples: number;
  n_features: number;
  feature_names: string[];
  dataset_digest: string;
}

export interface EfficacyPayload {
  accuracy?: number;
  f1_macro?: number;
  mse?: number;
  rmse?: number;
  smape?: number;
}

export interface GlobalPayload {
  spread_divergence: MetricValue;
  alpha_score: MetricValue;
  fluctuation_ratio: MetricValue;
  rank_alignment: MetricValue;
  importance?: number[];
  per_feature_fluctuation?: (number | null)[];
  excluded_features?: string[];
  subgroups?: string[];
}

export interface LocalPayload {
  rank_consistency: MetricValue;
  rank_inconsistency: MetricValue;
  importance_stability: MetricValue;
  importance_instability: MetricValue;
  per_feature_consistency?: number[];
  per_feature_stability?: number[];
}

export interface SurrogatePayload {
  degradation: MetricValue;
  fidelity: MetricValue;
  feature_stability: MetricValue;
  selected_features?: string[];
  bootstrap_feature_sets?: string[][];
}

export interface ModelEntry {
  kind: string;
  predictions_digest: string;
  efficacy?: EfficacyPayload;
  global?: GlobalPayload;
  local?: LocalPayload;
  surrogate?: SurrogatePayload;
}

export interface ReportData {
  version: string;
  run_config: RunConfigInfo;
  reference_values: Record<string, number>;
  models: Record<string, ModelEntry>;
}

export type MetricFamily = "efficacy" | "global" | "local" | "surrogate";

/**
 * A parsed report that never lets go of the exact bytes the engine
 * produced: `raw` round-trips bit-identically, `data` is the typed view.
 */
export class BoundReport {
  readonly raw: string;
  readonly data: ReportData;

  constructor(raw: string) {
    this.raw = raw;
    let parsed: unknown;
    try {
      parsed = JSON.parse(raw);
    } catch (err) {
      throw new BindingValidationError(
        `report is not valid JSON: ${err instanceof Error ? err.message : String(err)}`,
      );
    }
    if (typeof parsed !== "object" || parsed === null) {
      throw new BindingValidationError("report must be a JSON object");
    }
    const data = parsed as ReportData;
    if (data.version !== REPORT_VERSION) {
      throw new BindingValidationError(
        `unsupported report version ${JSON.stringify(data.version)}; expected "${REPORT_VERSION}"`,
      );
    }
    if (typeof data.models !== "object" || data.models === null) {
      throw new BindingValidationError("report has no models section");
    }
    this.data = data;
  }

  modelNames(): string[] {
    return Object.keys(this.data.models);
  }

  model(name: string): ModelEntry {
    const entry = this.data.models[name];
    if (entry === undefined) {
      throw new BindingValidationError(
        `unknown model ${JSON.stringify(name)}; report has ${JSON.stringify(this.modelNames())}`,
      );
    }
    return entry;
  }

  /** One metric value (or its skip marker) out of a model's family payload. */
  metric(model: string, family: MetricFamily, key: string): MetricValue {
    const payload = this.model(model)[family];
    if (payload === undefined) {
      throw new BindingValidationError(
        `model ${JSON.stringify(model)} has no ${JSON.stringify(family)} family ` +
          `(families run: ${JSON.stringify(this.data.run_config.families)})`,
      );
    }
    const value = (payload as Record<string, unknown>)[key];
    if (value === undefined) {
      throw new BindingValidationError(
        `no metric ${JSON.stringify(key)} in the ${JSON.stringify(family)} family`,
      );
    }
    return value as MetricValue;
  }

  referenceValue(key: string): number {
    const value = this.data.reference_values[key];
    if (value === undefined) {
      throw new BindingValidationError(
        `no reference value named ${JSON.stringify(key)}`,
      );
    }
    return value;
  }
}

export function parseReport(text: string): BoundReport {
  return new BoundReport(text);
}

export function loadReport(path: string): BoundReport {
  return new BoundReport(readFileSync(path, "utf8"));
}
