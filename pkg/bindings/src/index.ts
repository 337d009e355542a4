export { BindingValidationError, CliRunError } from "./errors.js";
export {
  headerCell,
  numberCell,
  parseCsv,
  parseNumber,
  toCsv,
  type ParsedCsv,
} from "./csv.js";
export {
  BoundReport,
  isSkipped,
  loadReport,
  parseReport,
  REPORT_VERSION,
  type EfficacyPayload,
  type GlobalPayload,
  type LocalPayload,
  type MetricFamily,
  type MetricValue,
  type ModelEntry,
  type ReportData,
  type RunConfigInfo,
  type SkipMarker,
  type SurrogatePayload,
} from "./report.js";
export {
  computeMetrics,
  type ComputeOptions,
  type RankAlignmentStrategy,
  type TaskKind,
} from "./compute.js";
