export { CHART_KINDS, EPS_C_D2, render, renderSvg } from "./charts";
export type { ChartKind, ChartSpec } from "./charts";
export { ChartInputError, numericColumns, parseCsv, readCsvTable } from "./csv";
export type { Table } from "./csv";
export { leastSquares, logLogFit } from "./fit";
export type { LineFit } from "./fit";
export { parseArgs, run } from "./cli";
