export { CsvTable, PlotError, numericCell, parseCsv, requireColumns } from "./csv.js";
export { ChartSpec, Point, Series, decadeTicks, linearTicks, renderChart } from "./chart.js";
export { KINDS, PlotJob, PlotKind, renderJob, runJob } from "./plot.js";
