import { writeFileSync } from "node:fs";
import * as echarts from "echarts";

import { ChartInputError, numericColumns, readCsvTable } from "./csv";
import { logLogFit } from "./fit";

export type ChartKind = "gap-loglog" | "sigma-band" | "skl-decay" | "gauss-trend";

export const CHART_KINDS: readonly ChartKind[] = [
  "gap-loglog",
  "sigma-band",
  "skl-decay",
  "gauss-trend",
];

/** Critical noise level of the binary tree, (1 - 2^-1/2) / 2. */
export const EPS_C_D2 = (1 - 1 / Math.SQRT2) / 2;

export interface ChartSpec {
  kind: ChartKind;
  inputs: string[];
  output: string;
  title?: string;
  /** shaded invariant interval [A, B], required by sigma-band */
  band?: [number, number];
  /** threshold used by gauss-trend to form the gap axis */
  epsC?: number;
}

const WIDTH = 800;
const HEIGHT = 560;

const BASE = {
  animation: false,
  backgroundColor: "#ffffff",
  grid: { left: 70, right: 30, top: 80, bottom: 60 },
};

function singleInput(spec: ChartSpec): string {
  if (spec.inputs.length !== 1) {
    throw new ChartInputError(`${spec.kind} takes exactly one input CSV`);
  }
  return spec.inputs[0];
}

function gapLoglogOption(spec: ChartSpec): echarts.EChartsOption {
  const table = readCsvTable(singleInput(spec), ["L", "gap"]);
  const [L, gap] = numericColumns(table, ["L", "gap"]);
  const fit = logLogFit(L, gap);
  const lo = Math.min(...L);
  const hi = Math.max(...L);
  const line = [lo, hi].map((x) => [
    x,
    Math.exp(fit.intercept + fit.slope * Math.log(x)),
  ]);
  return {
    ...BASE,
    title: {
      text: spec.title ?? "threshold gap vs alphabet size",
      subtext: `fitted slope = ${fit.slope.toFixed(2)} (r² = ${fit.r2.toFixed(3)})`,
      left: "center",
    },
    xAxis: { type: "log", name: "L" },
    yAxis: { type: "log", name: "eps_c - eps(L)" },
    series: [
      {
        type: "scatter",
        name: "scan",
        data: L.map((x, i) => [x, gap[i]]),
        symbolSize: 9,
      },
      {
        type: "line",
        name: "power-law fit",
        data: line,
        showSymbol: false,
        lineStyle: { type: "dashed" },
      },
    ],
  };
}

function sigmaBandOption(spec: ChartSpec): echarts.EChartsOption {
  if (!spec.band) {
    throw new ChartInputError("sigma-band needs the invariant interval --band A:B");
  }
  const [a, b] = spec.band;
  if (!(a < b)) {
    throw new ChartInputError(`band bounds must satisfy A < B, got [${a}, ${b}]`);
  }
  const table = readCsvTable(singleInput(spec), ["level", "sigma2"]);
  const [level, sigma2] = numericColumns(table, ["level", "sigma2"]);
  const top = Math.max(b, ...sigma2);
  return {
    ...BASE,
    title: { text: spec.title ?? "quantized-BP second moment", left: "center" },
    xAxis: { type: "value", name: "level" },
    yAxis: { type: "value", name: "sigma^2", max: 1.15 * top },
    series: [
      {
        type: "line",
        name: "sigma^2",
        data: level.map((x, i) => [x, sigma2[i]]),
        showSymbol: false,
        markArea: {
          silent: true,
          itemStyle: { color: "rgba(60, 140, 60, 0.18)" },
          data: [[{ yAxis: a }, { yAxis: b }]],
        },
        markLine: {
          silent: true,
          symbol: "none",
          lineStyle: { type: "dotted" },
          data: [{ yAxis: a, name: "A" }, { yAxis: b, name: "B" }],
        },
      },
    ],
  };
}

function sklDecayOption(spec: ChartSpec): echarts.EChartsOption {
  const table = readCsvTable(singleInput(spec), ["depth", "skl"]);
  const [depth, skl] = numericColumns(table, ["depth", "skl"]);
  return {
    ...BASE,
    title: { text: spec.title ?? "SKL decay with depth", left: "center" },
    xAxis: { type: "value", name: "depth", minInterval: 1 },
    yAxis: { type: "log", name: "SKL" },
    series: [
      {
        type: "line",
        name: "SKL",
        data: depth.map((x, i) => [x, skl[i]]),
        symbolSize: 8,
      },
    ],
  };
}

function gaussTrendOption(spec: ChartSpec): echarts.EChartsOption {
  const epsC = spec.epsC ?? EPS_C_D2;
  const table = readCsvTable(singleInput(spec), ["epsilon", "level", "w2_gauss"]);
  const [eps, level, w2] = numericColumns(table, ["epsilon", "level", "w2_gauss"]);
  // terminal level per epsilon
  const terminal = new Map<number, { level: number; w2: number }>();
  for (let i = 0; i < eps.length; i++) {
    const cur = terminal.get(eps[i]);
    if (!cur || level[i] > cur.level) {
      terminal.set(eps[i], { level: level[i], w2: w2[i] });
    }
  }
  const points = [...terminal.entries()]
    .map(([e, t]) => [epsC - e, t.w2])
    .sort((p, q) => p[0] - q[0]);
  if (points.some(([gap]) => gap <= 0)) {
    throw new ChartInputError("gauss-trend needs every epsilon below eps_c");
  }
  return {
    ...BASE,
    title: {
      text: spec.title ?? "distance to Gaussianity near the threshold",
      left: "center",
    },
    xAxis: { type: "value", name: "eps_c - eps" },
    yAxis: { type: "value", name: "W2 to fitted Gaussian" },
    series: [
      {
        type: "line",
        name: "W2",
        data: points,
        symbolSize: 9,
      },
    ],
  };
}

const BUILDERS: Record<ChartKind, (spec: ChartSpec) => echarts.EChartsOption> = {
  "gap-loglog": gapLoglogOption,
  "sigma-band": sigmaBandOption,
  "skl-decay": sklDecayOption,
  "gauss-trend": gaussTrendOption,
};

/** Renumber zrender's process-global instance/class counters so output is stable. */
function normalizeSvg(svg: string): string {
  // one zrender instance per render, so flattening its numeric prefix is safe
  const flat = svg.replace(/zr\d+-/g, "zr-");
  const seen = new Map<string, string>();
  return flat.replace(/zr-cls-\d+/g, (tok) => {
    let stable = seen.get(tok);
    if (stable === undefined) {
      stable = `zr-cls-${seen.size}`;
      seen.set(tok, stable);
    }
    return stable;
  });
}

/** Render the chart to an SVG string (no timestamps; re-rendering is stable). */
export function renderSvg(spec: ChartSpec): string {
  const builder = BUILDERS[spec.kind];
  if (!builder) {
    throw new ChartInputError(`unknown chart kind "${spec.kind}"`);
  }
  const option = builder(spec);
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: WIDTH,
    height: HEIGHT,
  });
  try {
    chart.setOption(option);
    return normalizeSvg(chart.renderToSVGString());
  } finally {
    chart.dispose();
  }
}

/** Render and write the SVG; returns the SVG text. */
export function render(spec: ChartSpec): string {
  const svg = renderSvg(spec);
  writeFileSync(spec.output, svg, "utf8");
  return svg;
}
