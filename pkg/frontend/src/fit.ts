export interface LineFit {
  slope: number;
  intercept: number;
  r2: number;
}

/** Ordinary least squares of y against x. */
export function leastSquares(x: number[], y: number[]): LineFit {
  const n = x.length;
  if (n < 2 || n !== y.length) {
    throw new Error("least squares needs two matching samples at minimum");
  }
  const mx = x.reduce((a, b) => a + b, 0) / n;
  const my = y.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx === 0) {
    throw new Error("degenerate fit: x has no spread");
  }
  const slope = sxy / sxx;
  const intercept = my - slope * mx;
  let ssRes = 0;
  let ssTot = 0;
  for (let i = 0; i < n; i++) {
    const pred = intercept + slope * x[i];
    ssRes += (y[i] - pred) * (y[i] - pred);
    ssTot += (y[i] - my) * (y[i] - my);
  }
  const r2 = ssTot === 0 ? 1 : 1 - ssRes / ssTot;
  return { slope, intercept, r2 };
}

/** Power-law fit: least squares on (log x, log y). */
export function logLogFit(x: number[], y: number[]): LineFit {
  if (x.some((v) => v <= 0) || y.some((v) => v <= 0)) {
    throw new Error("log-log fit needs positive values");
  }
  return leastSquares(x.map(Math.log), y.map(Math.log));
}
