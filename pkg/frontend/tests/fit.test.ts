import { describe, expect, it } from "vitest";

import { leastSquares, logLogFit } from "../src/fit";

describe("leastSquares", () => {
  it("recovers an exact line", () => {
    const x = [1, 2, 3, 4];
    const y = x.map((v) => 3 - 0.5 * v);
    const fit = leastSquares(x, y);
    expect(fit.slope).toBeCloseTo(-0.5, 12);
    expect(fit.intercept).toBeCloseTo(3, 12);
    expect(fit.r2).toBeCloseTo(1, 12);
  });

  it("r2 is 1 for a constant target", () => {
    expect(leastSquares([1, 2, 3], [2, 2, 2]).r2).toBe(1);
  });

  it("rejects degenerate x", () => {
    expect(() => leastSquares([1, 1], [2, 3])).toThrow(/no spread/);
  });
});

describe("logLogFit", () => {
  it("recovers a planted power law", () => {
    const L = [4, 8, 16, 32, 64, 128, 256];
    const gap = L.map((v) => v ** -2);
    const fit = logLogFit(L, gap);
    expect(fit.slope).toBeCloseTo(-2, 9);
    expect(fit.r2).toBeCloseTo(1, 9);
  });

  it("rejects nonpositive values", () => {
    expect(() => logLogFit([1, 2], [0, 1])).toThrow(/positive/);
  });
});
