import { describe, expect, it } from "vitest";
import { diffGrid, gridStats, ratioGrid } from "../src/derive.js";

describe("ratioGrid", () => {
  it("is exactly one when numerator and denominator coincide", () => {
    const g = new Float32Array([0.5, 2, 40, 1e-3]);
    const z = ratioGrid(g, g);
    expect([...z]).toEqual([1, 1, 1, 1]);
  });

  it("masks cells whose denominator is insignificant", () => {
    const num = new Float32Array([1, 1, 1]);
    const den = new Float32Array([2, 0, 1e-12]);
    const z = ratioGrid(num, den);
    expect(z[0]).toBe(0.5);
    expect(Number.isNaN(z[1])).toBe(true);
    expect(Number.isNaN(z[2])).toBe(true); // below the relative floor
  });

  it("yields all-NaN against an all-zero denominator", () => {
    const z = ratioGrid(new Float32Array([1, 2]), new Float32Array([0, 0]));
    expect(Number.isNaN(z[0])).toBe(true);
    expect(Number.isNaN(z[1])).toBe(true);
  });

  it("rejects mismatched grids", () => {
    expect(() => ratioGrid(new Float32Array(3), new Float32Array(4))).toThrow(/sizes differ/);
  });
});

describe("diffGrid", () => {
  it("subtracts cellwise and propagates NaN", () => {
    const z2 = new Float32Array([3, NaN, 5]);
    const z1 = new Float32Array([1, 1, NaN]);
    const d = diffGrid(z2, z1);
    expect(d[0]).toBe(2);
    expect(Number.isNaN(d[1])).toBe(true);
    expect(Number.isNaN(d[2])).toBe(true);
  });
});

describe("gridStats", () => {
  it("ignores undefined cells", () => {
    const s = gridStats([NaN, 4, -1, NaN, 9]);
    expect(s).toEqual({ min: -1, max: 9, defined: 3 });
  });
});
