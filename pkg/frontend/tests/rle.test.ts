import { describe, expect, it } from "vitest";

import { countVoxels, decodeRle } from "../src/rle.js";
import { makeRng, randInt, randomMask, referenceDecode, referenceEncode } from "./util.js";

describe("decodeRle basics", () => {
  it("decodes an empty volume from no runs", () => {
    expect(decodeRle([], 0)).toEqual(new Uint8Array(0));
  });

  it("decodes an all-background volume from a single zero-run", () => {
    const out = decodeRle([60], 60);
    expect(out.length).toBe(60);
    expect(countVoxels(out)).toBe(0);
  });

  it("decodes an all-object volume from a leading empty zero-run", () => {
    const out = decodeRle([0, 24], 24);
    expect(countVoxels(out)).toBe(24);
  });

  it("decodes an interior run: [1, 2, 1] -> 0 1 1 0", () => {
    expect(Array.from(decodeRle([1, 2, 1], 4))).toEqual([0, 1, 1, 0]);
  });

  it("starts with the object when the zero-run is explicit zero", () => {
    expect(Array.from(decodeRle([0, 1, 7], 8))).toEqual([1, 0, 0, 0, 0, 0, 0, 0]);
  });

  it("handles zero-length runs mid-stream", () => {
    // zero-run 2, object 0, zero-run 1, object 3
    expect(Array.from(decodeRle([2, 0, 1, 3], 6))).toEqual([0, 0, 0, 1, 1, 1]);
  });
});

describe("decodeRle validation", () => {
  it("rejects runs that cover too few voxels", () => {
    expect(() => decodeRle([3], 4)).toThrow(/cover 3/);
  });

  it("rejects runs that cover too many voxels", () => {
    expect(() => decodeRle([3, 2], 4)).toThrow(/overflow/);
  });

  it("rejects negative run lengths", () => {
    expect(() => decodeRle([2, -1, 3], 4)).toThrow(/non-negative/);
  });

  it("rejects fractional run lengths", () => {
    expect(() => decodeRle([1.5, 2.5], 4)).toThrow(/non-negative integers/);
  });

  it("rejects a negative voxel count", () => {
    expect(() => decodeRle([], -1)).toThrow(/non-negative integer/);
  });
});

describe("decodeRle vs reference decoder", () => {
  it("matches the reference decoder on 10 random masks", () => {
    const rng = makeRng(20260819);
    for (let trial = 0; trial < 10; trial++) {
      const size = randInt(rng, 1, 4000);
      const mask = randomMask(rng, size);
      const runs = referenceEncode(mask);

      const decoded = decodeRle(runs, size);
      expect(decoded).toEqual(referenceDecode(runs, size));
      expect(decoded).toEqual(mask);
      expect(countVoxels(decoded)).toBe(mask.reduce((a, b) => a + b, 0));
    }
  });

  it("matches the reference on run lists with embedded zero-length runs", () => {
    const rng = makeRng(7);
    for (let trial = 0; trial < 10; trial++) {
      const nRuns = randInt(rng, 1, 12);
      const runs: number[] = [];
      for (let r = 0; r < nRuns; r++) {
        runs.push(randInt(rng, 0, 6));
      }
      const total = runs.reduce((a, b) => a + b, 0);
      expect(decodeRle(runs, total)).toEqual(referenceDecode(runs, total));
    }
  });
});
