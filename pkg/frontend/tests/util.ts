/** Shared test helpers: a seeded PRNG and independent reference codecs. */

/** Deterministic 32-bit PRNG (mulberry32) so tests are reproducible. */
export function makeRng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randInt(rng: () => number, lo: number, hi: number): number {
  return lo + Math.floor(rng() * (hi - lo + 1));
}

/**
 * Reference RLE decoder, written independently of src/rle.ts: walk the runs,
 * pushing the alternating value (starting at 0) one voxel at a time.
 */
export function referenceDecode(runs: readonly number[], numVoxels: number): Uint8Array {
  const voxels: number[] = [];
  let value = 0;
  for (const run of runs) {
    for (let n = 0; n < run; n++) {
      voxels.push(value);
    }
    value = value === 0 ? 1 : 0;
  }
  if (voxels.length !== numVoxels) {
    throw new Error(`reference decode covered ${voxels.length} of ${numVoxels} voxels`);
  }
  return Uint8Array.from(voxels);
}

/** Reference RLE encoder: scan the mask, emitting run lengths, zero-run first. */
export function referenceEncode(mask: Uint8Array): number[] {
  if (mask.length === 0) {
    return [];
  }
  const runs: number[] = [];
  let expected = 0;
  let idx = 0;
  while (idx < mask.length) {
    let len = 0;
    while (idx + len < mask.length && mask[idx + len] === expected) {
      len++;
    }
    runs.push(len);
    idx += len;
    expected = expected === 0 ? 1 : 0;
  }
  return runs;
}

/** Random binary mask with geometric-ish run structure. */
export function randomMask(rng: () => number, size: number): Uint8Array {
  const mask = new Uint8Array(size);
  let value = rng() < 0.5 ? 0 : 1;
  let idx = 0;
  while (idx < size) {
    const run = randInt(rng, 1, 9);
    for (let n = 0; n < run && idx < size; n++, idx++) {
      mask[idx] = value;
    }
    value ^= 1;
  }
  return mask;
}
