/**
 * Run-length codec for binary masks.
 *
 * A mask is flattened x-fastest (flat[i + nx*(j + ny*k)]) and encoded as
 * alternating run lengths, always starting with a run of zeros — so a mask
 * whose first voxel is set starts with a literal 0. The run lengths sum to
 * the total voxel count.
 */

/** Decode alternating zero-first run lengths into a dense 0/1 byte array. */
export function decodeRle(runs: readonly number[], numVoxels: number): Uint8Array {
  if (!Number.isInteger(numVoxels) || numVoxels < 0) {
    throw new RangeError(`voxel count must be a non-negative integer, got ${numVoxels}`);
  }
  const out = new Uint8Array(numVoxels);
  let pos = 0;
  let value = 0;
  for (const run of runs) {
    if (!Number.isInteger(run) || run < 0) {
      throw new RangeError(`run lengths must be non-negative integers, got ${run}`);
    }
    if (pos + run > numVoxels) {
      throw new RangeError(
        `run lengths overflow the volume: ${pos + run} > ${numVoxels} voxels`,
      );
    }
    if (value === 1) {
      out.fill(1, pos, pos + run);
    }
    pos += run;
    value ^= 1;
  }
  if (pos !== numVoxels) {
    throw new RangeError(`run lengths cover ${pos} voxels, expected ${numVoxels}`);
  }
  return out;
}

/** Number of set voxels in a decoded mask. */
export function countVoxels(mask: Uint8Array): number {
  let n = 0;
  for (let i = 0; i < mask.length; i++) {
    n += mask[i];
  }
  return n;
}
