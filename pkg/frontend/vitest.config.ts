import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // One file at a time: the live-server test measures wall time and must
    // not compete with other workers for CPU.
    fileParallelism: false,
    // The live test boots a phantom volume and a real HTTP server.
    testTimeout: 120_000,
    hookTimeout: 180_000,
  },
});
