import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
    testTimeout: 30_000,
    hookTimeout: 60_000,
    // the contract suites share one spawned backend per file; keep files
    // sequential so two servers never race for the data directory
    fileParallelism: false,
  },
});
