import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    globalSetup: ["./tests/setup.ts"],
    testTimeout: 180_000,
    hookTimeout: 180_000,
    // One shared edit service; run files sequentially against it.
    fileParallelism: false,
  },
});
