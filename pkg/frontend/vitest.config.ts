import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // The equivalence suite shells out to the engine CLI many times.
    testTimeout: 600_000,
    hookTimeout: 60_000,
    pool: "forks",
  },
});
