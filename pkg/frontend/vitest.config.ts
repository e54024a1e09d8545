import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 120_000,
    hookTimeout: 60_000,
    // one worker: the suite shares a spawned service and the corpus order matters
    pool: "threads",
    poolOptions: { threads: { singleThread: true } },
  },
});
