import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the integration suite boots a real cloud server process
    testTimeout: 20000,
    hookTimeout: 20000,
  },
});
