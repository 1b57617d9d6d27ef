import { defineConfig } from "vitest/config";

// Dev-time proxy to a locally running `safeshield serve` (default port).
export default defineConfig({
  server: {
    proxy: {
      "/api": "http://127.0.0.1:7878",
      "/ws": { target: "ws://127.0.0.1:7878", ws: true },
    },
  },
  build: { outDir: "dist" },
  test: {
    environment: "node",
    include: ["test/**/*.test.ts"],
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
