import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    port: 5173,
    proxy: {
      // forward API calls to the review service
      "/trials": { target: "http://127.0.0.1:8080", changeOrigin: true },
      "/export": { target: "http://127.0.0.1:8080", changeOrigin: true },
    },
  },
  test: {
    environment: "node",
    testTimeout: 120000,
    hookTimeout: 120000,
  },
});
