import { defineConfig } from "vitest/config";

// the dev server proxies API calls to a locally running service; the
// production build is served by the service itself (millguard serve --ui)
export default defineConfig({
  server: {
    proxy: {
      "/v1": "http://127.0.0.1:8077",
    },
  },
  build: {
    target: "es2022",
  },
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
  },
});
