import { defineConfig } from "vite";

export default defineConfig({
  server: {
    proxy: {
      // the python service; `ruleforge serve --port 8787`
      "/api": "http://127.0.0.1:8787",
    },
  },
  test: {
    environment: "jsdom",
  },
});
