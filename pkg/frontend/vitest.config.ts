import { defineConfig } from "vitest/config";

export default defineConfig({
  resolve: {
    // Source modules import each other with browser-style ".js"
    // specifiers; map them back to the TypeScript files for the runner.
    alias: [{ find: /^(\.{1,2}\/.*)\.js$/, replacement: "$1" }],
  },
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
  },
});
