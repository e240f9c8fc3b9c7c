import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    environment: 'node',
    include: ['tests/**/*.test.ts'],
    // the wizard flow test boots a real server and waits for sync state
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
