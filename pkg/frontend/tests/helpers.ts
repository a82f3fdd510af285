import { readFileSync } from "node:fs";
import path from "node:path";
import type { CreateSessionResponse, MessageResponse, SessionSnapshot } from "../src/wire.js";

export interface FixtureStep {
  text: string;
  message: MessageResponse;
  /** GET /state snapshot taken right after the message, for echo checks. */
  state: SessionSnapshot;
}

export interface Fixture {
  create: CreateSessionResponse;
  steps: FixtureStep[];
}

export function loadFixture(name: string): Fixture {
  // cwd-relative because the jsdom test environment rewrites import.meta.url
  const file = path.join(process.cwd(), "tests", "fixtures", `${name}.json`);
  return JSON.parse(readFileSync(file, "utf8")) as Fixture;
}
