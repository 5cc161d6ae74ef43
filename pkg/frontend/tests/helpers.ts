import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { Contract, SessionState } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf-8")) as T;
}

export function fixtureText(name: string): string {
  return readFileSync(join(here, "fixtures", name), "utf-8");
}

export function contractFixture(): Contract {
  return fixture<Contract>("contract.json");
}

export function midrunState(): SessionState {
  return fixture<SessionState>("state_midrun.json");
}

export function finishedState(): SessionState {
  return fixture<SessionState>("state_finished.json");
}

export function repoContract(): Contract {
  // the frozen contract file the backend serves verbatim
  return JSON.parse(
    readFileSync(join(here, "..", "..", "contract", "session-api.json"), "utf-8"),
  ) as Contract;
}
