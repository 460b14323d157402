import { describe, expect, test } from "vitest";

import { comparePlans } from "../src/compare";
import type { PinnedPlan } from "../src/state";

function pin(timeToTarget: number | null, ped: number | null): PinnedPlan {
  return {
    label: "x",
    request: { engine: "b0" },
    forcedKnockouts: [],
    timeToTarget,
    ped,
    status: "done",
  };
}

describe("comparison tray", () => {
  test("a one-step improvement reads as minus one step", () => {
    expect(comparePlans(pin(10, null), pin(9, null)).steps).toBe("−1 step");
  });

  test("slower plans and ties", () => {
    expect(comparePlans(pin(10, null), pin(12, null)).steps).toBe("+2 steps");
    expect(comparePlans(pin(10, null), pin(10, null)).steps).toBe("same time");
  });

  test("ped deltas", () => {
    expect(comparePlans(pin(9, 0.0009), pin(9, 0.9486)).ped).toBe("+0.9477 PED");
    expect(comparePlans(pin(9, 0.95), pin(9, 0.95)).ped).toBe("same PED");
    expect(comparePlans(pin(9, null), pin(9, 0.95)).ped).toBe("n/a");
  });
});
