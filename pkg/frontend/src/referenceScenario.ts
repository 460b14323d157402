import type { ScenarioDoc } from "./types";

/**
 * The bundled four-sensor example: a 13x13 mesh, two agents on the left,
 * the target on the right behind four radius-2.4 sensors. Generated from
 * the planning service's canonical serializer; keep in sync with
 * `sentinel gen --reference`.
 */
export const REFERENCE_SCENARIO: ScenarioDoc = {
  "agents": [
    {
      "confusion_cooldown": null,
      "confusion_cost": 1.0,
      "confusion_duration": 10,
      "confusion_dwell": null,
      "id": 1,
      "knockout_cooldown": null,
      "knockout_cost": 1.0,
      "knockout_duration": 10,
      "knockout_dwell": null,
      "start": [
        1,
        2
      ]
    },
    {
      "confusion_cooldown": null,
      "confusion_cost": 1.0,
      "confusion_duration": 10,
      "confusion_dwell": null,
      "id": 2,
      "knockout_cooldown": null,
      "knockout_cost": 1.0,
      "knockout_duration": 10,
      "knockout_dwell": null,
      "start": [
        5,
        1
      ]
    }
  ],
  "budget": 0.0,
  "confusion_factor": 0.1,
  "exit_target": null,
  "forced_knockouts": [],
  "horizon": 10,
  "knockout_radius": 3.0,
  "mesh": {
    "blocked": [],
    "cols": 13,
    "rows": 13,
    "target": [
      6,
      10
    ]
  },
  "mode": "min-time",
  "omega": 2,
  "required_ped": null,
  "sensors": [
    {
      "id": 1,
      "position": [
        5.5,
        2.598076211353316
      ],
      "radius": 2.4
    },
    {
      "id": 2,
      "position": [
        5.0,
        5.196152422706632
      ],
      "radius": 2.4
    },
    {
      "id": 3,
      "position": [
        6.0,
        6.928203230275509
      ],
      "radius": 2.4
    },
    {
      "id": 4,
      "position": [
        5.5,
        4.330127018922193
      ],
      "radius": 2.4
    }
  ],
  "version": 1
};
