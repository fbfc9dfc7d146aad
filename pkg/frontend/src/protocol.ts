/** Message schemas for the teleop protocol (see ../../protocol.md). */

import { z } from "zod";

export const PROTOCOL_VERSION = 1;

const vec2 = z.tuple([z.number(), z.number()]);

// [label, weight, points] per mode, downsampled for rendering
const modeEntry = z.tuple([z.string(), z.number(), z.array(vec2)]);

export const helloMsg = z
  .object({
    type: z.literal("hello"),
    protocol_version: z.literal(PROTOCOL_VERSION),
    session: z.string().optional(),
  })
  .strict();

export const scenarioListMsg = z
  .object({
    type: z.literal("scenario_list"),
    protocol_version: z.literal(PROTOCOL_VERSION),
    session: z.string(),
    scenarios: z.array(z.string()),
  })
  .strict();

export const CONTROLLERS = [
  "linear-blend",
  "switching",
  "safeguarded-blend",
  "csc-most-likely",
  "gsc",
] as const;

export const startMsg = z
  .object({
    type: z.literal("start"),
    session: z.string(),
    scenario: z.string(),
    controller: z.enum(CONTROLLERS),
    seed: z.number().int().optional(),
    tick_hz: z.number().positive().max(1000).optional(),
    mode: z.enum(["realtime", "lockstep"]).optional(),
    paused: z.boolean().optional(),
  })
  .strict();

export const operatorInputMsg = z
  .object({
    type: z.literal("operator_input"),
    session: z.string(),
    vx: z.number(),
    vy: z.number(),
    step: z.number().int().nonnegative().optional(),
  })
  .strict();

export const configUpdateMsg = z
  .object({
    type: z.literal("config_update"),
    session: z.string(),
    channel: z
      .object({
        drop: z.number().optional(),
        lag: z.number().int().optional(),
        noise: z.number().optional(),
      })
      .strict()
      .optional(),
    controller: z.string().optional(),
    paused: z.boolean().optional(),
  })
  .strict();

export const resetMsg = z
  .object({ type: z.literal("reset"), session: z.string() })
  .strict();

export const stateSnapshotMsg = z
  .object({
    type: z.literal("state_snapshot"),
    protocol_version: z.literal(PROTOCOL_VERSION),
    session: z.string(),
    step: z.number().int().nonnegative(),
    robot: vec2,
    obstacles: z.array(z.tuple([z.string(), vec2, z.boolean()])),
    goal: vec2,
    u_h_raw: vec2.nullable(),
    u_h_delivered: vec2.nullable(),
    u_r: vec2,
    u_s: vec2,
    controller: z.string(),
    overrode: z.boolean(),
    operator_mode: z.string(),
    autonomy_mode: z.string(),
    mode_summary: z.object({
      operator: z.array(modeEntry),
      autonomy: z.array(modeEntry),
    }),
    metrics: z.object({
      path_length: z.number(),
      min_clearance: z.number().nullable(),
      collision: z.boolean(),
    }),
  })
  .strict();

export const runEndedMsg = z
  .object({
    type: z.literal("run_ended"),
    protocol_version: z.literal(PROTOCOL_VERSION),
    session: z.string(),
    reason: z.enum(["goal", "collision", "max-steps"]),
    metrics: z.record(z.string(), z.unknown()),
  })
  .strict();

export const errorMsg = z
  .object({
    type: z.literal("error"),
    protocol_version: z.literal(PROTOCOL_VERSION),
    session: z.string(),
    code: z.string(),
    reason: z.string(),
  })
  .strict();

/** Everything the server may send. */
export const serverMsg = z.discriminatedUnion("type", [
  helloMsg.extend({ session: z.string() }),
  scenarioListMsg,
  // start/config_update/reset acknowledgements echo the envelope
  z
    .object({
      type: z.literal("start"),
      protocol_version: z.literal(PROTOCOL_VERSION),
      session: z.string(),
      scenario: z.string(),
      controller: z.string(),
      seed: z.number().int(),
    })
    .strict(),
  z
    .object({
      type: z.literal("config_update"),
      protocol_version: z.literal(PROTOCOL_VERSION),
      session: z.string(),
      applied: z.boolean(),
    })
    .strict(),
  z
    .object({
      type: z.literal("reset"),
      protocol_version: z.literal(PROTOCOL_VERSION),
      session: z.string(),
    })
    .strict(),
  stateSnapshotMsg,
  runEndedMsg,
  errorMsg,
]);

/** Everything the client may send. */
export const clientMsg = z.discriminatedUnion("type", [
  helloMsg,
  startMsg,
  operatorInputMsg,
  configUpdateMsg,
  resetMsg,
]);

export type StateSnapshot = z.infer<typeof stateSnapshotMsg>;
export type ServerMessage = z.infer<typeof serverMsg>;
export type ClientMessage = z.infer<typeof clientMsg>;
