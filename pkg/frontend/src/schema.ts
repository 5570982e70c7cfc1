import { z } from "zod";

// Client-side mirror of the service's request schema. Anything rejected here
// would be a 422 on the server, so the UI refuses to send it.

export const PALETTE_NAMES = [
  "black",
  "white",
  "red",
  "lime",
  "blue",
  "yellow",
  "magenta",
  "gray",
] as const;

export const ENTITY_CLASSES = ["bus", "truck", "car", "person"] as const;

export type PaletteName = (typeof PALETTE_NAMES)[number];
export type EntityClassName = (typeof ENTITY_CLASSES)[number];

const unit = z.number().min(0).max(1);

// bbox is (center-x, center-y, w, h), all normalized to [0, 1]
export const BBoxSchema = z
  .tuple([unit, unit, unit, unit])
  .refine((b) => b[2] > 0 && b[3] > 0, {
    message: "bbox width and height must be positive",
  });

export const EntitySpecSchema = z.object({
  class: z.enum(ENTITY_CLASSES),
  bbox: BBoxSchema,
  color: z.union([
    z.enum(PALETTE_NAMES),
    z.tuple([z.number(), z.number(), z.number()]),
  ]),
});

const TIME_RE = /^([01]\d|2[0-3]):([0-5]\d)$/;

export const SceneRequestSchema = z
  .object({
    version: z.literal(1),
    entities: z.array(EntitySpecSchema),
    time_of_day: z.string().regex(TIME_RE, "time must be HH:MM (24h)").optional(),
    time_seconds: z.number().min(0).max(86400).optional(),
    seed: z.number().int(),
    variant: z.enum(["cluster", "discrete"]).optional(),
  })
  .refine((r) => (r.time_of_day === undefined) !== (r.time_seconds === undefined), {
    message: "provide exactly one of time_of_day or time_seconds",
  });

export type EntitySpec = z.infer<typeof EntitySpecSchema>;
export type SceneRequest = z.infer<typeof SceneRequestSchema>;

export interface PaletteResponse {
  names: string[];
  rgb: [number, number, number][];
}

export function validateRequest(body: unknown): SceneRequest {
  return SceneRequestSchema.parse(body);
}
