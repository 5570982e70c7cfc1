import type { PaletteResponse, SceneRequest } from "./schema.js";
import { validateRequest } from "./schema.js";

export interface GeneratedImage {
  blob: Blob;
  seed: number;
  latencyMs: number;
  /** "WxH" as reported by the service. */
  imageSize: string;
}

export interface HealthResponse {
  status: string;
  model_loaded: boolean;
}

export interface ModelInfo {
  variant: string;
  image_size: [number, number];
  parameters: Record<string, number>;
  [key: string]: unknown;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: unknown,
  ) {
    super(`service returned ${status}: ${JSON.stringify(detail)}`);
    this.name = "ApiError";
  }
}

async function errorFrom(res: Response): Promise<ApiError> {
  let detail: unknown = res.statusText;
  try {
    detail = (await res.json()).detail ?? detail;
  } catch {
    // non-JSON error body, keep the status text
  }
  return new ApiError(res.status, detail);
}

/** Thin fetch wrapper around the generation service. */
export class GeneratorClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  /**
   * POST the scene to /generate and decode the PNG response.
   *
   * The body is validated client-side first so a bug in UI state surfaces
   * here rather than as a server 422. Pass an AbortSignal to cancel.
   */
  async generate(request: SceneRequest, signal?: AbortSignal): Promise<GeneratedImage> {
    const body = validateRequest(request);
    const res = await this.fetchFn(`${this.baseUrl}/generate`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
    if (!res.ok) throw await errorFrom(res);
    return {
      blob: await res.blob(),
      seed: Number(res.headers.get("X-Generation-Seed") ?? body.seed),
      latencyMs: Number(res.headers.get("X-Generation-Latency-Ms") ?? "0"),
      imageSize: res.headers.get("X-Image-Size") ?? "",
    };
  }

  async palette(): Promise<PaletteResponse> {
    const res = await this.fetchFn(`${this.baseUrl}/palette`);
    if (!res.ok) throw await errorFrom(res);
    return (await res.json()) as PaletteResponse;
  }

  async modelInfo(): Promise<ModelInfo> {
    const res = await this.fetchFn(`${this.baseUrl}/model-info`);
    if (!res.ok) throw await errorFrom(res);
    return (await res.json()) as ModelInfo;
  }

  async health(): Promise<HealthResponse> {
    const res = await this.fetchFn(`${this.baseUrl}/health`);
    if (!res.ok) throw await errorFrom(res);
    return (await res.json()) as HealthResponse;
  }
}
