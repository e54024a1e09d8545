/**
 * TypeScript bindings for the typokit HTTP service.
 *
 * The native library owns all randomness and file handling; this client
 * only moves UTF-8 strings and plain JSON maps across the boundary, so
 * results are byte-identical to native calls with the same seed. All
 * state is call-local: instances are safe to share across async tasks.
 */

/** Mirrors the native library version; checked against GET /version. */
export const VERSION = "0.1.0";

/** Typo generator names, in the native enum order. */
export const KIND_NAMES = [
  "RandInsert",
  "RandDelete",
  "RandSub",
  "SwapNeighbor",
  "SwapAdjacent",
] as const;

export type KindName = (typeof KIND_NAMES)[number];

/** Mirrors the native AugmentPolicy (probability, global_seed). */
export interface BoundPolicy {
  probability: number;
  globalSeed: number;
}

export interface PerturbationRecord {
  qid: string;
  kind: string;
  word_index: number;
  original_word: string;
  perturbed_word: string;
  seed: number;
}

export interface TransformResult {
  text: string;
  record: PerturbationRecord | null;
}

export interface AugmentStats {
  total: number;
  modified: number;
  unchanged_no_eligible: number;
  per_kind: Record<string, number>;
}

export class TypokitError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`typokit service returned ${status}: ${detail}`);
    this.name = "TypokitError";
  }
}

interface TransformResponseBody {
  query_id: string;
  query_text: string;
  modified: boolean;
  record: PerturbationRecord | null;
}

export class TypokitClient {
  constructor(readonly baseUrl: string) {}

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    let payload: unknown;
    try {
      payload = await response.json();
    } catch {
      payload = undefined;
    }
    if (!response.ok) {
      const detail =
        payload && typeof payload === "object" && "detail" in payload
          ? String((payload as { detail: unknown }).detail)
          : response.statusText;
      throw new TypokitError(response.status, detail);
    }
    return payload;
  }

  async health(): Promise<boolean> {
    try {
      await this.request("GET", "/health");
      return true;
    } catch {
      return false;
    }
  }

  async version(): Promise<{ name: string; version: string }> {
    return (await this.request("GET", "/version")) as { name: string; version: string };
  }

  async kinds(): Promise<string[]> {
    const body = (await this.request("GET", "/kinds")) as { kinds: string[] };
    return body.kinds;
  }

  /** One typo of the given kind in one word of the query; byte-identical to the native call. */
  async boundInjectTypo(
    queryId: string,
    queryText: string,
    kindName: string,
    seed: number,
  ): Promise<TransformResult> {
    const body = (await this.request("POST", "/typo/inject", {
      query_id: queryId,
      query_text: queryText,
      kind: kindName,
      seed,
    })) as TransformResponseBody;
    return { text: body.query_text, record: body.record };
  }

  /** The typos-aware policy applied to one query. */
  async boundTransform(
    queryId: string,
    queryText: string,
    policy: BoundPolicy,
  ): Promise<TransformResult> {
    const body = (await this.request("POST", "/typo/transform", {
      query_id: queryId,
      query_text: queryText,
      probability: policy.probability,
      seed: policy.globalSeed,
    })) as TransformResponseBody;
    return { text: body.query_text, record: body.record };
  }

  /**
   * The typos-aware policy applied to a whole query file (paths are on
   * the server's filesystem). The perturbation log lands next to the
   * output file unless logOut says otherwise.
   */
  async boundMapFile(
    queriesIn: string,
    queriesOut: string,
    policy: BoundPolicy,
    logOut?: string,
  ): Promise<AugmentStats> {
    return (await this.request("POST", "/augment/file", {
      queries_in: queriesIn,
      queries_out: queriesOut,
      log_out: logOut ?? `${queriesOut}.log.jsonl`,
      probability: policy.probability,
      seed: policy.globalSeed,
    })) as AugmentStats;
  }
}
