/**
 * Token scorers the adapter can serve. A model maps (prompt, generated
 * prefix, allowed token ids) to one finite log-score per allowed id.
 */

export interface ScoringModel {
  readonly name: string;
  score(prompt: string, prefix: number[], allowed: number[]): number[];
}

/** Flat scores: the engine's decode becomes equivalent to a uniform scorer. */
export class EchoModel implements ScoringModel {
  readonly name = "echo";

  score(_prompt: string, _prefix: number[], allowed: number[]): number[] {
    return allowed.map(() => 0.0);
  }
}

/**
 * Deterministic non-uniform scores, useful for exercising the protocol with
 * rankings that actually depend on the model: lower token ids score higher,
 * nudged by the prefix length so steps are distinguishable.
 */
export class RankBiasModel implements ScoringModel {
  readonly name = "rank-bias";

  score(_prompt: string, prefix: number[], allowed: number[]): number[] {
    return allowed.map((tok) => -(tok * 1e-3) - prefix.length * 1e-6);
  }
}

export function modelByName(name: string): ScoringModel {
  switch (name) {
    case "echo":
      return new EchoModel();
    case "rank-bias":
      return new RankBiasModel();
    default:
      throw new Error(`unknown model: ${name}`);
  }
}
