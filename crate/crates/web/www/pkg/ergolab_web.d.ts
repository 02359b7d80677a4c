/* tslint:disable */
/* eslint-disable */

/**
 * Expansion-time tail of the intermittent circle map.
 */
export class Tail {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly censored: number;
    readonly chosen: string;
    /**
     * `frac[n-1]` = fraction of starts with a finite `h ≥ n`.
     */
    readonly frac: Float64Array;
    readonly poly_r2: number;
    /**
     * Log-log slope of the polynomial fit (NaN if degenerate).
     */
    readonly slope: number;
    readonly stretched_r2: number;
}

/**
 * Hyperbolic-time mask along one orbit: entry `n - 1` is 1 when `n` is a
 * `σ`-hyperbolic time, followed by the running sums `S_n phi_cu` in a
 * second block of the same length.
 */
export function hyperbolic_mask(system: string, gamma: number, sigma: number, horizon: number, seed: bigint): Float64Array;

export function intermittent_tail(gamma: number, c_u: number, horizon: number, samples: number, seed: bigint): Tail;

/**
 * Planar projection of one orbit, flattened as `[x0, y0, x1, y1, …]`:
 * `(x1, x2)` on the torus, `(Re z, Im z)` on the solid torus and the
 * delay pair `(x_k, x_{k+1})` on the circle.
 */
export function orbit_scatter(system: string, gamma: number, points: number, seed: bigint): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_tail_free: (a: number, b: number) => void;
    readonly hyperbolic_mask: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number, number];
    readonly intermittent_tail: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
    readonly orbit_scatter: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly tail_censored: (a: number) => number;
    readonly tail_chosen: (a: number) => [number, number];
    readonly tail_frac: (a: number) => [number, number];
    readonly tail_poly_r2: (a: number) => number;
    readonly tail_slope: (a: number) => number;
    readonly tail_stretched_r2: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
