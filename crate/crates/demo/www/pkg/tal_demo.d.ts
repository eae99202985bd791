/* tslint:disable */
/* eslint-disable */

/**
 * A small training run on a two-dimensional version of the benchmark.
 */
export class Experiment {
    free(): void;
    [Symbol.dispose](): void;
    accuracy(): number;
    /**
     * AUROC for MSP then cosine, each over old_fd, ood_d, new_fd.
     */
    auroc(): Float64Array;
    /**
     * `mode` is one of `ce`, `logitnorm`, `fixed-t`, `tal`.
     */
    constructor(seed: bigint, mode: string, epochs: number, t_min: number, t_max: number);
    /**
     * Flattened `(x, y, domain, correct, cosine)` per test sample; domain
     * 0 = in-distribution, 1 = covariate shift, 2 = semantic shift.
     */
    points(): Float64Array;
}

/**
 * Failure-detection metrics of a scored ranking.
 */
export class Ranking {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Flattened `(coverage, risk)` pairs.
     */
    curve(): Float64Array;
    /**
     * Metric names, matching [`Ranking::values`].
     */
    static names(): string[];
    /**
     * `positive[i] != 0` marks sample `i` as accept-worthy.
     */
    constructor(scores: Float64Array, positive: Uint8Array);
    /**
     * Metric values; NaN where a metric is undefined for the set.
     */
    values(): Float64Array;
}

/**
 * Rows of `(tau, T(tau), tal_loss, combined_loss)` for `steps + 1` evenly
 * spaced typicalness values, flattened.
 */
export function loss_curve(logits: Float64Array, label: number, t_min: number, t_max: number, steps: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_experiment_free: (a: number, b: number) => void;
    readonly __wbg_ranking_free: (a: number, b: number) => void;
    readonly experiment_accuracy: (a: number) => number;
    readonly experiment_auroc: (a: number) => [number, number];
    readonly experiment_new: (a: bigint, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly experiment_points: (a: number) => [number, number];
    readonly loss_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly ranking_curve: (a: number) => [number, number];
    readonly ranking_names: () => [number, number];
    readonly ranking_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly ranking_values: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __externref_drop_slice: (a: number, b: number) => void;
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
