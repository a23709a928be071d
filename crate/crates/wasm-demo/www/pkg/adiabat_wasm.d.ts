/* tslint:disable */
/* eslint-disable */

/**
 * Noisy error against the noiseless long-run reference for the built-in
 * three-spin experiment: rows of `[M, wall_clock_s, trace_distance]` for
 * `M = 10, 15, …, m_max`.
 */
export function error_curve(t2_s: number, m_max: number): Float64Array;

/**
 * `[g_min, s_at_min, s_0, gap_0, s_1, gap_1, …]` for the top-two gap.
 */
export function gap_curve(nodes: Float64Array, edges: Float64Array, points: number): Float64Array;

/**
 * Eight payoffs followed by the eight greedy endpoints (as basis indices),
 * both indexed by start assignment.
 */
export function greedy_basins(nodes: Float64Array, edges: Float64Array, accept_equal: boolean): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly error_curve: (a: number, b: number) => [number, number, number, number];
    readonly gap_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly greedy_basins: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
