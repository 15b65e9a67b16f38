/* tslint:disable */
/* eslint-disable */

/**
 * Hull right-hand side for a single point.
 */
export function hull_rhs(d: Float64Array, x: Float64Array, z: Float64Array, one_sided: boolean): number;

/**
 * Right-hand side over a `res × res` grid of `(z₁, z₂) ∈ [0,1]²` for a
 * fixed two-dimensional `x`, row-major with `z₂` along rows. Infinite
 * values come back as `+∞`.
 */
export function hull_rhs_heatmap(d: Float64Array, x: Float64Array, res: number, one_sided: boolean): Float64Array;

/**
 * Samples `φ(1 − m)` together with the hinge and 0–1 losses over margins
 * `m ∈ [lo, hi]`. Output is `[m, φ, hinge, zero_one]` per sample.
 */
export function phi_curve(d: number, lambda: number, lo: number, hi: number, samples: number): Float64Array;

/**
 * Two-feature synthetic instance. Output is `[f₁, f₂, label]` per point,
 * followed by the Bayes direction `(d₁, d₂)`.
 */
export function scatter(_class: string, n: number, sigma: number, seed: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly hull_rhs: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly hull_rhs_heatmap: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly phi_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly scatter: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
