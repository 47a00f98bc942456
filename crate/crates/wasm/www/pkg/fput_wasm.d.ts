/* tslint:disable */
/* eslint-disable */

/**
 * Both branches of the essential spectrum, `re+, im+, re-, im-` per sample.
 */
export function essential_curves(omega: number, a: number, c: number, samples: number): Float64Array;

/**
 * `[delta, xi, alpha, beta]` for the inverse monomial of order `m`.
 */
export function scaling(m: number, omega: number): Float64Array;

/**
 * Exact wave sampled at `samples` points of `[-1.5, 1.5]`, laid out as
 * `x, R, V/ω, x, R, V/ω, ...`.
 */
export function wave_profile(m: number, omega: number, samples: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly essential_curves: (a: number, b: number, c: number, d: number) => [number, number];
    readonly scaling: (a: number, b: number) => [number, number, number, number];
    readonly wave_profile: (a: number, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
