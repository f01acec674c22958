/* tslint:disable */
/* eslint-disable */

/**
 * Impact profile `ρ_j` for `|j| <= radius`.
 */
export function impact_profile(kappa: number, radius: number): Float64Array;

/**
 * Interface `Ξ*(τ)` of a lattice run, followed by the final `P` field as
 * `(ξ, p)` pairs; the first entry is the number of interface pairs.
 */
export function lattice_run(name: string, n: number, kappa: number): Float64Array;

/**
 * Stefan interface `Ξ(τ)` for a preset scenario.
 */
export function stefan_front(name: string, kappa: number, cells: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly impact_profile: (a: number, b: number) => [number, number, number, number];
    readonly lattice_run: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly stefan_front: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
