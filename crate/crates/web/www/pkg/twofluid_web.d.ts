/* tslint:disable */
/* eslint-disable */

/**
 * A scenario on an `n`×`n` mesh, stepped on demand.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Vertex values, row by row from the bottom edge, `(n+1)²` entries.
     */
    field(name: string): Float64Array;
    /**
     * Cells per side.
     */
    n(): number;
    constructor(scenario: string, n: number, dt: number);
    step(k: number): Float64Array;
}

export function closure(set: string, alpha_g: number, alpha_l: number): Float64Array;

export function pressure_law(set: string, phase: string, rho_min: number, rho_max: number, n: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly closure: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_field: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_n: (a: number) => number;
    readonly demo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly demo_step: (a: number, b: number) => [number, number, number, number];
    readonly pressure_law: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly __externref_table_alloc: () => number;
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
