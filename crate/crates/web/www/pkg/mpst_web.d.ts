/* tslint:disable */
/* eslint-disable */

/**
 * Checks `property` (`safe`, `deadlock-free`, `live`, or `all`) of the
 * environment in `src`.
 */
export function check_env(src: string, property: string, bound: number): string;

/**
 * Generates the centralized or decentralized FL session and environment
 * for `n` participants.
 */
export function generate_fl(kind: string, n: number): string;

/**
 * Runs a seeded random walk of the session in `src`.
 */
export function simulate_session(src: string, seed: number, steps: number, fair: boolean): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly check_env: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly generate_fl: (a: number, b: number, c: number) => [number, number];
    readonly simulate_session: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
