/* tslint:disable */
/* eslint-disable */

export function bundled_potential(): string;

/**
 * Trapped-mode criterion of `potential_json` on `steps` values of ε between
 * `eps_min` and `eps_max` (logarithmic when `log`), below threshold `n`.
 * `sin_sigma` couples δ to ε as in the design; otherwise the stored δ is used.
 */
export function criterion_scan(potential_json: string, n: number, eps_min: number, eps_max: number, steps: number, log: boolean, sin_sigma: boolean): string;

/**
 * Positive-energy branches on `points` values of λ in `[−lambda_max, lambda_max]`;
 * the negative branches are their mirror images.
 */
export function dispersion(width: number, lambda_max: number, points: number, branches: number): string;

export function library_version(): string;

/**
 * `[{k, omega, eps0}, …]` for the first `count` thresholds.
 */
export function thresholds(width: number, count: number): string;

/**
 * Wave on an `nx × ny` grid over `[x0, x1] × [0, L]`, row-major in y.
 *
 * `quantity` is `density` (`Σ|w_k|²`), or `re_u`, `im_u`, `re_v`, `im_v`.
 * A negative `tau` selects `−`, zero means no direction label.
 */
export function wave_field(width: number, n: number, eps: number, family: string, j: number, tau: number, nx: number, ny: number, x0: number, x1: number, quantity: string): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bundled_potential: () => [number, number];
    readonly criterion_scan: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly dispersion: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly library_version: () => [number, number];
    readonly thresholds: (a: number, b: number) => [number, number, number, number];
    readonly wave_field: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number, l: number, m: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
