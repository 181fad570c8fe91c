/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Face counts per area-ratio bin over `[0, 3]`, plus a final overflow bin.
     */
    area_histogram(bins: number): Uint32Array;
    /**
     * `[mean, std]` of the per-face area ratios.
     */
    area_stats(): Float64Array;
    /**
     * One-shot deformation towards the nearest-axis normals.
     */
    deform_cubify(lambda: number): void;
    faces(): Uint32Array;
    /**
     * `shape` is `icosphere`, `organic` or `torus`; `detail` runs from 1 to 5.
     */
    constructor(shape: string, detail: number);
    /**
     * Runs `steps` optimizer updates and returns the loss afterwards.
     */
    optimize(steps: number): number;
    positions(): Float32Array;
    reset(): void;
    /**
     * Re-deforms with the optimized targets at a new strength.
     */
    set_lambda(lambda: number): void;
    readonly axis_deviation: number;
    readonly lambda: number;
    readonly loss: number;
    readonly n_faces: number;
    readonly n_vertices: number;
    readonly steps: number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_area_histogram: (a: number, b: number) => [number, number, number, number];
    readonly demo_area_stats: (a: number) => [number, number, number, number];
    readonly demo_axis_deviation: (a: number) => number;
    readonly demo_deform_cubify: (a: number, b: number) => [number, number];
    readonly demo_faces: (a: number) => [number, number];
    readonly demo_lambda: (a: number) => number;
    readonly demo_loss: (a: number) => number;
    readonly demo_n_faces: (a: number) => number;
    readonly demo_n_vertices: (a: number) => number;
    readonly demo_new: (a: number, b: number, c: number) => [number, number, number];
    readonly demo_optimize: (a: number, b: number) => [number, number, number];
    readonly demo_positions: (a: number) => [number, number];
    readonly demo_reset: (a: number) => void;
    readonly demo_set_lambda: (a: number, b: number) => [number, number];
    readonly demo_steps: (a: number) => number;
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
