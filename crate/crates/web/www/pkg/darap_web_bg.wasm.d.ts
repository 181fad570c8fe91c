/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_area_histogram: (a: number, b: number) => [number, number, number, number];
export const demo_area_stats: (a: number) => [number, number, number, number];
export const demo_axis_deviation: (a: number) => number;
export const demo_deform_cubify: (a: number, b: number) => [number, number];
export const demo_faces: (a: number) => [number, number];
export const demo_lambda: (a: number) => number;
export const demo_loss: (a: number) => number;
export const demo_n_faces: (a: number) => number;
export const demo_n_vertices: (a: number) => number;
export const demo_new: (a: number, b: number, c: number) => [number, number, number];
export const demo_optimize: (a: number, b: number) => [number, number, number];
export const demo_positions: (a: number) => [number, number];
export const demo_reset: (a: number) => void;
export const demo_set_lambda: (a: number, b: number) => [number, number];
export const demo_steps: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
