/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_experiment_free: (a: number, b: number) => void;
export const __wbg_ranking_free: (a: number, b: number) => void;
export const experiment_accuracy: (a: number) => number;
export const experiment_auroc: (a: number) => [number, number];
export const experiment_new: (a: bigint, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const experiment_points: (a: number) => [number, number];
export const loss_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const ranking_curve: (a: number) => [number, number];
export const ranking_names: () => [number, number];
export const ranking_new: (a: number, b: number, c: number, d: number) => [number, number, number];
export const ranking_values: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_start: () => void;
