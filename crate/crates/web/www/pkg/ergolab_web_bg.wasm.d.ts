/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_tail_free: (a: number, b: number) => void;
export const hyperbolic_mask: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number, number];
export const intermittent_tail: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
export const orbit_scatter: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
export const tail_censored: (a: number) => number;
export const tail_chosen: (a: number) => [number, number];
export const tail_frac: (a: number) => [number, number];
export const tail_poly_r2: (a: number) => number;
export const tail_slope: (a: number) => number;
export const tail_stretched_r2: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
