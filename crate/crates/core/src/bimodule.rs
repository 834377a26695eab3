//! The E–D bimodule Ξ of compactly supported functions on ℝ×𝕋.

use crate::algebra::{AlgebraElement, Flavor};
use crate::error::Result;
use crate::lattice::{div_floor, Grid, ScalarField};
use crate::scalar::{czero, Cx, PhaseTable, Real};

pub use crate::algebra::{trace_d, trace_e};

pub type ModuleVector<T> = ScalarField<T>;

fn ceil_div(a: i64, b: i64) -> i64 {
    -div_floor(-a, b)
}

/// `⟨f,g⟩_D(x,y,p) = Σ_k ē(ckp(y − p·sv/2))·f(x+k, y)·ḡ(x − p·su + k, y − p·sv)`.
pub fn inner_d<T: Real>(f: &ModuleVector<T>, g: &ModuleVector<T>) -> Result<AlgebraElement<T>> {
    let grid = *f.grid();
    grid.ensure_same(g.grid())?;
    let mut out = AlgebraElement::zero(Flavor::D, grid);
    if f.nx() == 0 || g.nx() == 0 {
        return Ok(out);
    }
    let (nxu, nsu, nsv, ny, c) = (grid.nx_unit(), grid.nsu(), grid.nsv(), grid.ny(), grid.c());
    let (fr, gr) = (f.x_range(), g.x_range());
    let phases = grid.half_phase_table::<T>();
    let p_lo = ceil_div(fr.start - (gr.end - 1), nsu);
    let p_hi = div_floor(fr.end - 1 - gr.start, nsu);
    for p in p_lo..=p_hi {
        let mut v = vec![czero::<T>(); (nxu * ny) as usize];
        let mut touched = false;
        for i in 0..nxu {
            let k_lo = ceil_div(fr.start - i, nxu);
            let k_hi = div_floor(fr.end - 1 - i, nxu);
            for k in k_lo..=k_hi {
                let (Some(frow), Some(grow)) = (f.row(i + k * nxu), g.row(i - p * nsu + k * nxu)) else {
                    continue;
                };
                touched = true;
                let dst = &mut v[(i * ny) as usize..][..ny as usize];
                for (j, d) in dst.iter_mut().enumerate() {
                    let j = j as i64;
                    let ph = phases.get(-c * k * p * (2 * j - p * nsv));
                    *d = *d + ph * frow[j as usize] * grow[grid.wrap_y(j - p * nsv)].conj();
                }
            }
        }
        if touched {
            out.insert(p, v);
        }
    }
    Ok(out)
}

/// `⟨f,g⟩_E(x,y,p) = Σ_k e(cpk(y − k·sv/2))·f̄(x − k·su, y − k·sv)·g(x − k·su + p, y − k·sv)`.
pub fn inner_e<T: Real>(f: &ModuleVector<T>, g: &ModuleVector<T>) -> Result<AlgebraElement<T>> {
    let grid = *f.grid();
    grid.ensure_same(g.grid())?;
    let mut out = AlgebraElement::zero(Flavor::E, grid);
    if f.nx() == 0 || g.nx() == 0 {
        return Ok(out);
    }
    let (nxu, nsu, nsv, ny, c) = (grid.nx_unit(), grid.nsu(), grid.nsv(), grid.ny(), grid.c());
    let (fr, gr) = (f.x_range(), g.x_range());
    let phases = grid.half_phase_table::<T>();
    let p_lo = ceil_div(gr.start - (fr.end - 1), nxu);
    let p_hi = div_floor(gr.end - 1 - fr.start, nxu);
    for p in p_lo..=p_hi {
        let mut v = vec![czero::<T>(); (nsu * ny) as usize];
        let mut touched = false;
        for i in 0..nsu {
            let k_lo = ceil_div(i - (fr.end - 1), nsu);
            let k_hi = div_floor(i - fr.start, nsu);
            for k in k_lo..=k_hi {
                let fi = i - k * nsu;
                let (Some(frow), Some(grow)) = (f.row(fi), g.row(fi + p * nxu)) else {
                    continue;
                };
                touched = true;
                let dst = &mut v[(i * ny) as usize..][..ny as usize];
                for (j, d) in dst.iter_mut().enumerate() {
                    let j = j as i64;
                    let jj = grid.wrap_y(j - k * nsv);
                    let ph = phases.get(c * p * k * (2 * j - k * nsv));
                    *d = *d + ph * frow[jj].conj() * grow[jj];
                }
            }
        }
        if touched {
            out.insert(p, v);
        }
    }
    Ok(out)
}

/// `⟨f,g⟩_D` at one grid point by the defining sum, without using the
/// invariance of the result. Used as an independent oracle.
pub fn inner_d_at<T: Real>(
    f: &ModuleVector<T>,
    g: &ModuleVector<T>,
    i: i64,
    j: i64,
    p: i64,
    phases: &PhaseTable<T>,
) -> Cx<T> {
    let grid = f.grid();
    let (nxu, nsu, nsv, c) = (grid.nx_unit(), grid.nsu(), grid.nsv(), grid.c());
    let fr = f.x_range();
    let mut acc = czero();
    if fr.is_empty() {
        return acc;
    }
    for k in ceil_div(fr.start - i, nxu)..=div_floor(fr.end - 1 - i, nxu) {
        let ph = phases.get(-c * k * p * (2 * j - p * nsv));
        acc = acc + ph * f.get(i + k * nxu, j) * g.get(i - p * nsu + k * nxu, j - p * nsv).conj();
    }
    acc
}

/// `⟨f,g⟩_E` at one grid point by the defining sum.
pub fn inner_e_at<T: Real>(
    f: &ModuleVector<T>,
    g: &ModuleVector<T>,
    i: i64,
    j: i64,
    p: i64,
    phases: &PhaseTable<T>,
) -> Cx<T> {
    let grid = f.grid();
    let (nxu, nsu, nsv, c) = (grid.nx_unit(), grid.nsu(), grid.nsv(), grid.c());
    let fr = f.x_range();
    let mut acc = czero();
    if fr.is_empty() {
        return acc;
    }
    for k in ceil_div(i - (fr.end - 1), nsu)..=div_floor(i - fr.start, nsu) {
        let ph = phases.get(c * p * k * (2 * j - k * nsv));
        let (fi, fj) = (i - k * nsu, j - k * nsv);
        acc = acc + ph * f.get(fi, fj).conj() * g.get(fi + p * nxu, fj);
    }
    acc
}

/// `(Ψ·f)(x,y) = Σ_q Ψ̄(x,y,q)·f(x+q, y)`.
pub fn act_left<T: Real>(psi: &AlgebraElement<T>, f: &ModuleVector<T>) -> Result<ModuleVector<T>> {
    psi.expect(Flavor::E)?;
    let grid = *f.grid();
    grid.ensure_same(psi.grid())?;
    let ps = psi.p_support();
    let (Some(&qmin), Some(&qmax)) = (ps.first(), ps.last()) else {
        return Ok(ScalarField::empty(grid));
    };
    if f.nx() == 0 {
        return Ok(ScalarField::empty(grid));
    }
    let nxu = grid.nx_unit();
    let x0 = f.x0() - qmax * nxu;
    let nx = (f.x_range().end - qmin * nxu - x0) as usize;
    let mut out = ScalarField::zeros(grid, x0, nx)?;
    accumulate(&grid, out.data_mut(), x0, nx, |i, row, phases| {
        for &q in &ps {
            let Some(frow) = f.row(i + q * nxu) else { continue };
            psi.eval_row(q, i, 0, phases, row.scratch);
            for ((d, s), v) in row.dst.iter_mut().zip(row.scratch.iter()).zip(frow) {
                *d = *d + s.conj() * *v;
            }
        }
    });
    Ok(out.trim())
}

/// `(g·Φ)(x,y) = Σ_q g(x + q·su, y + q·sv)·Φ̄(x + q·su, y + q·sv, q)`.
pub fn act_right<T: Real>(g: &ModuleVector<T>, phi: &AlgebraElement<T>) -> Result<ModuleVector<T>> {
    phi.expect(Flavor::D)?;
    let grid = *g.grid();
    grid.ensure_same(phi.grid())?;
    let ps = phi.p_support();
    let (Some(&qmin), Some(&qmax)) = (ps.first(), ps.last()) else {
        return Ok(ScalarField::empty(grid));
    };
    if g.nx() == 0 {
        return Ok(ScalarField::empty(grid));
    }
    let (nsu, nsv) = (grid.nsu(), grid.nsv());
    let x0 = g.x0() - qmax * nsu;
    let nx = (g.x_range().end - qmin * nsu - x0) as usize;
    let mut out = ScalarField::zeros(grid, x0, nx)?;
    accumulate(&grid, out.data_mut(), x0, nx, |i, row, phases| {
        for &q in &ps {
            let si = i + q * nsu;
            let Some(grow) = g.row(si) else { continue };
            phi.eval_row(q, si, q * nsv, phases, row.scratch);
            for j in 0..row.dst.len() {
                let gj = grow[grid.wrap_y(j as i64 + q * nsv)];
                row.dst[j] = row.dst[j] + gj * row.scratch[j].conj();
            }
        }
    });
    Ok(out.trim())
}

struct RowBuf<'a, T> {
    dst: &'a mut [Cx<T>],
    scratch: &'a mut [Cx<T>],
}

fn accumulate<T: Real>(
    grid: &Grid,
    data: &mut [Cx<T>],
    x0: i64,
    nx: usize,
    mut f: impl FnMut(i64, RowBuf<'_, T>, &PhaseTable<T>),
) {
    let ny = grid.ny() as usize;
    let phases = grid.half_phase_table();
    let mut scratch = vec![czero(); ny];
    for r in 0..nx {
        let dst = &mut data[r * ny..(r + 1) * ny];
        f(
            x0 + r as i64,
            RowBuf {
                dst,
                scratch: &mut scratch,
            },
            &phases,
        );
    }
}
