//! Embedded primal-dual interior-point method for the conic standard form.
//!
//! Solves `min <C,X> s.t. A(X) = b` over a product of PSD blocks, a
//! nonnegative orthant, and free scalars, with an HKM search direction and
//! Mehrotra predictor-corrector. The Schur complement is assembled per
//! connected component of the row/block incidence graph; columns that couple
//! components (shared scalars, free variables, scalar-only rows) are folded
//! into one small dense bordered system. This keeps the per-iteration cost
//! dominated by many small Cholesky factorizations instead of one large one.
//!
//! Free variables are handled natively (no splitting): their dual equations
//! `A_fᵀ y = c_f` enter the bordered system directly.

use crate::backend::linalg::{
    chol_inverse, chol_solve_in_place, cholesky, lu_factor, lu_solve, mat_mul, min_generalized_eig,
    sym_eigenvalues, Lu, Mat,
};
use crate::backend::{ConicStandardForm, Sense, SolveStatus, VarRef};
use crate::Scalar;

#[derive(Debug, Clone)]
pub struct IpmOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    pub step_fraction: T,
}

impl<T: Scalar> IpmOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        IpmOptions {
            tol,
            max_iter: 200,
            step_fraction: T::of(0.98),
        }
    }
}

/// Raw solver output in conic-form coordinates.
#[derive(Debug, Clone)]
pub struct ConicSolution<T> {
    pub status: SolveStatus,
    pub primal_objective: T,
    pub dual_objective: T,
    pub x_blocks: Vec<Mat<T>>,
    pub x_nonneg: Vec<T>,
    pub x_free: Vec<T>,
    pub y: Vec<T>,
    pub max_eq_residual: T,
    pub min_block_eigenvalue: T,
    pub iterations: usize,
}

pub fn solve<T: Scalar>(form: &ConicStandardForm<T>, opts: &IpmOptions<T>) -> ConicSolution<T> {
    Solver::new(form, opts.clone()).run()
}

const BORDER: usize = usize::MAX;

/// Relative static regularization added to the Schur factorizations.
const STATIC_REG: f64 = 2e-12;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum NnClass {
    Local(usize),
    BorderOnly,
    Global(usize),
}

struct Comp {
    rows: Vec<usize>,
    blocks: Vec<usize>,
    local_nonneg: Vec<usize>,
}

struct Solver<'a, T> {
    form: &'a ConicStandardForm<T>,
    opts: IpmOptions<T>,
    obj_sign: T,
    obj_scale: T,

    kept_rows: Vec<usize>,
    row_scale: Vec<T>,
    m: usize,

    // Sparse row data in scaled form.
    row_psd: Vec<Vec<(usize, usize, usize, T)>>,
    row_nn: Vec<Vec<(usize, T)>>,
    row_free: Vec<Vec<(usize, T)>>,
    rhs: Vec<T>,

    c_blocks: Vec<Mat<T>>,
    c_nn: Vec<T>,
    c_free: Vec<T>,

    nn_cols: Vec<Vec<(usize, T)>>,
    free_cols: Vec<Vec<(usize, T)>>,
    block_rows: Vec<Vec<usize>>,

    touched_block: Vec<bool>,
    touched_nn: Vec<bool>,
    touched_free: Vec<bool>,

    comp_of_row: Vec<usize>,
    comps: Vec<Comp>,
    border_rows: Vec<usize>,
    border_local: Vec<usize>,
    nn_class: Vec<NnClass>,
    global_nonneg: Vec<usize>,
}

struct Iterate<T> {
    x_blocks: Vec<Mat<T>>,
    z_blocks: Vec<Mat<T>>,
    u: Vec<T>,
    s: Vec<T>,
    f: Vec<T>,
    y: Vec<T>,
}

struct Residuals<T> {
    r_p: Vec<T>,
    r_d_blocks: Vec<Mat<T>>,
    r_du: Vec<T>,
    r_df: Vec<T>,
    pinf: T,
    dinf: T,
}

struct Factorization<T> {
    comp_chol: Vec<Mat<T>>,
    zinv: Vec<Mat<T>>,
    x_chol: Vec<Mat<T>>,
    t_cols: Vec<Vec<T>>,
    border_lu: Option<Lu<T>>,
    border_dim: usize,
}

struct Direction<T> {
    dx_blocks: Vec<Mat<T>>,
    dz_blocks: Vec<Mat<T>>,
    du: Vec<T>,
    ds: Vec<T>,
    df: Vec<T>,
    dy: Vec<T>,
}

impl<'a, T: Scalar> Solver<'a, T> {
    fn new(form: &'a ConicStandardForm<T>, opts: IpmOptions<T>) -> Self {
        let obj_sign = match form.sense {
            Sense::Minimize => T::one(),
            Sense::Maximize => -T::one(),
        };
        let nb = form.block_sizes.len();
        let nn = form.nonneg_len;
        let nf = form.free_len;

        let mut c_blocks: Vec<Mat<T>> = form
            .block_sizes
            .iter()
            .map(|&s| Mat::zeros(s, s))
            .collect();
        let mut c_nn = vec![T::zero(); nn];
        let mut c_free = vec![T::zero(); nf];
        let mut obj_scale = T::one();
        for (r, v) in &form.objective {
            obj_scale = obj_scale.max(v.abs());

            match *r {
                VarRef::Psd { block, i, j } => {
                    let m = &mut c_blocks[block as usize];
                    m.add_at(i as usize, j as usize, *v);
                    if i != j {
                        m.add_at(j as usize, i as usize, *v);
                    }
                }
                VarRef::Nonneg(k) => c_nn[k as usize] += *v,
                VarRef::Free(k) => c_free[k as usize] += *v,
            }
        }
        let sc = obj_sign / obj_scale;
        for m in &mut c_blocks {
            m.scale_in_place(sc);
        }
        c_nn.iter_mut().for_each(|v| *v *= sc);
        c_free.iter_mut().for_each(|v| *v *= sc);

        // Row filtering and equilibration.
        let tiny = T::of(1e-30);
        let mut kept_rows = Vec::new();
        let mut row_scale = Vec::new();
        let mut row_psd = Vec::new();
        let mut row_nn = Vec::new();
        let mut row_free = Vec::new();
        let mut rhs = Vec::new();
        let mut touched_block = vec![false; nb];
        let mut touched_nn = vec![false; nn];
        let mut touched_free = vec![false; nf];
        let mut infeasible_row = false;
        for (ridx, row) in form.rows.iter().enumerate() {
            let maxabs = row
                .iter()
                .fold(T::zero(), |acc, (_, v)| acc.max(v.abs()));
            if maxabs <= tiny {
                if form.rhs[ridx].abs() > T::of(1e-12) {
                    infeasible_row = true;
                }
                continue;
            }
            let scale = T::one() / maxabs;
            let mut psd = Vec::new();
            let mut nnv = Vec::new();
            let mut fre = Vec::new();
            for (r, v) in row {
                let v = *v * scale;
                match *r {
                    VarRef::Psd { block, i, j } => {
                        touched_block[block as usize] = true;
                        psd.push((block as usize, i as usize, j as usize, v));
                    }
                    VarRef::Nonneg(k) => {
                        touched_nn[k as usize] = true;
                        nnv.push((k as usize, v));
                    }
                    VarRef::Free(k) => {
                        touched_free[k as usize] = true;
                        fre.push((k as usize, v));
                    }
                }
            }
            kept_rows.push(ridx);
            row_scale.push(scale);
            row_psd.push(psd);
            row_nn.push(nnv);
            row_free.push(fre);
            rhs.push(form.rhs[ridx] * scale);
        }
        let m = kept_rows.len();

        let mut nn_cols = vec![Vec::new(); nn];
        let mut free_cols = vec![Vec::new(); nf];
        let mut block_rows = vec![Vec::new(); nb];
        for p in 0..m {
            for (k, v) in &row_nn[p] {
                nn_cols[*k].push((p, *v));
            }
            for (k, v) in &row_free[p] {
                free_cols[*k].push((p, *v));
            }
            let mut seen: Option<usize> = None;
            for (b, _, _, _) in &row_psd[p] {
                if seen != Some(*b) {
                    if !block_rows[*b].contains(&p) {
                        block_rows[*b].push(p);
                    }
                    seen = Some(*b);
                }
            }
        }

        let mut solver = Solver {
            form,
            opts,
            obj_sign,
            obj_scale,
            kept_rows,
            row_scale,
            m,
            row_psd,
            row_nn,
            row_free,
            rhs,
            c_blocks,
            c_nn,
            c_free,
            nn_cols,
            free_cols,
            block_rows,
            touched_block,
            touched_nn,
            touched_free,
            comp_of_row: Vec::new(),
            comps: Vec::new(),
            border_rows: Vec::new(),
            border_local: Vec::new(),
            nn_class: Vec::new(),
            global_nonneg: Vec::new(),
        };
        solver.partition();
        if infeasible_row {
            // Mark via an empty body; run() re-checks.
            solver.m = usize::MAX;
        }
        solver
    }

    /// Groups rows into connected components through shared PSD blocks;
    /// rows without PSD entries form the border.
    fn partition(&mut self) {
        let m = self.m;
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for rows in &self.block_rows {
            for w in rows.windows(2) {
                let a = find(&mut parent, w[0]);
                let b = find(&mut parent, w[1]);
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut comp_of_row = vec![BORDER; m];
        let mut comp_index: Vec<(usize, usize)> = Vec::new(); // (root, comp id)
        let mut comps: Vec<Comp> = Vec::new();
        let mut border_rows = Vec::new();
        let mut border_local = vec![BORDER; m];
        for p in 0..m {
            if self.row_psd[p].is_empty() {
                border_local[p] = border_rows.len();
                border_rows.push(p);
                continue;
            }
            let root = find(&mut parent, p);
            let cid = match comp_index.iter().find(|(r, _)| *r == root) {
                Some((_, c)) => *c,
                None => {
                    let c = comps.len();
                    comp_index.push((root, c));
                    comps.push(Comp {
                        rows: Vec::new(),
                        blocks: Vec::new(),
                        local_nonneg: Vec::new(),
                    });
                    c
                }
            };
            comp_of_row[p] = cid;
            comps[cid].rows.push(p);
        }
        for (b, rows) in self.block_rows.iter().enumerate() {
            if let Some(&p) = rows.first() {
                let cid = comp_of_row[p];
                comps[cid].blocks.push(b);
            }
        }

        let mut nn_class = Vec::with_capacity(self.nn_cols.len());
        let mut global_nonneg = Vec::new();
        for (k, col) in self.nn_cols.iter().enumerate() {
            let mut comp: Option<usize> = None;
            let mut any_border = false;
            let mut any_comp = false;
            for (p, _) in col {
                match comp_of_row[*p] {
                    BORDER => any_border = true,
                    c => {
                        any_comp = true;
                        if comp.is_none() {
                            comp = Some(c);
                        } else if comp != Some(c) {
                            comp = None;
                            any_border = true; // force global below
                        }
                    }
                }
            }
            let class = match (any_comp, any_border, comp) {
                (true, false, Some(c)) => {
                    comps[c].local_nonneg.push(k);
                    NnClass::Local(c)
                }
                (false, _, _) => NnClass::BorderOnly,
                _ => {
                    let g = global_nonneg.len();
                    global_nonneg.push(k);
                    NnClass::Global(g)
                }
            };
            nn_class.push(class);
        }

        self.comp_of_row = comp_of_row;
        self.comps = comps;
        self.border_rows = border_rows;
        self.border_local = border_local;
        self.nn_class = nn_class;
        self.global_nonneg = global_nonneg;
    }

    fn run(mut self) -> ConicSolution<T> {
        if self.m == usize::MAX {
            self.m = 0;
            return self.finish(SolveStatus::Infeasible, &self.fresh_iterate(T::one(), T::one()), 0);
        }
        // Structurally unbounded directions through untouched variables.
        let tiny = T::of(1e-12);
        for k in 0..self.c_free.len() {
            if !self.touched_free[k] && self.c_free[k].abs() > tiny {
                return self.finish(
                    SolveStatus::Unbounded,
                    &self.fresh_iterate(T::one(), T::one()),
                    0,
                );
            }
        }
        for k in 0..self.c_nn.len() {
            if !self.touched_nn[k] && self.c_nn[k] < -tiny {
                return self.finish(
                    SolveStatus::Unbounded,
                    &self.fresh_iterate(T::one(), T::one()),
                    0,
                );
            }
        }
        for b in 0..self.c_blocks.len() {
            if !self.touched_block[b] && self.form.block_sizes[b] > 0 {
                let eig = sym_eigenvalues(&self.c_blocks[b]);
                if eig.first().copied().unwrap_or(T::zero()) < -tiny {
                    return self.finish(
                        SolveStatus::Unbounded,
                        &self.fresh_iterate(T::one(), T::one()),
                        0,
                    );
                }
            }
        }

        let cone_dim: usize = self
            .active_blocks()
            .map(|b| self.form.block_sizes[b])
            .sum::<usize>()
            + self.active_nn().count();
        if self.m == 0 && cone_dim == 0 {
            return self.finish(SolveStatus::Optimal, &self.fresh_iterate(T::one(), T::one()), 0);
        }
        if cone_dim == 0 {
            // Pure free/equality problem: outside the supported cone surface.
            return self.finish(
                SolveStatus::NumericalFailure,
                &self.fresh_iterate(T::one(), T::one()),
                0,
            );
        }

        let (xi, eta) = self.initial_scales();
        let mut it = self.fresh_iterate(xi, eta);
        let nu = T::of(cone_dim as f64);

        let mut best: Option<(T, Iterate<T>, usize)> = None;
        let mut stall = 0usize;
        let tol = self.opts.tol;

        let trace = std::env::var_os("WASSOS_IPM_TRACE").is_some();
        for iter in 0..self.opts.max_iter {
            let res = self.residuals(&it);
            let pobj = self.primal_objective(&it);
            let dobj = self.dual_objective(&it);
            let gap = (pobj - dobj).abs() / (T::one() + pobj.abs() + dobj.abs());
            let worst = res.pinf.max(res.dinf).max(gap);
            if trace {
                eprintln!(
                    "iter {iter}: pobj {pobj:?} dobj {dobj:?} pinf {:?} dinf {:?} gap {gap:?}",
                    res.pinf, res.dinf
                );
            }
            if best
                .as_ref()
                .map_or(true, |(w, _, _)| worst < *w * T::of(0.99))
            {
                stall = 0;
            } else {
                stall += 1;
            }
            if best.as_ref().map_or(true, |(w, _, _)| worst < *w) {
                best = Some((worst, self.clone_iterate(&it), iter));
            }
            if stall >= 12 {
                if trace {
                    eprintln!("iter {iter}: no progress for {stall} iterations, stopping");
                }
                break;
            }
            // Numerical degradation: the iterate is walking away from the
            // best point reached; keep the best and stop.
            if best
                .as_ref()
                .map_or(false, |(w, _, _)| worst > *w * T::of(100.0))
            {
                if trace {
                    eprintln!("iter {iter}: diverging from best iterate, stopping");
                }
                break;
            }
            if res.pinf <= tol && res.dinf <= tol && gap <= tol {
                return self.finish(SolveStatus::Optimal, &it, iter);
            }
            if let Some(status) = self.detect_rays(&it, &res) {
                return self.finish(status, &it, iter);
            }

            let mu = self.complementarity(&it) / nu;
            let fact = match self.factorize(&it) {
                Some(f) => f,
                None => {
                    if trace {
                        eprintln!("iter {iter}: factorization failed, stopping");
                    }
                    break;
                }
            };

            // Predictor: aim at zero complementarity.
            let aff = match self.newton(&it, &res, &fact, None, mu, T::zero()) {
                Some(d) => d,
                None => break,
            };
            let (ap_aff, ad_aff) = self.step_lengths(&it, &aff, &fact);
            let mu_aff = self.trial_complementarity(&it, &aff, ap_aff, ad_aff) / nu;
            let ratio = (mu_aff / mu).max(T::zero()).min(T::one());
            // Extra centering once the iterate is nearly converged keeps the
            // late Schur systems from collapsing onto the boundary.
            let sigma_floor = if worst < T::of(1e-4) {
                T::of(0.05)
            } else {
                T::of(1e-8)
            };
            let sigma = (ratio * ratio * ratio).max(sigma_floor);

            // Corrector with second-order term; if its reconstructed
            // direction loses primal accuracy, retry with the plain
            // centering direction whose right-hand side avoids the large
            // cross products.
            let pinf_abs = res.r_p.iter().fold(T::zero(), |a, v| a.max(v.abs()));
            let bnorm = self.rhs.iter().fold(T::zero(), |a, v| a.max(v.abs()));
            let slack = T::of(0.3) * self.opts.tol * (T::one() + bnorm);
            let mut chosen: Option<(Direction<T>, T, T)> = None;
            'modes: for mode in 0..2 {
                let aff_term = if mode == 0 { Some(&aff) } else { None };
                let dir = match self.newton(&it, &res, &fact, aff_term.copied(), mu, sigma) {
                    Some(d) => d,
                    None => break,
                };
                let (mut ap, mut ad) = self.step_lengths(&it, &dir, &fact);
                for _ in 0..3 {
                    if ap < T::of(1e-10) && ad < T::of(1e-10) {
                        break;
                    }
                    let trial = self.trial_pinf(&it, &dir, ap);
                    let budget = (T::one() - ap * T::of(0.5)) * pinf_abs + slack;
                    if trace {
                        eprintln!(
                            "    mode {mode} ap {ap:?}: trial pinf {trial:?} budget {budget:?}"
                        );
                    }
                    if trial <= budget.max(pinf_abs) {
                        chosen = Some((dir, ap, ad));
                        break 'modes;
                    }
                    ap = ap * T::of(0.3);
                    ad = ad * T::of(0.3);
                }
            }
            let Some((dir, ap, ad)) = chosen else {
                if trace {
                    eprintln!("iter {iter}: no usable step, stopping");
                }
                break;
            };
            self.take_step(&mut it, &dir, ap, ad);
        }

        // Report the best iterate seen with an honest failure status.
        let (_, bit, biter) = best.unwrap_or((T::zero(), it, self.opts.max_iter));
        let res = self.residuals(&bit);
        if let Some(status) = self.detect_rays(&bit, &res) {
            return self.finish(status, &bit, biter);
        }
        self.finish(SolveStatus::NumericalFailure, &bit, self.opts.max_iter)
    }

    fn active_blocks(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.form.block_sizes.len()).filter(|&b| self.touched_block[b])
    }

    fn active_nn(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.c_nn.len()).filter(|&k| self.touched_nn[k])
    }

    fn fresh_iterate(&self, xi: T, eta: T) -> Iterate<T> {
        let x_blocks = self
            .form
            .block_sizes
            .iter()
            .enumerate()
            .map(|(b, &s)| {
                if self.touched_block[b] {
                    Mat::scaled_identity(s, xi)
                } else {
                    Mat::zeros(s, s)
                }
            })
            .collect();
        let z_blocks = self
            .form
            .block_sizes
            .iter()
            .enumerate()
            .map(|(b, &s)| {
                if self.touched_block[b] {
                    Mat::scaled_identity(s, eta)
                } else {
                    Mat::zeros(s, s)
                }
            })
            .collect();
        Iterate {
            x_blocks,
            z_blocks,
            u: self
                .touched_nn
                .iter()
                .map(|&t| if t { xi } else { T::zero() })
                .collect(),
            s: self
                .touched_nn
                .iter()
                .map(|&t| if t { eta } else { T::zero() })
                .collect(),
            f: vec![T::zero(); self.c_free.len()],
            y: vec![T::zero(); self.m],
        }
    }

    fn clone_iterate(&self, it: &Iterate<T>) -> Iterate<T> {
        Iterate {
            x_blocks: it.x_blocks.clone(),
            z_blocks: it.z_blocks.clone(),
            u: it.u.clone(),
            s: it.s.clone(),
            f: it.f.clone(),
            y: it.y.clone(),
        }
    }

    fn initial_scales(&self) -> (T, T) {
        let mut max_ratio = T::zero();
        let mut max_norm = T::zero();
        for p in 0..self.m {
            let mut norm = T::zero();
            for (_, i, j, v) in &self.row_psd[p] {
                let w = *v * *v;
                norm += if i == j { w } else { w + w };
            }
            for (_, v) in &self.row_nn[p] {
                norm += *v * *v;
            }
            for (_, v) in &self.row_free[p] {
                norm += *v * *v;
            }
            let norm = norm.sqrt();
            max_norm = max_norm.max(norm);
            max_ratio = max_ratio.max(self.rhs[p].abs() / (T::one() + norm));
        }
        let nmax = self
            .form
            .block_sizes
            .iter()
            .copied()
            .max()
            .unwrap_or(1)
            .max(1);
        let sqn = T::of(nmax as f64).sqrt();
        let cnorm = self
            .c_blocks
            .iter()
            .map(Mat::frobenius_norm)
            .fold(T::zero(), T::max)
            .max(self.c_nn.iter().fold(T::zero(), |a, v| a.max(v.abs())))
            .max(self.c_free.iter().fold(T::zero(), |a, v| a.max(v.abs())));
        let xi = T::of(10.0).max(sqn).max(T::of(nmax as f64) * max_ratio);
        let eta = T::of(10.0).max(sqn).max(max_norm).max(cnorm);
        (xi, eta)
    }

    // ---- linear operators ----

    fn apply_a(&self, it: &Iterate<T>) -> Vec<T> {
        let mut out = vec![T::zero(); self.m];
        for p in 0..self.m {
            out[p] = self.row_dot(p, &it.x_blocks, &it.u, &it.f);
        }
        out
    }

    fn row_dot(&self, p: usize, blocks: &[Mat<T>], u: &[T], f: &[T]) -> T {
        let two = T::of(2.0);
        let mut acc = T::zero();
        for (b, i, j, v) in &self.row_psd[p] {
            let x = blocks[*b].get(*i, *j);
            acc += if i == j { *v * x } else { two * *v * x };
        }
        for (k, v) in &self.row_nn[p] {
            acc += *v * u[*k];
        }
        for (k, v) in &self.row_free[p] {
            acc += *v * f[*k];
        }
        acc
    }

    /// Dense symmetric Σ_p y_p A_{p,b} for one block.
    fn mat_from_aty(&self, b: usize, y: &[T]) -> Mat<T> {
        let s = self.form.block_sizes[b];
        let mut m = Mat::zeros(s, s);
        for &p in &self.block_rows[b] {
            let yp = y[p];
            if yp == T::zero() {
                continue;
            }
            for (bb, i, j, v) in &self.row_psd[p] {
                if *bb != b {
                    continue;
                }
                m.add_at(*i, *j, yp * *v);
                if i != j {
                    m.add_at(*j, *i, yp * *v);
                }
            }
        }
        m
    }

    fn col_dot_y(col: &[(usize, T)], y: &[T]) -> T {
        col.iter().fold(T::zero(), |acc, (p, v)| acc + *v * y[*p])
    }

    fn residuals(&self, it: &Iterate<T>) -> Residuals<T> {
        let ax = self.apply_a(it);
        let mut r_p = vec![T::zero(); self.m];
        let mut pinf = T::zero();
        let mut bnorm = T::zero();
        for p in 0..self.m {
            r_p[p] = self.rhs[p] - ax[p];
            pinf = pinf.max(r_p[p].abs());
            bnorm = bnorm.max(self.rhs[p].abs());
        }
        pinf = pinf / (T::one() + bnorm);

        let mut dinf = T::zero();
        let mut r_d_blocks = Vec::with_capacity(self.c_blocks.len());
        for b in 0..self.c_blocks.len() {
            let s = self.form.block_sizes[b];
            if !self.touched_block[b] {
                r_d_blocks.push(Mat::zeros(s, s));
                continue;
            }
            let mut r = self.c_blocks[b].clone();
            let aty = self.mat_from_aty(b, &it.y);
            r.add_assign_scaled(&aty, -T::one());
            r.add_assign_scaled(&it.z_blocks[b], -T::one());
            dinf = dinf.max(r.max_abs());
            r_d_blocks.push(r);
        }
        let mut r_du = vec![T::zero(); self.c_nn.len()];
        for k in self.active_nn() {
            r_du[k] = self.c_nn[k] - Self::col_dot_y(&self.nn_cols[k], &it.y) - it.s[k];
            dinf = dinf.max(r_du[k].abs());
        }
        let mut r_df = vec![T::zero(); self.c_free.len()];
        for k in 0..self.c_free.len() {
            if !self.touched_free[k] {
                continue;
            }
            r_df[k] = self.c_free[k] - Self::col_dot_y(&self.free_cols[k], &it.y);
            dinf = dinf.max(r_df[k].abs());
        }
        let cnorm = self
            .c_blocks
            .iter()
            .map(Mat::max_abs)
            .fold(T::zero(), T::max)
            .max(self.c_nn.iter().fold(T::zero(), |a, v| a.max(v.abs())))
            .max(self.c_free.iter().fold(T::zero(), |a, v| a.max(v.abs())));
        dinf = dinf / (T::one() + cnorm);

        Residuals {
            r_p,
            r_d_blocks,
            r_du,
            r_df,
            pinf,
            dinf,
        }
    }

    fn complementarity(&self, it: &Iterate<T>) -> T {
        let mut total = T::zero();
        for b in self.active_blocks() {
            total += it.x_blocks[b].dot(&it.z_blocks[b]);
        }
        for k in self.active_nn() {
            total += it.u[k] * it.s[k];
        }
        total
    }

    fn primal_objective(&self, it: &Iterate<T>) -> T {
        let mut obj = T::zero();
        for b in self.active_blocks() {
            obj += self.c_blocks[b].dot(&it.x_blocks[b]);
        }
        for k in self.active_nn() {
            obj += self.c_nn[k] * it.u[k];
        }
        for k in 0..self.c_free.len() {
            obj += self.c_free[k] * it.f[k];
        }
        obj
    }

    fn dual_objective(&self, it: &Iterate<T>) -> T {
        self.rhs
            .iter()
            .zip(&it.y)
            .fold(T::zero(), |acc, (b, y)| acc + *b * *y)
    }

    // ---- infeasibility / unboundedness certificates ----

    fn detect_rays(&self, it: &Iterate<T>, res: &Residuals<T>) -> Option<SolveStatus> {
        let tol = self.opts.tol;
        let ray_tol = tol;
        // Dual improving ray => primal infeasible.
        let by = self.dual_objective(it);
        let ynorm = it.y.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        if by > T::of(1e-2) * (T::one() + ynorm) && res.pinf > tol {
            let inv = T::one() / by;
            let v: Vec<T> = it.y.iter().map(|&y| y * inv).collect();
            let mut ok = true;
            for b in self.active_blocks() {
                let aty = self.mat_from_aty(b, &v);
                let eig = sym_eigenvalues(&aty);
                if eig.last().copied().unwrap_or(T::zero()) > ray_tol {
                    ok = false;
                    break;
                }
            }
            if ok {
                for k in self.active_nn() {
                    if Self::col_dot_y(&self.nn_cols[k], &v) > ray_tol {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                for k in 0..self.c_free.len() {
                    if Self::col_dot_y(&self.free_cols[k], &v).abs() > ray_tol {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Some(SolveStatus::Infeasible);
            }
        }
        // Primal improving ray => unbounded (dual infeasible).
        let pobj = self.primal_objective(it);
        if pobj < -T::of(1e4) {
            let scale = -T::one() / pobj;
            let ax = self.apply_a(it);
            let axn = ax.iter().fold(T::zero(), |a, v| a.max(v.abs()));
            if axn * scale <= ray_tol {
                return Some(SolveStatus::Unbounded);
            }
        }
        None
    }

    // ---- Newton machinery ----

    fn factorize(&self, it: &Iterate<T>) -> Option<Factorization<T>> {
        let nb = self.form.block_sizes.len();
        let mut zinv = Vec::with_capacity(nb);
        let mut x_chol = Vec::with_capacity(nb);
        for b in 0..nb {
            if !self.touched_block[b] {
                zinv.push(Mat::zeros(0, 0));
                x_chol.push(Mat::zeros(0, 0));
                continue;
            }
            let zc = cholesky(&it.z_blocks[b])?;
            zinv.push(chol_inverse(&zc));
            x_chol.push(cholesky(&it.x_blocks[b])?);
        }

        // Component Schur blocks.
        let mut comp_chol = Vec::with_capacity(self.comps.len());
        for comp in &self.comps {
            let nr = comp.rows.len();
            let mut k = Mat::zeros(nr, nr);
            let local = |p: usize| comp.rows.binary_search(&p).unwrap();
            for &b in &comp.blocks {
                let size = self.form.block_sizes[b];
                let x = &it.x_blocks[b];
                let zi = &zinv[b];
                let mut v = Mat::zeros(size, size);
                let mut w = Mat::zeros(size, size);
                for (pi, &p) in self.block_rows[b].iter().enumerate() {
                    self.xa_into(b, p, x, &mut v);
                    mat_mul_local(&v, zi, &mut w);
                    let lp = local(p);
                    for &q in self.block_rows[b].iter().skip(pi) {
                        let lq = local(q);
                        let h = self.trace_dot(b, q, &w);
                        let (a, bb) = if lp <= lq { (lp, lq) } else { (lq, lp) };
                        k.add_at(a, bb, h);
                    }
                }
            }
            for &v in &comp.local_nonneg {
                let d = it.u[v] / it.s[v];
                let col = &self.nn_cols[v];
                for (ai, (p, ap)) in col.iter().enumerate() {
                    let lp = local(*p);
                    for (q, aq) in col.iter().skip(ai) {
                        let lq = local(*q);
                        let (a, bb) = if lp <= lq { (lp, lq) } else { (lq, lp) };
                        k.add_at(a, bb, d * *ap * *aq);
                    }
                }
            }
            for r in 0..nr {
                for c in (r + 1)..nr {
                    k.set(c, r, k.get(r, c));
                }
            }
            // Static regularization bounds the inverse near the central-path
            // limit; iterative refinement against the exact operator recovers
            // the lost digits.
            let reg = T::of(STATIC_REG)
                * (0..nr).fold(T::one(), |a, i| a.max(k.get(i, i).abs()));
            for i in 0..nr {
                k.add_at(i, i, reg);
            }
            comp_chol.push(self.factor_with_jitter(k)?);
        }

        // Border: T columns = K^{-1} applied to global nonneg / free columns.
        let ng = self.global_nonneg.len();
        let nf_active: Vec<usize> = (0..self.c_free.len())
            .filter(|&k| self.touched_free[k])
            .collect();
        let nfa = nf_active.len();
        let nbord = self.border_rows.len();
        let dim = nbord + ng + nfa;

        let mut t_cols: Vec<Vec<T>> = Vec::with_capacity(ng + nfa);
        for gi in 0..ng {
            let mut col = vec![T::zero(); self.m];
            for (p, v) in &self.nn_cols[self.global_nonneg[gi]] {
                if self.comp_of_row[*p] != BORDER {
                    col[*p] = *v;
                }
            }
            self.comp_solve(&comp_chol, &mut col);
            t_cols.push(col);
        }
        for &k in &nf_active {
            let mut col = vec![T::zero(); self.m];
            for (p, v) in &self.free_cols[k] {
                if self.comp_of_row[*p] != BORDER {
                    col[*p] = *v;
                }
            }
            self.comp_solve(&comp_chol, &mut col);
            t_cols.push(col);
        }

        let border_lu = if dim > 0 {
            let mut mmat = Mat::zeros(dim, dim);
            // Signed static regularization: the border system is symmetric
            // quasi-definite (+ on row block, − on column blocks).
            let breg = T::of(STATIC_REG);
            for i in 0..nbord {
                mmat.add_at(i, i, breg);
            }
            for i in nbord..dim {
                mmat.add_at(i, i, -breg);
            }
            // Border-only nonneg contributions on border rows.
            for (k, class) in self.nn_class.iter().enumerate() {
                if *class != NnClass::BorderOnly || !self.touched_nn[k] {
                    continue;
                }
                let d = it.u[k] / it.s[k];
                let col = &self.nn_cols[k];
                for (p, ap) in col {
                    let lp = self.border_local[*p];
                    for (q, aq) in col {
                        let lq = self.border_local[*q];
                        mmat.add_at(lp, lq, d * *ap * *aq);
                    }
                }
            }
            // Global columns on border rows.
            for gi in 0..ng {
                for (p, v) in &self.nn_cols[self.global_nonneg[gi]] {
                    if self.comp_of_row[*p] == BORDER {
                        let lp = self.border_local[*p];
                        mmat.add_at(lp, nbord + gi, *v);
                        mmat.add_at(nbord + gi, lp, *v);
                    }
                }
            }
            for (fi, &k) in nf_active.iter().enumerate() {
                for (p, v) in &self.free_cols[k] {
                    if self.comp_of_row[*p] == BORDER {
                        let lp = self.border_local[*p];
                        mmat.add_at(lp, nbord + ng + fi, *v);
                        mmat.add_at(nbord + ng + fi, lp, *v);
                    }
                }
            }
            // Lower-right: −D_G^{-1} − U_Pᵀ K^{-1} U_P over (global, free) columns.
            for gi in 0..ng {
                let k = self.global_nonneg[gi];
                mmat.add_at(nbord + gi, nbord + gi, -(it.s[k] / it.u[k]));
            }
            for a in 0..(ng + nfa) {
                let ta = &t_cols[a];
                for bidx in a..(ng + nfa) {
                    let colb = if bidx < ng {
                        &self.nn_cols[self.global_nonneg[bidx]]
                    } else {
                        &self.free_cols[nf_active[bidx - ng]]
                    };
                    let mut acc = T::zero();
                    for (p, v) in colb {
                        if self.comp_of_row[*p] != BORDER {
                            acc += *v * ta[*p];
                        }
                    }
                    mmat.add_at(nbord + a, nbord + bidx, -acc);
                    if a != bidx {
                        mmat.add_at(nbord + bidx, nbord + a, -acc);
                    }
                }
            }
            Some(lu_factor(&mmat)?)
        } else {
            None
        };

        Some(Factorization {
            comp_chol,
            zinv,
            x_chol,
            t_cols,
            border_lu,
            border_dim: dim,
        })
    }

    fn factor_with_jitter(&self, mut k: Mat<T>) -> Option<Mat<T>> {
        if let Some(c) = cholesky(&k) {
            return Some(c);
        }
        let n = k.rows();
        let maxdiag = (0..n).fold(T::zero(), |a, i| a.max(k.get(i, i).abs()));
        let mut jitter = T::of(1e-12) * maxdiag.max(T::one());
        for _ in 0..6 {
            for i in 0..n {
                k.add_at(i, i, jitter);
            }
            if let Some(c) = cholesky(&k) {
                return Some(c);
            }
            jitter = jitter * T::of(100.0);
        }
        None
    }

    /// `X_b · A_{p,b}` scattered from the sparse row entries.
    fn xa_into(&self, b: usize, p: usize, x: &Mat<T>, out: &mut Mat<T>) {
        out.fill(T::zero());
        let n = x.rows();
        for (bb, i, j, v) in &self.row_psd[p] {
            if *bb != b {
                continue;
            }
            for r in 0..n {
                out.add_at(r, *j, *v * x.get(r, *i));
            }
            if i != j {
                for r in 0..n {
                    out.add_at(r, *i, *v * x.get(r, *j));
                }
            }
        }
    }

    /// `tr(A_{q,b} · W)` with `A` symmetric sparse and `W` dense.
    fn trace_dot(&self, b: usize, q: usize, w: &Mat<T>) -> T {
        let mut acc = T::zero();
        for (bb, i, j, v) in &self.row_psd[q] {
            if *bb != b {
                continue;
            }
            if i == j {
                acc += *v * w.get(*i, *i);
            } else {
                acc += *v * (w.get(*i, *j) + w.get(*j, *i));
            }
        }
        acc
    }

    fn comp_solve(&self, comp_chol: &[Mat<T>], vec: &mut [T]) {
        let mut buf = Vec::new();
        for (cid, comp) in self.comps.iter().enumerate() {
            buf.clear();
            buf.extend(comp.rows.iter().map(|&p| vec[p]));
            chol_solve_in_place(&comp_chol[cid], &mut buf);
            for (i, &p) in comp.rows.iter().enumerate() {
                vec[p] = buf[i];
            }
        }
        // Border entries are handled by the bordered system, zero them here.
        for &p in &self.border_rows {
            vec[p] = T::zero();
        }
    }

    /// Applies the exact KKT operator `(H dy + A_f df, A_fᵀ dy)` at the
    /// current iterate; used for iterative refinement of the bordered solve.
    fn apply_kkt(
        &self,
        it: &Iterate<T>,
        fact: &Factorization<T>,
        dy: &[T],
        df: &[T],
    ) -> (Vec<T>, Vec<T>) {
        let mut out_y = vec![T::zero(); self.m];
        for b in self.active_blocks() {
            let aty = self.mat_from_aty(b, dy);
            let xm = mat_mul(&it.x_blocks[b], &aty);
            let w = mat_mul(&xm, &fact.zinv[b]);
            for &p in &self.block_rows[b] {
                out_y[p] += self.trace_dot(b, p, &w);
            }
        }
        for k in self.active_nn() {
            let d = it.u[k] / it.s[k];
            let ay = Self::col_dot_y(&self.nn_cols[k], dy);
            for (p, v) in &self.nn_cols[k] {
                out_y[*p] += *v * d * ay;
            }
        }
        let mut out_f = vec![T::zero(); self.c_free.len()];
        for k in 0..self.c_free.len() {
            if !self.touched_free[k] {
                continue;
            }
            for (p, v) in &self.free_cols[k] {
                out_y[*p] += *v * df[k];
            }
            out_f[k] = Self::col_dot_y(&self.free_cols[k], dy);
        }
        (out_y, out_f)
    }

    /// Bordered solve with iterative refinement: the Schur systems turn
    /// ill-conditioned near the central-path limit, and one or two refinement
    /// passes recover the digits the factorization loses.
    fn solve_kkt_refined(
        &self,
        it: &Iterate<T>,
        fact: &Factorization<T>,
        rhs_y: &[T],
        rhs_f: &[T],
    ) -> Option<(Vec<T>, Vec<T>)> {
        let (mut dy, mut df) = self.solve_kkt(fact, rhs_y, rhs_f)?;
        let scale = rhs_y
            .iter()
            .chain(rhs_f)
            .fold(T::zero(), |a, v| a.max(v.abs()))
            .max(T::one());
        let residual = |dy: &[T], df: &[T]| -> (Vec<T>, Vec<T>, T) {
            let (ay, af) = self.apply_kkt(it, fact, dy, df);
            let mut res_y = vec![T::zero(); self.m];
            let mut res_f = vec![T::zero(); self.c_free.len()];
            let mut worst = T::zero();
            for p in 0..self.m {
                res_y[p] = rhs_y[p] - ay[p];
                worst = worst.max(res_y[p].abs());
            }
            for k in 0..self.c_free.len() {
                res_f[k] = rhs_f[k] - af[k];
                worst = worst.max(res_f[k].abs());
            }
            (res_y, res_f, worst)
        };
        let (mut res_y, mut res_f, mut best_worst) = residual(&dy, &df);
        for _ in 0..6 {
            if best_worst <= T::epsilon() * T::of(16.0) * scale {
                break;
            }
            let (cy, cf) = self.solve_kkt(fact, &res_y, &res_f)?;
            let try_dy: Vec<T> = dy.iter().zip(&cy).map(|(d, c)| *d + *c).collect();
            let try_df: Vec<T> = df.iter().zip(&cf).map(|(d, c)| *d + *c).collect();
            let (try_ry, try_rf, try_worst) = residual(&try_dy, &try_df);
            // Keep corrections only while they actually reduce the residual.
            if try_worst >= best_worst {
                break;
            }
            dy = try_dy;
            df = try_df;
            res_y = try_ry;
            res_f = try_rf;
            best_worst = try_worst;
        }
        Some((dy, df))
    }

    /// Solves the bordered Newton system `H dy + A_f df = rhs_y`, `A_fᵀ dy = rhs_f`.
    fn solve_kkt(
        &self,
        fact: &Factorization<T>,
        rhs_y: &[T],
        rhs_f: &[T],
    ) -> Option<(Vec<T>, Vec<T>)> {
        let ng = self.global_nonneg.len();
        let nf_active: Vec<usize> = (0..self.c_free.len())
            .filter(|&k| self.touched_free[k])
            .collect();
        let nfa = nf_active.len();
        let nbord = self.border_rows.len();

        let mut t3 = rhs_y.to_vec();
        self.comp_solve(&fact.comp_chol, &mut t3);

        let mut dy = vec![T::zero(); self.m];
        let mut df = vec![T::zero(); self.c_free.len()];

        if fact.border_dim > 0 {
            let lu = fact.border_lu.as_ref()?;
            let mut rhs = vec![T::zero(); fact.border_dim];
            for (lb, &p) in self.border_rows.iter().enumerate() {
                rhs[lb] = rhs_y[p];
            }
            for gi in 0..ng {
                let col = &self.nn_cols[self.global_nonneg[gi]];
                let mut acc = T::zero();
                for (p, v) in col {
                    if self.comp_of_row[*p] != BORDER {
                        acc += *v * t3[*p];
                    }
                }
                rhs[nbord + gi] = -acc;
            }
            for (fi, &k) in nf_active.iter().enumerate() {
                let mut acc = T::zero();
                for (p, v) in &self.free_cols[k] {
                    if self.comp_of_row[*p] != BORDER {
                        acc += *v * t3[*p];
                    }
                }
                rhs[nbord + ng + fi] = rhs_f[k] - acc;
            }
            let z = lu_solve(lu, &rhs);
            for (lb, &p) in self.border_rows.iter().enumerate() {
                dy[p] = z[lb];
            }
            for p in 0..self.m {
                if self.comp_of_row[p] == BORDER {
                    continue;
                }
                let mut v = t3[p];
                for a in 0..(ng + nfa) {
                    v -= fact.t_cols[a][p] * z[nbord + a];
                }
                dy[p] = v;
            }
            for (fi, &k) in nf_active.iter().enumerate() {
                df[k] = z[nbord + ng + fi];
            }
        } else {
            dy.copy_from_slice(&t3);
        }
        Some((dy, df))
    }

    #[allow(clippy::too_many_arguments)]
    fn newton(
        &self,
        it: &Iterate<T>,
        res: &Residuals<T>,
        fact: &Factorization<T>,
        aff: Option<&Direction<T>>,
        mu: T,
        sigma: T,
    ) -> Option<Direction<T>> {
        let target = sigma * mu;
        let nb = self.form.block_sizes.len();

        // Complementarity residuals R_c per block and per nonneg entry.
        let mut r_c_blocks: Vec<Mat<T>> = Vec::with_capacity(nb);
        for b in 0..nb {
            let size = self.form.block_sizes[b];
            if !self.touched_block[b] {
                r_c_blocks.push(Mat::zeros(size, size));
                continue;
            }
            let mut rc = mat_mul(&it.x_blocks[b], &it.z_blocks[b]);
            rc.scale_in_place(-T::one());
            for i in 0..size {
                rc.add_at(i, i, target);
            }
            if let Some(aff) = aff {
                let corr = mat_mul(&aff.dx_blocks[b], &aff.dz_blocks[b]);
                rc.add_assign_scaled(&corr, -T::one());
            }
            r_c_blocks.push(rc);
        }
        let mut r_c_nn = vec![T::zero(); self.c_nn.len()];
        for k in self.active_nn() {
            r_c_nn[k] = target - it.u[k] * it.s[k];
            if let Some(aff) = aff {
                r_c_nn[k] -= aff.du[k] * aff.ds[k];
            }
        }

        // Right-hand side g = r_p − A((R_c − X R_d) Z^{-1}) − A_u((r_c − u r_du)/s).
        let mut g = res.r_p.clone();
        for b in self.active_blocks() {
            let mut tmp = r_c_blocks[b].clone();
            let xr = mat_mul(&it.x_blocks[b], &res.r_d_blocks[b]);
            tmp.add_assign_scaled(&xr, -T::one());
            let m = mat_mul(&tmp, &fact.zinv[b]);
            for &p in &self.block_rows[b] {
                g[p] -= self.trace_dot(b, p, &m);
            }
        }
        for k in self.active_nn() {
            let du_free = (r_c_nn[k] - it.u[k] * res.r_du[k]) / it.s[k];
            for (p, v) in &self.nn_cols[k] {
                g[*p] -= *v * du_free;
            }
        }

        let (dy, df) = self.solve_kkt_refined(it, fact, &g, &res.r_df)?;

        // Recover dZ, dX, ds, du.
        let mut dz_blocks = Vec::with_capacity(nb);
        let mut dx_blocks = Vec::with_capacity(nb);
        for b in 0..nb {
            let size = self.form.block_sizes[b];
            if !self.touched_block[b] {
                dz_blocks.push(Mat::zeros(size, size));
                dx_blocks.push(Mat::zeros(size, size));
                continue;
            }
            let mut dz = res.r_d_blocks[b].clone();
            let aty = self.mat_from_aty(b, &dy);
            dz.add_assign_scaled(&aty, -T::one());
            let mut tmp = r_c_blocks[b].clone();
            let xdz = mat_mul(&it.x_blocks[b], &dz);
            tmp.add_assign_scaled(&xdz, -T::one());
            let mut dx = mat_mul(&tmp, &fact.zinv[b]);
            dx.symmetrize();
            dz_blocks.push(dz);
            dx_blocks.push(dx);
        }
        let mut ds = vec![T::zero(); self.c_nn.len()];
        let mut du = vec![T::zero(); self.c_nn.len()];
        for k in self.active_nn() {
            ds[k] = res.r_du[k] - Self::col_dot_y(&self.nn_cols[k], &dy);
            du[k] = (r_c_nn[k] - it.u[k] * ds[k]) / it.s[k];
        }

        Some(Direction {
            dx_blocks,
            dz_blocks,
            du,
            ds,
            df,
            dy,
        })
    }

    fn step_lengths(&self, it: &Iterate<T>, dir: &Direction<T>, fact: &Factorization<T>) -> (T, T) {
        let frac = self.opts.step_fraction;
        let mut ap = T::one() / frac;
        let mut ad = T::one() / frac;
        for b in self.active_blocks() {
            let lam = min_generalized_eig(&fact.x_chol[b], &dir.dx_blocks[b]);
            if lam < T::zero() {
                ap = ap.min(-T::one() / lam);
            }
            // Z factor comes from the Z inverse path: refactor cheaply.
            if let Some(zc) = cholesky(&it.z_blocks[b]) {
                let lam = min_generalized_eig(&zc, &dir.dz_blocks[b]);
                if lam < T::zero() {
                    ad = ad.min(-T::one() / lam);
                }
            }
        }
        for k in self.active_nn() {
            if dir.du[k] < T::zero() {
                ap = ap.min(-it.u[k] / dir.du[k]);
            }
            if dir.ds[k] < T::zero() {
                ad = ad.min(-it.s[k] / dir.ds[k]);
            }
        }
        ((frac * ap).min(T::one()), (frac * ad).min(T::one()))
    }

    /// Max-norm primal residual after a trial primal step of length `ap`.
    fn trial_pinf(&self, it: &Iterate<T>, dir: &Direction<T>, ap: T) -> T {
        let mut worst = T::zero();
        for p in 0..self.m {
            let mut ax = self.row_dot(p, &it.x_blocks, &it.u, &it.f);
            ax += ap * self.row_dot(p, &dir.dx_blocks, &dir.du, &dir.df);
            worst = worst.max((self.rhs[p] - ax).abs());
        }
        worst
    }

    fn trial_complementarity(&self, it: &Iterate<T>, dir: &Direction<T>, ap: T, ad: T) -> T {
        let mut total = T::zero();
        for b in self.active_blocks() {
            let mut x = it.x_blocks[b].clone();
            x.add_assign_scaled(&dir.dx_blocks[b], ap);
            let mut z = it.z_blocks[b].clone();
            z.add_assign_scaled(&dir.dz_blocks[b], ad);
            total += x.dot(&z);
        }
        for k in self.active_nn() {
            total += (it.u[k] + ap * dir.du[k]) * (it.s[k] + ad * dir.ds[k]);
        }
        total
    }

    fn take_step(&self, it: &mut Iterate<T>, dir: &Direction<T>, ap: T, ad: T) {
        for b in self.active_blocks() {
            it.x_blocks[b].add_assign_scaled(&dir.dx_blocks[b], ap);
            it.z_blocks[b].add_assign_scaled(&dir.dz_blocks[b], ad);
        }
        for k in self.active_nn() {
            it.u[k] += ap * dir.du[k];
            it.s[k] += ad * dir.ds[k];
        }
        for k in 0..it.f.len() {
            it.f[k] += ap * dir.df[k];
        }
        for p in 0..self.m {
            it.y[p] += ad * dir.dy[p];
        }
    }

    fn finish(&self, status: SolveStatus, it: &Iterate<T>, iterations: usize) -> ConicSolution<T> {
        // Map back to original row indexing and undo scalings.
        let unscale = self.obj_scale * self.obj_sign;
        let mut y = vec![T::zero(); self.form.rows.len()];
        for (i, &orig) in self.kept_rows.iter().enumerate() {
            y[orig] = it.y[i] * self.row_scale[i] * self.obj_scale * self.obj_sign;
        }
        let ax = self.apply_a(it);
        let mut max_eq = T::zero();
        for p in 0..self.m {
            // Undo row equilibration for the reported residual.
            max_eq = max_eq.max((self.rhs[p] - ax[p]).abs() / self.row_scale[p]);
        }
        let mut min_eig = T::zero();
        for b in self.active_blocks() {
            let eig = sym_eigenvalues(&it.x_blocks[b]);
            if let Some(&e) = eig.first() {
                min_eig = min_eig.min(e);
            }
        }
        for k in self.active_nn() {
            min_eig = min_eig.min(it.u[k]);
        }
        ConicSolution {
            status,
            primal_objective: self.primal_objective(it) * unscale,
            dual_objective: self.dual_objective(it) * unscale,
            x_blocks: it.x_blocks.clone(),
            x_nonneg: it.u.clone(),
            x_free: it.f.clone(),
            y,
            max_eq_residual: max_eq,
            min_block_eigenvalue: min_eig,
            iterations,
        }
    }
}

fn mat_mul_local<T: Scalar>(a: &Mat<T>, b: &Mat<T>, out: &mut Mat<T>) {
    crate::backend::linalg::mat_mul_into(a, b, out);
}
