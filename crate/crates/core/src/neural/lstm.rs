//! Bidirectional LSTM with exact backpropagation through time over padded,
//! time-major batches.
//!
//! Gate blocks are stacked in the order input, forget, output, candidate:
//! rows `[0, H)`, `[H, 2H)`, `[2H, 3H)`, `[3H, 4H)` of `W` (`4H x D`), `U`
//! (`4H x H`) and `b` (`1 x 4H`).
//!
//! At padded steps the hidden and cell states are forced to zero, so the
//! reverse-direction cell of a short sequence starts from a zero state at its
//! own last frame and never sees padding.

use rand::Rng;

use super::tensor::{gemm, MatRef};
use super::{BatchLayout, Param, Tensor2};
use crate::error::{AaiError, Result};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone)]
struct CellCache {
    input: Tensor2,
    /// Activated gates (i, f, o, g) per row.
    gates: Tensor2,
    /// tanh of the unmasked new cell state.
    tanh_c: Tensor2,
    /// Masked states after each step.
    h: Tensor2,
    c: Tensor2,
}

/// One scanning direction.
#[derive(Debug, Clone)]
pub struct LstmCell {
    pub w: Param,
    pub u: Param,
    pub b: Param,
    reverse: bool,
    cache: Option<CellCache>,
}

impl LstmCell {
    pub fn new<R: Rng>(name: &str, input: usize, hidden: usize, reverse: bool, rng: &mut R) -> Self {
        let w = Param::uniform(format!("{name}.w"), 4 * hidden, input, input, rng);
        let u = Param::uniform(format!("{name}.u"), 4 * hidden, hidden, hidden, rng);
        let mut b = Param::zeros(format!("{name}.b"), 1, 4 * hidden);
        // forget-gate bias
        b.value.data_mut()[hidden..2 * hidden].fill(1.0);
        Self {
            w,
            u,
            b,
            reverse,
            cache: None,
        }
    }

    pub fn hidden(&self) -> usize {
        self.u.value.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.w.value.cols()
    }

    pub fn is_reverse(&self) -> bool {
        self.reverse
    }

    fn order(&self, steps: usize) -> Box<dyn Iterator<Item = usize>> {
        if self.reverse {
            Box::new((0..steps).rev())
        } else {
            Box::new(0..steps)
        }
    }

    fn previous(&self, t: usize, steps: usize) -> Option<usize> {
        if self.reverse {
            (t + 1 < steps).then_some(t + 1)
        } else {
            t.checked_sub(1)
        }
    }

    fn run(&self, x: &Tensor2, layout: &BatchLayout) -> Result<CellCache> {
        let (hd, bsz, steps) = (self.hidden(), layout.batch(), layout.steps());
        if x.cols() != self.input_dim() || x.rows() != layout.rows() {
            return Err(AaiError::Shape(format!(
                "{}: input {:?}, expected {} x {}",
                self.w.name,
                x.shape(),
                layout.rows(),
                self.input_dim()
            )));
        }
        let mut gates = Tensor2::zeros(layout.rows(), 4 * hd);
        gemm(MatRef::of(x), MatRef::of(&self.w.value).t(), 0.0, gates.data_mut());
        gates.add_row_vector(self.b.value.data());
        let mut h = Tensor2::zeros(layout.rows(), hd);
        let mut c = Tensor2::zeros(layout.rows(), hd);
        let mut tanh_c = Tensor2::zeros(layout.rows(), hd);

        for t in self.order(steps) {
            let prev = self.previous(t, steps);
            let block = t * bsz;
            if let Some(p) = prev {
                let (h_prev, z_t) = (h.row_block(p * bsz, bsz), gates.row_block_mut(block, bsz));
                gemm(MatRef::new(h_prev, bsz, hd), MatRef::of(&self.u.value).t(), 1.0, z_t);
            }
            for b in 0..bsz {
                let r = block + b;
                let valid = layout.is_valid(t, b);
                let z = gates.row_mut(r);
                for v in z[..3 * hd].iter_mut() {
                    *v = sigmoid(*v);
                }
                for v in z[3 * hd..].iter_mut() {
                    *v = v.tanh();
                }
                let z = gates.row(r).to_vec();
                for j in 0..hd {
                    let c_prev = prev.map_or(0.0, |p| c.get(p * bsz + b, j));
                    let (i, f, o, g) = (z[j], z[hd + j], z[2 * hd + j], z[3 * hd + j]);
                    let c_new = f * c_prev + i * g;
                    let tc = c_new.tanh();
                    tanh_c.set(r, j, tc);
                    if valid {
                        c.set(r, j, c_new);
                        h.set(r, j, o * tc);
                    }
                }
            }
        }
        Ok(CellCache {
            input: x.clone(),
            gates,
            tanh_c,
            h,
            c,
        })
    }

    pub fn forward(&self, x: &Tensor2, layout: &BatchLayout) -> Result<Tensor2> {
        Ok(self.run(x, layout)?.h)
    }

    pub fn forward_train(&mut self, x: &Tensor2, layout: &BatchLayout) -> Result<Tensor2> {
        let cache = self.run(x, layout)?;
        let h = cache.h.clone();
        self.cache = Some(cache);
        Ok(h)
    }

    pub fn backward(&mut self, dh_out: &Tensor2, layout: &BatchLayout) -> Result<Tensor2> {
        let cache = self.cache.take().ok_or(AaiError::MissingCache("lstm cell"))?;
        let (hd, bsz, steps) = (self.hidden(), layout.batch(), layout.steps());
        if dh_out.shape() != cache.h.shape() {
            return Err(AaiError::Shape(format!(
                "{}: upstream gradient {:?} does not match output {:?}",
                self.w.name,
                dh_out.shape(),
                cache.h.shape()
            )));
        }
        let mut dz = Tensor2::zeros(layout.rows(), 4 * hd);
        let mut dh_rec = vec![0.0; bsz * hd];
        let mut dc_rec = vec![0.0; bsz * hd];
        let steps_rev: Vec<usize> = self.order(steps).collect();
        for &t in steps_rev.iter().rev() {
            let prev = self.previous(t, steps);
            let block = t * bsz;
            for b in 0..bsz {
                let r = block + b;
                let m = if layout.is_valid(t, b) { 1.0 } else { 0.0 };
                let z = cache.gates.row(r);
                for j in 0..hd {
                    let (i, f, o, g) = (z[j], z[hd + j], z[2 * hd + j], z[3 * hd + j]);
                    let tc = cache.tanh_c.get(r, j);
                    let c_prev = prev.map_or(0.0, |p| cache.c.get(p * bsz + b, j));
                    let k = b * hd + j;
                    let dh = m * (dh_out.get(r, j) + dh_rec[k]);
                    let dc = m * dc_rec[k] + dh * o * (1.0 - tc * tc);
                    let dzr = dz.row_mut(r);
                    dzr[j] = dc * g * i * (1.0 - i);
                    dzr[hd + j] = dc * c_prev * f * (1.0 - f);
                    dzr[2 * hd + j] = dh * tc * o * (1.0 - o);
                    dzr[3 * hd + j] = dc * i * (1.0 - g * g);
                    dc_rec[k] = dc * f;
                }
            }
            let dz_t = dz.row_block(block, bsz);
            if let Some(p) = prev {
                let h_prev = cache.h.row_block(p * bsz, bsz);
                gemm(
                    MatRef::new(dz_t, bsz, 4 * hd).t(),
                    MatRef::new(h_prev, bsz, hd),
                    1.0,
                    self.u.grad.data_mut(),
                );
                gemm(
                    MatRef::new(dz_t, bsz, 4 * hd),
                    MatRef::of(&self.u.value),
                    0.0,
                    &mut dh_rec,
                );
            } else {
                dh_rec.fill(0.0);
            }
        }
        gemm(
            MatRef::of(&dz).t(),
            MatRef::of(&cache.input),
            1.0,
            self.w.grad.data_mut(),
        );
        let db = self.b.grad.data_mut();
        for r in 0..dz.rows() {
            db.iter_mut().zip(dz.row(r)).for_each(|(a, g)| *a += g);
        }
        let mut dx = Tensor2::zeros(layout.rows(), self.input_dim());
        gemm(MatRef::of(&dz), MatRef::of(&self.w.value), 0.0, dx.data_mut());
        Ok(dx)
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.w, &self.u, &self.b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.u, &mut self.b]
    }
}

/// Forward and reverse cells; output row is `[h_fwd | h_bwd]`.
#[derive(Debug, Clone)]
pub struct BiLstmLayer {
    pub forward_cell: LstmCell,
    pub backward_cell: LstmCell,
}

impl BiLstmLayer {
    pub fn new<R: Rng>(name: &str, input: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            forward_cell: LstmCell::new(&format!("{name}.fwd"), input, hidden, false, rng),
            backward_cell: LstmCell::new(&format!("{name}.bwd"), input, hidden, true, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward_cell.hidden()
    }

    pub fn input_dim(&self) -> usize {
        self.forward_cell.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        2 * self.hidden()
    }

    pub fn forward(&self, x: &Tensor2, layout: &BatchLayout) -> Result<Tensor2> {
        check_nonempty(layout)?;
        let f = self.forward_cell.forward(x, layout)?;
        let b = self.backward_cell.forward(x, layout)?;
        f.hcat(&b)
    }

    pub fn forward_train(&mut self, x: &Tensor2, layout: &BatchLayout) -> Result<Tensor2> {
        check_nonempty(layout)?;
        let f = self.forward_cell.forward_train(x, layout)?;
        let b = self.backward_cell.forward_train(x, layout)?;
        f.hcat(&b)
    }

    pub fn backward(&mut self, dy: &Tensor2, layout: &BatchLayout) -> Result<Tensor2> {
        if dy.cols() != self.output_dim() {
            return Err(AaiError::Shape(format!(
                "bi-lstm upstream gradient has {} columns, expected {}",
                dy.cols(),
                self.output_dim()
            )));
        }
        let (df, db) = dy.hsplit(self.hidden());
        let mut dx = self.forward_cell.backward(&df, layout)?;
        dx.add_assign(&self.backward_cell.backward(&db, layout)?);
        Ok(dx)
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut p = self.forward_cell.params();
        p.extend(self.backward_cell.params());
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.forward_cell.params_mut();
        p.extend(self.backward_cell.params_mut());
        p
    }
}

fn check_nonempty(layout: &BatchLayout) -> Result<()> {
    if layout.steps() == 0 {
        return Err(AaiError::EmptyInput("bi-lstm needs at least one step".into()));
    }
    Ok(())
}
