//! Uniform grids, sampled fields, finite-difference derivatives and the PDE
//! residuals of q and β.
//!
//! Fields are stored as `nx × nt` arrays. Cells within a stencil half-width
//! of the boundary carry no derivative information; they are tracked by
//! per-axis margins and hold NaN.

use ndarray::{Array2, Zip};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, VesselError};
use crate::scalar::{lit, to_f64, Real};
use crate::stencil::{Accuracy, Stencil};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D<T: Real> {
    min: T,
    max: T,
    n: usize,
}

impl<T: Real> Grid1D<T> {
    pub fn new(min: T, max: T, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(VesselError::GridTooSmall(format!("{n} nodes; at least 2 required")));
        }
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(VesselError::invalid("grid", "bounds must be finite with max > min"));
        }
        Ok(Self { min, max, n })
    }

    /// Grid of spacing `h` starting at `min`; the last node is the largest
    /// `min + ih ≤ max` (up to rounding).
    pub fn with_step(min: T, max: T, h: T) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(VesselError::invalid("h", "step must be positive"));
        }
        let cells = ((max - min) / h + lit(1e-9)).floor();
        let cells = cells
            .to_usize()
            .ok_or_else(|| VesselError::invalid("grid", "bounds must be finite"))?;
        Self::new(min, min + h * T::from_usize(cells).unwrap(), cells + 1)
    }

    pub fn min(&self) -> T {
        self.min
    }

    pub fn max(&self) -> T {
        self.max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> T {
        (self.max - self.min) / T::from_usize(self.n - 1).unwrap()
    }

    pub fn node(&self, i: usize) -> T {
        if i + 1 == self.n {
            self.max
        } else {
            self.min + self.step() * T::from_usize(i).unwrap()
        }
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Index of the node equal to `x` up to `1e-9` of a cell.
    pub fn node_index(&self, x: T) -> Option<usize> {
        let pos = (x - self.min) / self.step();
        let i = pos.round();
        if (pos - i).abs() > lit(1e-9) || i < T::zero() {
            return None;
        }
        i.to_usize().filter(|i| *i < self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D<T: Real> {
    pub x: Grid1D<T>,
    pub t: Grid1D<T>,
}

impl<T: Real> Grid2D<T> {
    /// Both axes need at least 9 nodes so that third-derivative stencils
    /// leave a nonempty interior.
    pub fn new(x_min: T, x_max: T, nx: usize, t_min: T, t_max: T, nt: usize) -> Result<Self> {
        if nx < 9 || nt < 9 {
            return Err(VesselError::GridTooSmall(format!(
                "{nx}×{nt} grid; at least 9 nodes per axis required"
            )));
        }
        Ok(Self {
            x: Grid1D::new(x_min, x_max, nx)?,
            t: Grid1D::new(t_min, t_max, nt)?,
        })
    }

    pub fn with_steps(x_min: T, x_max: T, hx: T, t_min: T, t_max: T, ht: T) -> Result<Self> {
        let x = Grid1D::with_step(x_min, x_max, hx)?;
        let t = Grid1D::with_step(t_min, t_max, ht)?;
        Self::new(x.min, x.max, x.n, t.min, t.max, t.n)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.x.len(), self.t.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Axis {
    X,
    T,
}

/// Real values on a [`Grid2D`], indexed `[ix, it]`.
#[derive(Debug, Clone)]
pub struct SampledField<T: Real> {
    grid: Grid2D<T>,
    values: Array2<T>,
    margin: (usize, usize),
    label: String,
}

impl<T: Real> SampledField<T> {
    pub fn from_array(grid: Grid2D<T>, values: Array2<T>, label: impl Into<String>) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(VesselError::IndexMismatch {
                what: "field values",
                expected: grid.shape().0 * grid.shape().1,
                got: values.len(),
            });
        }
        Ok(Self {
            grid,
            values,
            margin: (0, 0),
            label: label.into(),
        })
    }

    pub fn grid(&self) -> &Grid2D<T> {
        &self.grid
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Invalid boundary cells on each side, per axis.
    pub fn margin(&self) -> (usize, usize) {
        self.margin
    }

    pub fn is_valid(&self, ix: usize, it: usize) -> bool {
        let (nx, nt) = self.grid.shape();
        let (mx, mt) = self.margin;
        ix >= mx && ix + mx < nx && it >= mt && it + mt < nt
    }

    pub fn get(&self, ix: usize, it: usize) -> Option<T> {
        self.is_valid(ix, it).then(|| self.values[[ix, it]])
    }

    pub fn valid_values(&self) -> impl Iterator<Item = T> + '_ {
        self.values
            .indexed_iter()
            .filter(|((i, j), _)| self.is_valid(*i, *j))
            .map(|(_, v)| *v)
    }

    /// Whether every valid cell is finite.
    pub fn is_finite(&self) -> bool {
        self.valid_values().all(|v| v.is_finite())
    }

    /// Largest magnitude over the valid cells; NaN if any valid cell is NaN.
    pub fn max_abs(&self) -> T {
        self.valid_values().fold(T::zero(), |m, v| {
            if v.is_nan() || m.is_nan() {
                v + m
            } else {
                m.max(v.abs())
            }
        })
    }

    /// Value at the node nearest to `(x, t)` if it is valid.
    pub fn at(&self, x: T, t: T) -> Option<T> {
        let ix = self.grid.x.node_index(x)?;
        let it = self.grid.t.node_index(t)?;
        self.get(ix, it)
    }

    fn with_margin(mut self, margin: (usize, usize)) -> Self {
        let nan = T::nan();
        let (nx, nt) = self.grid.shape();
        self.margin = margin;
        for ix in 0..nx {
            for it in 0..nt {
                if !self.is_valid(ix, it) {
                    self.values[[ix, it]] = nan;
                }
            }
        }
        self
    }
}

/// Samples `f(x, t)` on every node, in parallel over x.
pub fn sample_field<T, F>(grid: &Grid2D<T>, label: impl Into<String>, f: F) -> Result<SampledField<T>>
where
    T: Real,
    F: Fn(T, T) -> Result<T> + Sync,
{
    let (nx, nt) = grid.shape();
    let xs = grid.x.nodes();
    let ts = grid.t.nodes();
    let rows: Vec<Vec<T>> = xs
        .par_iter()
        .map(|x| ts.iter().map(|t| f(*x, *t)).collect::<Result<Vec<T>>>())
        .collect::<Result<_>>()?;
    let values = Array2::from_shape_fn((nx, nt), |(i, j)| rows[i][j]);
    SampledField::from_array(*grid, values, label)
}

/// Centered derivative along `axis`; the margin on that axis grows by the
/// stencil half-width.
pub fn fd_derivative<T: Real>(
    field: &SampledField<T>,
    axis: Axis,
    order: u32,
    accuracy: Accuracy,
) -> Result<SampledField<T>> {
    let st = Stencil::centered(order, accuracy)?;
    let r = st.half_width();
    let (nx, nt) = field.grid.shape();
    let (mx, mt) = field.margin;
    let margin = match axis {
        Axis::X => (mx + r, mt),
        Axis::T => (mx, mt + r),
    };
    if 2 * margin.0 >= nx || 2 * margin.1 >= nt {
        return Err(VesselError::GridTooSmall(format!(
            "{nx}×{nt} grid leaves no interior for a width-{} stencil",
            2 * r + 1
        )));
    }
    let h = match axis {
        Axis::X => field.grid.x.step(),
        Axis::T => field.grid.t.step(),
    };
    let scale = T::one() / h.powi(order as i32);
    let taps: Vec<(i64, T)> = st.taps().map(|(o, w)| (o, lit(w))).collect();
    let src = &field.values;
    let values = Array2::from_shape_fn((nx, nt), |(i, j)| {
        let inside = match axis {
            Axis::X => i >= r && i + r < nx,
            Axis::T => j >= r && j + r < nt,
        };
        if !inside {
            return T::nan();
        }
        let mut acc = T::zero();
        for (o, w) in &taps {
            let v = match axis {
                Axis::X => src[[(i as i64 + o) as usize, j]],
                Axis::T => src[[i, (j as i64 + o) as usize]],
            };
            acc += *w * v;
        }
        acc * scale
    });
    let label = format!("d{}{}({})", if axis == Axis::X { "x" } else { "t" }, order, field.label);
    Ok(SampledField {
        grid: field.grid,
        values,
        margin: (0, 0),
        label,
    }
    .with_margin(margin))
}

fn combine<T: Real>(parts: &[&SampledField<T>], label: &str, f: impl Fn(&[T]) -> T + Sync) -> SampledField<T> {
    let grid = parts[0].grid;
    let margin = parts
        .iter()
        .fold((0, 0), |m, p| (m.0.max(p.margin.0), m.1.max(p.margin.1)));
    let mut values = Array2::from_elem(grid.shape(), T::zero());
    Zip::indexed(&mut values).par_for_each(|(i, j), out| {
        let args: Vec<T> = parts.iter().map(|p| p.values[[i, j]]).collect();
        *out = f(&args);
    });
    SampledField {
        grid,
        values,
        margin: (0, 0),
        label: label.into(),
    }
    .with_margin(margin)
}

/// `q_t + (3/2) q q_x − (1/4) q_xxx` on the interior.
pub fn kdv_residual<T: Real>(q: &SampledField<T>, accuracy: Accuracy) -> Result<SampledField<T>> {
    let qt = fd_derivative(q, Axis::T, 1, accuracy)?;
    let qx = fd_derivative(q, Axis::X, 1, accuracy)?;
    let qxxx = fd_derivative(q, Axis::X, 3, accuracy)?;
    let (a, b): (T, T) = (lit(1.5), lit(0.25));
    Ok(combine(&[q, &qt, &qx, &qxxx], "kdv residual", |v| {
        v[1] + a * v[0] * v[2] - b * v[3]
    }))
}

/// `4β_t + 6β_x² − β_xxx` on the interior.
pub fn beta_pde_residual<T: Real>(beta: &SampledField<T>, accuracy: Accuracy) -> Result<SampledField<T>> {
    let bt = fd_derivative(beta, Axis::T, 1, accuracy)?;
    let bx = fd_derivative(beta, Axis::X, 1, accuracy)?;
    let bxxx = fd_derivative(beta, Axis::X, 3, accuracy)?;
    let (four, six): (T, T) = (lit(4.0), lit(6.0));
    Ok(combine(&[&bt, &bx, &bxxx], "beta residual", |v| {
        four * v[0] + six * v[1] * v[1] - v[2]
    }))
}

/// `q = 2β_x` with the fourth-order first-derivative stencil.
pub fn q_from_beta<T: Real>(beta: &SampledField<T>) -> Result<SampledField<T>> {
    q_from_beta_with(beta, Accuracy::Fourth)
}

pub fn q_from_beta_with<T: Real>(beta: &SampledField<T>, accuracy: Accuracy) -> Result<SampledField<T>> {
    let bx = fd_derivative(beta, Axis::X, 1, accuracy)?;
    let two: T = lit(2.0);
    Ok(combine(&[&bx], "q", |v| two * v[0]))
}

/// Observed order `log₂(r_h / r_{h/2})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Convergence {
    pub order: f64,
    /// The finer residual sits at the roundoff floor, so the order
    /// understates the true truncation order.
    pub at_floor: bool,
}

/// Residual below which a measurement is treated as roundoff.
pub const ROUNDOFF_FLOOR: f64 = 1e3 * f64::EPSILON;

pub fn convergence_order(res_h: f64, res_h2: f64) -> Result<Convergence> {
    convergence_order_with_floor(res_h, res_h2, ROUNDOFF_FLOOR)
}

pub fn convergence_order_with_floor(res_h: f64, res_h2: f64, floor: f64) -> Result<Convergence> {
    if !(res_h > 0.0 && res_h2 > 0.0) {
        return Err(VesselError::Precondition(format!(
            "convergence order needs positive residuals, got {res_h:e} and {res_h2:e}"
        )));
    }
    Ok(Convergence {
        order: (res_h / res_h2).log2(),
        at_floor: res_h2 <= floor,
    })
}

/// Maximum residual and its grid location, for reports.
pub fn argmax_abs<T: Real>(field: &SampledField<T>) -> Option<(f64, f64, f64)> {
    let mut best: Option<(f64, f64, f64)> = None;
    for ((i, j), v) in field.values.indexed_iter() {
        if !field.is_valid(i, j) {
            continue;
        }
        let a = to_f64(v.abs());
        if best.is_none_or(|b| a > b.0) {
            best = Some((a, to_f64(field.grid.x.node(i)), to_f64(field.grid.t.node(j))));
        }
    }
    best
}
