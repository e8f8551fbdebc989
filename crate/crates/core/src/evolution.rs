//! Evolution of the squared amplitudes `p_N = |b_N|²` on a symmetric
//! wavenumber lattice, and the reconstruction
//! `β(x,t) = Σ_N p_N(t) sin²(k_N x − k_N³ t) / k_N²`.
//!
//! ```text
//! ṗ_N = −(3/2) k_N² Σ_{k_n + k_m = k_N} p_n p_m / (k_n k_m) · cos(6 k_n k_m k_N t)
//! ```
//!
//! The sum runs over ordered pairs. Members are `m·k0` for integer
//! `m ∈ {−M..−1, 1..M}`, and pairs are matched on the integers.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VesselError};
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice<T: Real> {
    k0: T,
    half_width: usize,
    index: Vec<i64>,
    /// Ordered pairs `(n, m)` of positions whose sum is member `N`.
    pairs: Vec<Vec<(usize, usize)>>,
    dropped: usize,
    nonzero_sums: usize,
}

impl<T: Real> Lattice<T> {
    pub fn k0(&self) -> T {
        self.k0
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Integer labels `m` of the members, in increasing order.
    pub fn indices(&self) -> &[i64] {
        &self.index
    }

    pub fn k(&self, pos: usize) -> T {
        self.k0 * lit(self.index[pos] as f64)
    }

    pub fn wavenumbers(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.k(i)).collect()
    }

    /// Position of the member with label `m`.
    pub fn position(&self, m: i64) -> Option<usize> {
        let h = self.half_width as i64;
        match m {
            0 => None,
            m if m < -h || m > h => None,
            m if m < 0 => Some((m + h) as usize),
            m => Some((m + h - 1) as usize),
        }
    }

    /// Position of `−k` for the member at `pos`.
    pub fn mirror(&self, pos: usize) -> usize {
        self.len() - 1 - pos
    }

    pub fn pairs(&self, pos: usize) -> &[(usize, usize)] {
        &self.pairs[pos]
    }

    /// Ordered pairs with a nonzero sum that leaves the lattice, over all
    /// ordered pairs with a nonzero sum.
    pub fn dropped_pair_fraction(&self) -> f64 {
        if self.nonzero_sums == 0 {
            0.0
        } else {
            self.dropped as f64 / self.nonzero_sums as f64
        }
    }

    pub fn dropped_pairs(&self) -> usize {
        self.dropped
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.len()).all(|i| self.index[self.mirror(i)] == -self.index[i])
    }
}

pub fn make_lattice<T: Real>(k0: T, half_width: usize) -> Result<Lattice<T>> {
    if !(k0.is_finite() && k0 > T::zero()) {
        return Err(VesselError::invalid("k0", "must be positive and finite"));
    }
    if half_width == 0 {
        return Err(VesselError::invalid("M", "half-width must be at least 1"));
    }
    let h = half_width as i64;
    let index: Vec<i64> = (-h..=h).filter(|m| *m != 0).collect();
    let mut lattice = Lattice {
        k0,
        half_width,
        pairs: vec![Vec::new(); index.len()],
        index,
        dropped: 0,
        nonzero_sums: 0,
    };
    let n = lattice.len();
    for a in 0..n {
        for b in 0..n {
            let sum = lattice.index[a] + lattice.index[b];
            if sum == 0 {
                continue;
            }
            lattice.nonzero_sums += 1;
            match lattice.position(sum) {
                Some(target) => lattice.pairs[target].push((a, b)),
                None => lattice.dropped += 1,
            }
        }
    }
    Ok(lattice)
}

fn check_len<T: Real>(lattice: &Lattice<T>, p: &[T]) -> Result<()> {
    if p.len() != lattice.len() {
        return Err(VesselError::IndexMismatch {
            what: "p",
            expected: lattice.len(),
            got: p.len(),
        });
    }
    Ok(())
}

/// `ṗ_N` for every member.
pub fn dbnt_rhs<T: Real>(lattice: &Lattice<T>, p: &[T], t: T) -> Result<Vec<T>> {
    check_len(lattice, p)?;
    let six: T = lit(6.0);
    let factor: T = lit(-1.5);
    Ok((0..lattice.len())
        .map(|target| {
            let kn = lattice.k(target);
            let sum = lattice.pairs[target].iter().fold(T::zero(), |acc, &(a, b)| {
                let (ka, kb) = (lattice.k(a), lattice.k(b));
                acc + p[a] * p[b] / (ka * kb) * (six * ka * kb * kn * t).cos()
            });
            factor * kn * kn * sum
        })
        .collect())
}

/// `Σ_N ṗ_N / k_N²`.
pub fn conservation_residual<T: Real>(lattice: &Lattice<T>, p: &[T], t: T) -> Result<T> {
    let pdot = dbnt_rhs(lattice, p, t)?;
    Ok(weighted_sum(lattice, &pdot))
}

fn weighted_sum<T: Real>(lattice: &Lattice<T>, pdot: &[T]) -> T {
    pdot.iter().enumerate().fold(T::zero(), |acc, (i, v)| {
        let k = lattice.k(i);
        acc + *v / (k * k)
    })
}

/// `max_N |p_N − p_{−N}|`.
pub fn symmetry_residual<T: Real>(lattice: &Lattice<T>, p: &[T]) -> T {
    (0..lattice.len()).fold(T::zero(), |m, i| m.max((p[i] - p[lattice.mirror(i)]).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConservationPolicy {
    /// Reject a step whose conservation residual exceeds the tolerance.
    Enforce { tolerance: f64 },
    /// Record the residual without rejecting.
    Monitor,
}

impl Default for ConservationPolicy {
    fn default() -> Self {
        ConservationPolicy::Enforce { tolerance: 1e-9 }
    }
}

/// Stored samples of `p(t)` with their derivatives and invariant monitors.
#[derive(Debug, Clone, PartialEq)]
pub struct BTrajectory<T: Real> {
    pub times: Vec<T>,
    pub p: Vec<Vec<T>>,
    pub pdot: Vec<Vec<T>>,
    /// `Σ ṗ_N / k_N²` at each sample.
    pub conservation: Vec<T>,
    /// `max |p_N − p_{−N}|` at each sample.
    pub symmetry: Vec<T>,
}

impl<T: Real> BTrajectory<T> {
    pub fn max_conservation(&self) -> T {
        self.conservation.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn max_symmetry(&self) -> T {
        self.symmetry.iter().fold(T::zero(), |m, v| m.max(*v))
    }

    pub fn last(&self) -> &[T] {
        self.p.last().expect("trajectories hold at least one sample")
    }

    /// `p(t)` by cubic Hermite interpolation between samples.
    pub fn interpolate(&self, t: T) -> Result<Vec<T>> {
        let (first, last) = (self.times[0], *self.times.last().unwrap());
        if !(t >= first && t <= last) {
            return Err(VesselError::OutOfDomain {
                x: f64::NAN,
                t: to_f64(t),
            });
        }
        if self.times.len() == 1 {
            return Ok(self.p[0].clone());
        }
        let i = match self.times.partition_point(|s| *s <= t) {
            0 => 0,
            j => (j - 1).min(self.times.len() - 2),
        };
        let h = self.times[i + 1] - self.times[i];
        let s = (t - self.times[i]) / h;
        let (two, three): (T, T) = (lit(2.0), lit(3.0));
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = three * s2 - two * s3;
        let h11 = s3 - s2;
        Ok((0..self.p[i].len())
            .map(|n| {
                h00 * self.p[i][n] + h10 * h * self.pdot[i][n] + h01 * self.p[i + 1][n] + h11 * h * self.pdot[i + 1][n]
            })
            .collect())
    }
}

pub fn integrate_b<T: Real>(lattice: &Lattice<T>, p0: &[T], t_grid: &[T]) -> Result<BTrajectory<T>> {
    integrate_b_with(lattice, p0, t_grid, ConservationPolicy::default())
}

/// Classical RK4 between consecutive entries of `t_grid`.
pub fn integrate_b_with<T: Real>(
    lattice: &Lattice<T>,
    p0: &[T],
    t_grid: &[T],
    policy: ConservationPolicy,
) -> Result<BTrajectory<T>> {
    check_len(lattice, p0)?;
    if t_grid.is_empty() {
        return Err(VesselError::invalid("t_grid", "at least one time required"));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(VesselError::invalid("t_grid", "times must be strictly increasing"));
    }
    let floor = T::tol(1e-12);
    if let Some(i) = p0.iter().position(|v| !(v.is_finite() && *v >= -floor)) {
        return Err(VesselError::invalid(
            format!("p0[{i}]"),
            "must be finite and nonnegative",
        ));
    }
    if symmetry_residual(lattice, p0) > floor {
        return Err(VesselError::invalid("p0", "must satisfy p_N = p_{-N}"));
    }

    let mut traj = BTrajectory {
        times: Vec::with_capacity(t_grid.len()),
        p: Vec::with_capacity(t_grid.len()),
        pdot: Vec::with_capacity(t_grid.len()),
        conservation: Vec::with_capacity(t_grid.len()),
        symmetry: Vec::with_capacity(t_grid.len()),
    };
    let mut p = p0.to_vec();
    for (step, &t) in t_grid.iter().enumerate() {
        if step > 0 {
            p = rk4_step(lattice, &p, t_grid[step - 1], t - t_grid[step - 1])?;
        }
        for (i, v) in p.iter().enumerate() {
            if *v < -floor {
                return Err(VesselError::NegativeAmplitude {
                    t: to_f64(t),
                    member: lattice.index[i],
                    value: to_f64(*v),
                });
            }
        }
        let pdot = dbnt_rhs(lattice, &p, t)?;
        let residual = weighted_sum(lattice, &pdot);
        if let ConservationPolicy::Enforce { tolerance } = policy {
            if residual.abs() > T::tol(tolerance) {
                return Err(VesselError::ConservationBreach {
                    t: to_f64(t),
                    residual: to_f64(residual),
                    tolerance,
                });
            }
        }
        traj.symmetry.push(symmetry_residual(lattice, &p));
        traj.conservation.push(residual);
        traj.times.push(t);
        traj.p.push(p.clone());
        traj.pdot.push(pdot);
    }
    Ok(traj)
}

fn rk4_step<T: Real>(lattice: &Lattice<T>, p: &[T], t: T, h: T) -> Result<Vec<T>> {
    let half = h / lit(2.0);
    let axpy = |a: &[T], s: T, d: &[T]| -> Vec<T> { a.iter().zip(d).map(|(a, d)| *a + s * *d).collect() };
    let k1 = dbnt_rhs(lattice, p, t)?;
    let k2 = dbnt_rhs(lattice, &axpy(p, half, &k1), t + half)?;
    let k3 = dbnt_rhs(lattice, &axpy(p, half, &k2), t + half)?;
    let k4 = dbnt_rhs(lattice, &axpy(p, h, &k3), t + h)?;
    let sixth = h / lit(6.0);
    let two: T = lit(2.0);
    Ok((0..p.len())
        .map(|i| p[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]))
        .collect())
}

/// `Σ_N p_N(t) sin²(k_N x − k_N³ t) / k_N²` over every lattice member, with
/// `p(t)` interpolated from the trajectory.
pub fn beta_from_b<T: Real>(lattice: &Lattice<T>, traj: &BTrajectory<T>, x: T, t: T) -> Result<T> {
    let p = traj.interpolate(t)?;
    check_len(lattice, &p)?;
    Ok(beta_from_p(lattice, &p, x, t))
}

pub fn beta_from_p<T: Real>(lattice: &Lattice<T>, p: &[T], x: T, t: T) -> T {
    (0..lattice.len()).fold(T::zero(), |acc, i| {
        let k = lattice.k(i);
        let s = (k * x - k * k * k * t).sin() / k;
        acc + p[i] * s * s
    })
}

/// Uniform time grid `[0, t_end]` with `steps` steps.
pub fn time_grid<T: Real>(t_end: T, steps: usize) -> Result<Vec<T>> {
    if steps == 0 || !(t_end > T::zero()) {
        return Err(VesselError::invalid("steps", "need t_end > 0 and at least one step"));
    }
    let h = t_end / T::from_usize(steps).unwrap();
    Ok((0..=steps)
        .map(|i| {
            if i == steps {
                t_end
            } else {
                h * T::from_usize(i).unwrap()
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent enumeration over all ordered pairs of wavenumbers.
    fn brute_force(k: &[f64], p: &[f64], t: f64) -> Vec<f64> {
        k.iter()
            .map(|kn| {
                let mut s = 0.0;
                for (a, ka) in k.iter().enumerate() {
                    for (b, kb) in k.iter().enumerate() {
                        if ((ka + kb) - kn).abs() < 1e-9 {
                            s += p[a] * p[b] / (ka * kb) * (6.0 * ka * kb * kn * t).cos();
                        }
                    }
                }
                -1.5 * kn * kn * s
            })
            .collect()
    }

    #[test]
    fn lattice_members_and_drops() {
        let l = make_lattice(1.0_f64, 2).unwrap();
        assert_eq!(l.wavenumbers(), vec![-2.0, -1.0, 1.0, 2.0]);
        assert!(l.is_symmetric());
        let two = l.position(2).unwrap();
        assert_eq!(l.pairs(two), &[(l.position(1).unwrap(), l.position(1).unwrap())]);
        assert_eq!(l.dropped_pairs(), 6);
        assert!((l.dropped_pair_fraction() - 0.5).abs() < 1e-15);

        let l = make_lattice(0.5_f64, 1).unwrap();
        assert_eq!(l.wavenumbers(), vec![-0.5, 0.5]);
        assert!(l.pairs(0).is_empty() && l.pairs(1).is_empty());
        assert_eq!(l.dropped_pair_fraction(), 1.0);
        assert!(make_lattice(0.0, 1).is_err() && make_lattice(1.0_f64, 0).is_err());
    }

    #[test]
    fn rhs_examples() {
        let l = make_lattice(1.0_f64, 2).unwrap();
        let p = vec![1.0; 4];
        let d = dbnt_rhs(&l, &p, 0.0).unwrap();
        assert_eq!(d[l.position(2).unwrap()], -6.0);
        assert_eq!(d[l.position(1).unwrap()], 1.5);
        assert_eq!(conservation_residual(&l, &p, 0.0).unwrap(), 0.0);
        assert!(dbnt_rhs(&l, &p[..3], 0.0).is_err());
    }

    #[test]
    fn rhs_matches_brute_force() {
        let l = make_lattice(0.7_f64, 4).unwrap();
        let k = l.wavenumbers();
        let p: Vec<f64> = k.iter().map(|k| 1.0 / (1.0 + k * k)).collect();
        for t in [0.0, 0.3, 1.7] {
            let a = dbnt_rhs(&l, &p, t).unwrap();
            let b = brute_force(&k, &p, t);
            for (a, b) in a.iter().zip(&b) {
                assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let l = make_lattice(1.0_f64, 3).unwrap();
        let traj = integrate_b(&l, &[0.0; 6], &time_grid(1.0, 10).unwrap()).unwrap();
        assert!(traj.p.iter().all(|p| p.iter().all(|v| *v == 0.0)));
        assert_eq!(beta_from_b(&l, &traj, 0.4, 0.55).unwrap(), 0.0);
    }

    #[test]
    fn initial_slope() {
        let l = make_lattice(1.0_f64, 2).unwrap();
        let traj = integrate_b_with(&l, &[1.0; 4], &time_grid(1e-4, 1).unwrap(), ConservationPolicy::Monitor).unwrap();
        let i = l.position(2).unwrap();
        let slope = (traj.p[1][i] - 1.0) / 1e-4;
        assert!((slope + 6.0).abs() < 1e-2);
        assert!(traj.max_symmetry() < 1e-12);
    }

    #[test]
    fn rk4_order() {
        let l = make_lattice(1.0_f64, 2).unwrap();
        let p0 = [0.1, 0.2, 0.2, 0.1];
        let run = |n| {
            integrate_b_with(&l, &p0, &time_grid(0.5, n).unwrap(), ConservationPolicy::Monitor)
                .unwrap()
                .last()
                .to_vec()
        };
        let (a, b, c) = (run(50), run(100), run(200));
        let e1: f64 = a.iter().zip(&c).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
        let e2: f64 = b.iter().zip(&c).map(|(b, c)| (b - c).abs()).fold(0.0, f64::max);
        let order = ((e1 - e2) / e2).log2();
        assert!((order - 4.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn invalid_initial_data() {
        let l = make_lattice(1.0_f64, 2).unwrap();
        let g = time_grid(0.1, 2).unwrap();
        assert!(integrate_b(&l, &[1.0, 1.0, 1.0, 0.5], &g).is_err());
        assert!(integrate_b(&l, &[-1.0, 1.0, 1.0, -1.0], &g).is_err());
        assert!(integrate_b(&l, &[1.0; 4], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn interpolation_is_hermite() {
        let l = make_lattice(1.0_f64, 2).unwrap();
        let p0 = [0.1, 0.2, 0.2, 0.1];
        let traj = integrate_b_with(&l, &p0, &time_grid(0.2, 20).unwrap(), ConservationPolicy::Monitor).unwrap();
        let fine = integrate_b_with(&l, &p0, &time_grid(0.105, 210).unwrap(), ConservationPolicy::Monitor).unwrap();
        let p = traj.interpolate(0.105).unwrap();
        for (a, b) in p.iter().zip(fine.last()) {
            assert!((a - b).abs() < 1e-7);
        }
        assert!(traj.interpolate(0.3).is_err());
    }

    #[test]
    fn beta_at_initial_time_is_odd_sum() {
        let l = make_lattice(1.0_f64, 3).unwrap();
        let p = vec![0.2, 0.5, 1.0, 1.0, 0.5, 0.2];
        let traj = integrate_b_with(&l, &p, &time_grid(0.1, 4).unwrap(), ConservationPolicy::Monitor).unwrap();
        let spec = crate::spectral::DiscreteSpectrum::new(
            vec![1.0, 2.0, 3.0],
            vec![1.0, 0.5, 0.2]
                .into_iter()
                .map(|v: f64| crate::scalar::re((2.0 * v).sqrt()))
                .collect(),
            crate::spectral::SpectrumFlavor::AlmostPeriodic,
        )
        .unwrap();
        for x in [-1.3, 0.0, 0.4, 2.2] {
            let a = beta_from_b(&l, &traj, x, 0.0).unwrap();
            let b = crate::spectral::beta_odd(&spec, x);
            assert!((a - b).abs() < 1e-14);
        }
    }
}
