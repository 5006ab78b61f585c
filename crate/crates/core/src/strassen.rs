//! Geometry of the Strassen ball
//! `S₀ = {g absolutely continuous on [-1,1] : g(0) = 0, ∫ ġ² ≤ 1}`.
//!
//! Candidates live on the node grid of the query and are interpolated
//! piecewise-linearly; among all absolutely continuous functions with given
//! node values the interpolant has the least Dirichlet energy, so restricting
//! to it loses nothing for grid-restricted sup-norm distances.
//!
//! The distance `inf_{g ∈ S₀} max_i |φ(s_i) − g(s_i)|` is found by bisection
//! on the tube half-width `ε`: the tube `[φ − ε, φ + ε]` meets `S₀` iff the
//! minimum-energy path threading it, pinned at 0, has energy at most 1. That
//! path is a taut string.

use rand::Rng;

use crate::{Error, Result};

/// Absolute tolerance of the distance bisection.
pub const DISTANCE_TOLERANCE: f64 = 1e-6;

/// Piecewise-linear function on a strictly increasing node grid over `[-1, 1]`
/// that contains 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
    zero: usize,
}

impl GridFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.len() < 2 || nodes[0] != -1.0 || nodes[nodes.len() - 1] != 1.0 {
            return Err(Error::InvalidGrid("nodes must span exactly [-1, 1]".into()));
        }
        if !nodes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidGrid(
                "nodes must be strictly increasing".into(),
            ));
        }
        let zero = nodes
            .iter()
            .position(|&s| s == 0.0)
            .ok_or_else(|| Error::InvalidGrid("0 must be a node".into()))?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("values must be finite".into()));
        }
        Ok(GridFunction {
            nodes,
            values,
            zero,
        })
    }

    /// Mutable node values. Callers must keep them finite.
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Samples `f` at the nodes.
    pub fn from_fn(nodes: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = nodes.iter().map(|&s| f(s)).collect();
        Self::new(nodes, values)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index of the node at 0.
    pub fn zero_index(&self) -> usize {
        self.zero
    }

    pub fn value_at_zero(&self) -> f64 {
        self.values[self.zero]
    }

    /// Linear interpolation; constant extrapolation outside `[-1, 1]`.
    pub fn eval(&self, s: f64) -> f64 {
        let k = self.nodes.partition_point(|&x| x <= s);
        if k == 0 {
            return self.values[0];
        }
        if k == self.nodes.len() {
            return self.values[k - 1];
        }
        let (x0, x1) = (self.nodes[k - 1], self.nodes[k]);
        let (y0, y1) = (self.values[k - 1], self.values[k]);
        y0 + (y1 - y0) * (s - x0) / (x1 - x0)
    }

    fn same_nodes(&self, other: &GridFunction) -> Result<()> {
        if self.nodes != other.nodes {
            return Err(Error::InvalidGrid(
                "grid functions use different nodes".into(),
            ));
        }
        Ok(())
    }

    /// Nodewise `self + c`.
    pub fn shifted(&self, c: f64) -> GridFunction {
        GridFunction {
            nodes: self.nodes.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
            zero: self.zero,
        }
    }

    /// Nodewise `c · self`.
    pub fn scaled(&self, c: f64) -> GridFunction {
        GridFunction {
            nodes: self.nodes.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            zero: self.zero,
        }
    }

    /// `max_i |self(s_i) − other(s_i)|`.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        self.same_nodes(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Dirichlet energy `Σ (Δg)²/Δs` of the piecewise-linear interpolant.
pub fn energy(g: &GridFunction) -> f64 {
    segment_energy(&g.nodes, &g.values)
}

fn segment_energy(nodes: &[f64], values: &[f64]) -> f64 {
    nodes
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| {
            let d = y[1] - y[0];
            d * d / (x[1] - x[0])
        })
        .sum()
}

/// `|g(0)| ≤ tol` and `energy(g) ≤ 1 + tol`.
pub fn is_member(g: &GridFunction, tol: f64) -> bool {
    g.value_at_zero().abs() <= tol && energy(g) <= 1.0 + tol
}

/// `‖g‖ = sup_{-1≤s≤1} |g(s)|`, attained at a node.
pub fn sup_norm(g: &GridFunction) -> f64 {
    g.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// One-sided norm `‖g‖₊ = sup_{0≤s≤1} |g(s)|`.
pub fn sup_norm_plus(g: &GridFunction) -> f64 {
    g.values[g.zero..].iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Taut string through vertical gates `[lower_i, upper_i]` at abscissae `x`,
/// with both end gates degenerate. Writes the node values of the shortest
/// path into `out`; that path minimizes every convex functional of the slope,
/// the Dirichlet energy included.
fn taut_string_fixed_ends(x: &[f64], lower: &[f64], upper: &[f64], out: &mut [f64]) {
    let m = x.len();
    debug_assert!(m >= 2 && lower[0] == upper[0] && lower[m - 1] == upper[m - 1]);
    let mut anchor = 0usize;
    let mut anchor_y = lower[0];
    out[0] = anchor_y;
    loop {
        let mut lo_slope = f64::NEG_INFINITY;
        let mut hi_slope = f64::INFINITY;
        let mut lo_idx = anchor;
        let mut hi_idx = anchor;
        let mut bend = None;
        for j in anchor + 1..m {
            let dx = x[j] - x[anchor];
            let sl = (lower[j] - anchor_y) / dx;
            let su = (upper[j] - anchor_y) / dx;
            if sl > hi_slope {
                bend = Some((hi_idx, upper[hi_idx], hi_slope));
                break;
            }
            if su < lo_slope {
                bend = Some((lo_idx, lower[lo_idx], lo_slope));
                break;
            }
            if sl >= lo_slope {
                lo_slope = sl;
                lo_idx = j;
            }
            if su <= hi_slope {
                hi_slope = su;
                hi_idx = j;
            }
        }
        match bend {
            Some((idx, y, slope)) => {
                for k in anchor + 1..idx {
                    out[k] = anchor_y + slope * (x[k] - x[anchor]);
                }
                out[idx] = y;
                anchor = idx;
                anchor_y = y;
            }
            None => {
                // Only the end gate is left to reach; the cone contains its slope.
                let slope = (lower[m - 1] - anchor_y) / (x[m - 1] - x[anchor]);
                for k in anchor + 1..m - 1 {
                    out[k] = anchor_y + slope * (x[k] - x[anchor]);
                }
                out[m - 1] = lower[m - 1];
                return;
            }
        }
    }
}

/// Minimum-energy path on `[0, 1]` pinned to 0 at abscissa 0 with a free far
/// end. `x[0] = 0`. Reflecting the tube about the far end gives a problem with
/// both ends pinned whose unique (by strict convexity) solution is symmetric,
/// so its first half solves the free-end problem.
fn taut_string_free_end(x: &[f64], lower: &[f64], upper: &[f64], out: &mut [f64]) {
    let m = x.len();
    if m == 1 {
        out[0] = 0.0;
        return;
    }
    let far = x[m - 1];
    let len = 2 * m - 1;
    let mut xs = Vec::with_capacity(len);
    let mut lo = Vec::with_capacity(len);
    let mut hi = Vec::with_capacity(len);
    xs.extend_from_slice(x);
    lo.extend_from_slice(lower);
    hi.extend_from_slice(upper);
    for k in (0..m - 1).rev() {
        xs.push(2.0 * far - x[k]);
        lo.push(lower[k]);
        hi.push(upper[k]);
    }
    lo[0] = 0.0;
    hi[0] = 0.0;
    lo[len - 1] = 0.0;
    hi[len - 1] = 0.0;
    let mut full = vec![0.0; len];
    taut_string_fixed_ends(&xs, &lo, &hi, &mut full);
    out.copy_from_slice(&full[..m]);
}

/// Minimal Dirichlet energy over piecewise-linear `g` on the common node grid
/// with `lower ≤ g ≤ upper` at every node and `g(0) = 0`, together with a
/// minimizer. Both half-lines are solved independently, pinned at 0 with free
/// far endpoints.
pub fn taut_string_min_energy(
    lower: &GridFunction,
    upper: &GridFunction,
) -> Result<(f64, GridFunction)> {
    lower.same_nodes(upper)?;
    if let Some(i) = (0..lower.values.len()).find(|&i| lower.values[i] > upper.values[i]) {
        return Err(Error::Infeasible(format!(
            "lower bound exceeds upper bound at s = {}",
            lower.nodes[i]
        )));
    }
    let z = lower.zero;
    if lower.values[z] > 0.0 || upper.values[z] < 0.0 {
        return Err(Error::Infeasible(format!(
            "tube [{}, {}] excludes 0 at the pin",
            lower.values[z], upper.values[z]
        )));
    }
    let mut witness = vec![0.0; lower.nodes.len()];
    solve_tube(&lower.nodes, &lower.values, &upper.values, z, &mut witness);
    let g = GridFunction {
        nodes: lower.nodes.clone(),
        values: witness,
        zero: z,
    };
    Ok((energy(&g), g))
}

/// Scratch-free core used by the bisection: writes the pinned minimizer into `out`.
fn solve_tube(nodes: &[f64], lower: &[f64], upper: &[f64], z: usize, out: &mut [f64]) {
    let m = nodes.len();
    // Right half: abscissae s - 0.
    let right_x: Vec<f64> = nodes[z..].to_vec();
    let mut right = vec![0.0; m - z];
    taut_string_free_end(&right_x, &lower[z..], &upper[z..], &mut right);
    // Left half, reflected: abscissae -s, in reverse order.
    let left_x: Vec<f64> = nodes[..=z].iter().rev().map(|s| -s).collect();
    let left_lo: Vec<f64> = lower[..=z].iter().rev().cloned().collect();
    let left_hi: Vec<f64> = upper[..=z].iter().rev().cloned().collect();
    let mut left = vec![0.0; z + 1];
    taut_string_free_end(&left_x, &left_lo, &left_hi, &mut left);
    for (k, v) in left.iter().enumerate() {
        out[z - k] = *v;
    }
    out[z..].copy_from_slice(&right);
    out[z] = 0.0;
}

/// Result of a projection of a grid function onto `S₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrassenQueryResult {
    /// Grid-restricted sup-norm distance to `S₀`, to within [`DISTANCE_TOLERANCE`].
    pub distance: f64,
    /// An element of `S₀` within `distance` of the query at every node.
    pub witness: GridFunction,
    /// Number of bisection steps.
    pub iterations: usize,
    pub energy_of_witness: f64,
}

/// Sup-norm distance from `phi` to `S₀`, restricted to the node grid.
///
/// `phi(0)` must be exactly 0. Bisects `ε` over `[0, ‖phi‖]` (the zero
/// function is always an admissible answer) until the bracket is narrower
/// than [`DISTANCE_TOLERANCE`], and returns the feasible end of the bracket.
pub fn distance_to_s0(phi: &GridFunction) -> Result<StrassenQueryResult> {
    if phi.value_at_zero() != 0.0 {
        return Err(Error::Precondition(format!(
            "phi(0) = {} but increments vanish at 0",
            phi.value_at_zero()
        )));
    }
    let e0 = energy(phi);
    if e0 <= 1.0 {
        return Ok(StrassenQueryResult {
            distance: 0.0,
            witness: phi.clone(),
            iterations: 0,
            energy_of_witness: e0,
        });
    }
    let m = phi.nodes.len();
    let z = phi.zero;
    let mut lo_eps = 0.0;
    let mut hi_eps = sup_norm(phi);
    let mut best = vec![0.0; m];
    let mut best_energy = 0.0;
    let mut lower = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut iterations = 0;
    while hi_eps - lo_eps > DISTANCE_TOLERANCE {
        iterations += 1;
        let eps = 0.5 * (lo_eps + hi_eps);
        for i in 0..m {
            lower[i] = phi.values[i] - eps;
            upper[i] = phi.values[i] + eps;
        }
        solve_tube(&phi.nodes, &lower, &upper, z, &mut trial);
        let e = segment_energy(&phi.nodes, &trial);
        if e <= 1.0 {
            hi_eps = eps;
            std::mem::swap(&mut best, &mut trial);
            best_energy = e;
        } else {
            lo_eps = eps;
        }
    }
    Ok(StrassenQueryResult {
        distance: hi_eps,
        witness: GridFunction {
            nodes: phi.nodes.clone(),
            values: best,
            zero: z,
        },
        iterations,
        energy_of_witness: best_energy,
    })
}

/// `sup_{g ∈ S₀} ‖g‖`, attained by `g(s) = max(s, 0)`.
pub fn max_abs_over_s0() -> f64 {
    1.0
}

/// Finite list of `m` distinct members of `S₀` on the default 65-node grid.
///
/// The first five are `0`, `s/√2`, `−s/√2`, the one-sided full-budget ramp
/// `max(s, 0)` and the symmetric hat `min(|s|, 1 − |s|)/√2`; further members
/// are mirrored and shrunk copies.
pub fn test_set(m: usize) -> Vec<GridFunction> {
    let nodes = crate::empirical::default_s_grid(crate::empirical::DEFAULT_S_GRID)
        .expect("default grid is valid");
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let shapes: Vec<Box<dyn Fn(f64) -> f64>> = vec![
        Box::new(move |s| s * r2),
        Box::new(move |s| -s * r2),
        Box::new(|s: f64| s.max(0.0)),
        Box::new(move |s: f64| s.abs().min(1.0 - s.abs()) * r2),
        Box::new(|s: f64| (-s).max(0.0)),
        Box::new(move |s: f64| -s.abs().min(1.0 - s.abs()) * r2),
        Box::new(|s: f64| -s.max(0.0)),
        Box::new(|s: f64| -(-s).max(0.0)),
    ];
    let mut out = Vec::with_capacity(m);
    if m == 0 {
        return out;
    }
    out.push(GridFunction::from_fn(nodes.clone(), |_| 0.0).expect("valid"));
    let mut scale = 1.0;
    'outer: loop {
        for shape in &shapes {
            if out.len() == m {
                break 'outer;
            }
            out.push(GridFunction::from_fn(nodes.clone(), |s| scale * shape(s)).expect("valid"));
        }
        scale *= 0.5;
    }
    out
}

/// A random member of `S₀` on `nodes`: Gaussian-like increments rescaled to a
/// uniformly drawn energy in `[0, 1]`.
pub fn random_member<R: Rng + ?Sized>(rng: &mut R, nodes: &[f64]) -> Result<GridFunction> {
    let zero = nodes
        .iter()
        .position(|&s| s == 0.0)
        .ok_or_else(|| Error::InvalidGrid("0 must be a node".into()))?;
    let m = nodes.len();
    let mut values = vec![0.0; m];
    for i in zero + 1..m {
        let step: f64 = rng.random_range(-1.0..1.0);
        values[i] = values[i - 1] + step * (nodes[i] - nodes[i - 1]).sqrt();
    }
    for i in (0..zero).rev() {
        let step: f64 = rng.random_range(-1.0..1.0);
        values[i] = values[i + 1] + step * (nodes[i + 1] - nodes[i]).sqrt();
    }
    let e = segment_energy(nodes, &values);
    let target: f64 = rng.random_range(0.0..1.0);
    if e > 0.0 {
        let c = (target / e).sqrt();
        values.iter_mut().for_each(|v| *v *= c);
    }
    GridFunction::new(nodes.to_vec(), values)
}

/// Largest `‖g‖` found over [`test_set`] and `samples` random members; never
/// exceeds [`max_abs_over_s0`].
pub fn confirm_max_abs_over_s0<R: Rng + ?Sized>(rng: &mut R, samples: usize) -> Result<f64> {
    let nodes = crate::empirical::default_s_grid(crate::empirical::DEFAULT_S_GRID)?;
    let mut best = test_set(8).iter().map(sup_norm).fold(0.0, f64::max);
    for _ in 0..samples {
        best = best.max(sup_norm(&random_member(rng, &nodes)?));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::default_s_grid;

    fn grid() -> Vec<f64> {
        default_s_grid(65).unwrap()
    }

    #[test]
    fn energy_examples() {
        let z = GridFunction::from_fn(grid(), |_| 0.0).unwrap();
        let id = GridFunction::from_fn(grid(), |s| s).unwrap();
        let r = GridFunction::from_fn(grid(), |s| s / 2f64.sqrt()).unwrap();
        assert_eq!(energy(&z), 0.0);
        assert!((energy(&id) - 2.0).abs() < 1e-12);
        assert!((energy(&r) - 1.0).abs() < 1e-12);
        assert!(is_member(&z, 0.0));
        assert!(!is_member(&id, 1e-9));
        assert!(is_member(&r, 1e-12));
    }

    #[test]
    fn sup_norm_examples() {
        let g = GridFunction::new(vec![-1.0, 0.0, 1.0], vec![0.0, 3.0, -5.0]).unwrap();
        assert_eq!(sup_norm(&g), 5.0);
        let id = GridFunction::from_fn(grid(), |s| s).unwrap();
        assert_eq!(sup_norm(&id), 1.0);
        let left = GridFunction::from_fn(grid(), |s| (-s).max(0.0)).unwrap();
        assert_eq!(sup_norm(&left), 1.0);
        assert_eq!(sup_norm_plus(&left), 0.0);
    }

    #[test]
    fn grid_function_validation() {
        assert!(GridFunction::new(vec![-1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(GridFunction::new(vec![-1.0, 0.0, 0.5], vec![0.0; 3]).is_err());
        assert!(GridFunction::new(vec![-1.0, 0.5, 0.0, 1.0], vec![0.0; 4]).is_err());
        assert!(GridFunction::new(vec![-1.0, 0.0, 1.0], vec![0.0, f64::NAN, 0.0]).is_err());
        assert!(GridFunction::new(vec![-1.0, 0.0, 1.0], vec![0.0; 2]).is_err());
    }

    #[test]
    fn constant_tube_gives_zero_path() {
        let lo = GridFunction::from_fn(grid(), |_| -0.1).unwrap();
        let hi = GridFunction::from_fn(grid(), |_| 0.1).unwrap();
        let (e, g) = taut_string_min_energy(&lo, &hi).unwrap();
        assert_eq!(e, 0.0);
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_tube_gives_shrunk_slope() {
        let lo = GridFunction::from_fn(grid(), |s| s - 0.1).unwrap();
        let hi = GridFunction::from_fn(grid(), |s| s + 0.1).unwrap();
        let (e, g) = taut_string_min_energy(&lo, &hi).unwrap();
        assert!((e - 1.62).abs() < 1e-12, "{e}");
        assert!((g.eval(1.0) - 0.9).abs() < 1e-12);
        assert!((g.eval(-1.0) + 0.9).abs() < 1e-12);
    }

    #[test]
    fn infeasible_pin_is_rejected() {
        let lo = GridFunction::from_fn(grid(), |_| 0.1).unwrap();
        let hi = GridFunction::from_fn(grid(), |_| 0.2).unwrap();
        assert!(matches!(
            taut_string_min_energy(&lo, &hi),
            Err(Error::Infeasible(_))
        ));
        let crossed = GridFunction::from_fn(grid(), |s| if s > 0.5 { -1.0 } else { 0.0 }).unwrap();
        assert!(taut_string_min_energy(&lo.shifted(-0.1), &crossed).is_err());
    }

    #[test]
    fn distance_examples() {
        let zero = GridFunction::from_fn(grid(), |_| 0.0).unwrap();
        assert_eq!(distance_to_s0(&zero).unwrap().distance, 0.0);
        let r = GridFunction::from_fn(grid(), |s| s / 2f64.sqrt()).unwrap();
        assert!(distance_to_s0(&r).unwrap().distance < 1e-6);
        let id = GridFunction::from_fn(grid(), |s| s).unwrap();
        let q = distance_to_s0(&id).unwrap();
        assert!(
            (q.distance - (1.0 - 1.0 / 2f64.sqrt())).abs() < 1e-6,
            "{}",
            q.distance
        );
        assert!(q.energy_of_witness <= 1.0 + 1e-6);
        assert!(q.witness.sup_distance(&id).unwrap() <= q.distance + 1e-6);
        assert!(distance_to_s0(&id.shifted(0.1)).is_err());
    }

    #[test]
    fn test_set_members() {
        let set = test_set(20);
        assert_eq!(set.len(), 20);
        for (i, g) in set.iter().enumerate() {
            assert!(is_member(g, 1e-9), "element {i}");
            for h in &set[..i] {
                assert!(g.sup_distance(h).unwrap() > 0.0, "duplicate at {i}");
            }
        }
        assert!(sup_norm(&set[0]) == 0.0);
        assert!((energy(&set[1]) - 1.0).abs() < 1e-12);
        assert_eq!(sup_norm(&set[3]), 1.0);
        assert_eq!(test_set(5).len(), 5);
    }

    #[test]
    fn max_abs_confirmation() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        assert_eq!(max_abs_over_s0(), 1.0);
        let best = confirm_max_abs_over_s0(&mut rng, 1000).unwrap();
        assert!(best <= 1.0 + 1e-9);
        assert!(best >= 1.0 - 1e-12);
    }
}
