//! Exact solvers for the linear sum and linear bottleneck assignment
//! problems, plus a brute-force permutation oracle for testing.
//!
//! The sum solver is the shortest-augmenting-path method with dual
//! potentials (O(n³)); the bottleneck solver binary-searches the sorted
//! entry values with bipartite-matching feasibility checks. Both break ties
//! deterministically: the sum solver returns the lexicographically smallest
//! optimal permutation, the bottleneck solver the smallest total sum among
//! bottleneck-optimal permutations, then lexicographic.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Brute force refuses matrices larger than this (factorial growth).
pub const BRUTE_FORCE_LIMIT: usize = 9;

/// Reduced-cost slack treated as tight when extracting optimal edges.
const TIGHT_TOL: f64 = 1e-9;

/// A matrix of nonnegative assignment costs with the cluster ids the
/// rows/columns stand for.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    entries: DMatrix<f64>,
    row_labels: Vec<usize>,
    col_labels: Vec<usize>,
}

impl CostMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<CostMatrix> {
        let row_labels = (0..entries.nrows()).collect();
        let col_labels = (0..entries.ncols()).collect();
        Self::with_labels(entries, row_labels, col_labels)
    }

    pub fn with_labels(
        entries: DMatrix<f64>,
        row_labels: Vec<usize>,
        col_labels: Vec<usize>,
    ) -> Result<CostMatrix> {
        if entries.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Input(
                "cost matrix entries must be finite and nonnegative".into(),
            ));
        }
        if row_labels.len() != entries.nrows() || col_labels.len() != entries.ncols() {
            return Err(Error::Input("cost matrix label lengths do not match shape".into()));
        }
        Ok(CostMatrix {
            entries,
            row_labels,
            col_labels,
        })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn row_labels(&self) -> &[usize] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[usize] {
        &self.col_labels
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    fn require_square(&self) -> Result<usize> {
        if self.nrows() != self.ncols() {
            return Err(Error::Input(format!(
                "assignment needs a square matrix, got {}x{}; pad first",
                self.nrows(),
                self.ncols()
            )));
        }
        Ok(self.nrows())
    }
}

/// An assignment `row i -> column permutation[i]` and its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub permutation: Vec<usize>,
    pub value: f64,
}

/// Objective for the brute-force oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Sum,
    Bottleneck,
}

fn row_sum(c: &DMatrix<f64>, sigma: &[usize]) -> f64 {
    sigma.iter().enumerate().map(|(i, &j)| c[(i, j)]).sum()
}

fn row_max(c: &DMatrix<f64>, sigma: &[usize]) -> f64 {
    sigma
        .iter()
        .enumerate()
        .map(|(i, &j)| c[(i, j)])
        .fold(0.0, f64::max)
}

/// Shortest-augmenting-path LSAP on a square matrix. `f64::INFINITY` entries
/// are forbidden edges. Returns the matching and the dual potentials.
fn lsap_core(c: &DMatrix<f64>) -> Result<(Vec<usize>, Vec<f64>, Vec<f64>)> {
    let n = c.nrows();
    if n == 0 {
        return Ok((Vec::new(), Vec::new(), Vec::new()));
    }
    // 1-indexed arrays with a virtual column 0
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // matched_row[j] = row assigned to column j
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = c[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            if !delta.is_finite() {
                return Err(Error::Input("assignment infeasible: a row has no usable column".into()));
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // augment along the alternating path
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut sigma = vec![0usize; n];
    for j in 1..=n {
        sigma[matched_row[j] - 1] = j - 1;
    }
    Ok((sigma, u, v))
}

/// Kuhn's augmenting-path maximum matching over `adj` (row -> allowed columns).
/// Returns the size of a maximum matching respecting `pre_matched` columns.
fn max_matching(adj: &[Vec<usize>], n_cols: usize, banned_cols: &[bool]) -> usize {
    let mut col_of: Vec<Option<usize>> = vec![None; n_cols];
    let mut matched = 0usize;

    fn try_augment(
        row: usize,
        adj: &[Vec<usize>],
        banned: &[bool],
        seen: &mut [bool],
        col_of: &mut [Option<usize>],
    ) -> bool {
        for &j in &adj[row] {
            if banned[j] || seen[j] {
                continue;
            }
            seen[j] = true;
            if col_of[j].is_none()
                || try_augment(col_of[j].unwrap(), adj, banned, seen, col_of)
            {
                col_of[j] = Some(row);
                return true;
            }
        }
        false
    }

    for row in 0..adj.len() {
        let mut seen = vec![false; n_cols];
        if try_augment(row, adj, banned_cols, &mut seen, &mut col_of) {
            matched += 1;
        }
    }
    matched
}

/// Lexicographically smallest perfect matching inside the edge set `adj`.
fn lex_min_perfect_matching(n: usize, adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    let mut banned = vec![false; n];
    let mut sigma = vec![0usize; n];
    for i in 0..n {
        let mut fixed = None;
        for &j in &adj[i] {
            if banned[j] {
                continue;
            }
            banned[j] = true;
            let remaining: Vec<Vec<usize>> = adj[i + 1..].to_vec();
            if max_matching(&remaining, n, &banned) == n - i - 1 {
                fixed = Some(j);
                break;
            }
            banned[j] = false;
        }
        sigma[i] = fixed?;
    }
    Some(sigma)
}

/// Solve the restricted-or-plain LSAP and refine to the lexicographically
/// smallest optimal permutation via the tight-edge graph of the duals.
fn lsap_with_tie_break(c: &DMatrix<f64>) -> Result<Assignment> {
    let n = c.nrows();
    let (sigma, u, v) = lsap_core(c)?;
    if n == 0 {
        return Ok(Assignment {
            permutation: sigma,
            value: 0.0,
        });
    }
    let scale = c
        .iter()
        .filter(|v| v.is_finite())
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    let tau = TIGHT_TOL * scale;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if c[(i, j)].is_finite() && c[(i, j)] - u[i + 1] - v[j + 1] <= tau {
                adj[i].push(j);
            }
        }
    }
    let base_value = row_sum(c, &sigma);
    let best = match lex_min_perfect_matching(n, &adj) {
        Some(lex) => {
            let lex_value = row_sum(c, &lex);
            // the tight graph is tolerance-based; never report a worse value
            if lex_value <= base_value {
                Assignment {
                    permutation: lex,
                    value: lex_value,
                }
            } else {
                Assignment {
                    permutation: sigma,
                    value: base_value,
                }
            }
        }
        None => Assignment {
            permutation: sigma,
            value: base_value,
        },
    };
    Ok(best)
}

/// Minimize `Σ_i cost[i, σ(i)]` exactly over permutations.
pub fn solve_lsap(cost: &CostMatrix) -> Result<Assignment> {
    cost.require_square()?;
    lsap_with_tie_break(cost.entries())
}

/// Minimize `max_i cost[i, σ(i)]` exactly over permutations; among bottleneck
/// optima, the one with the smallest total sum, then lexicographic.
pub fn solve_lbap(cost: &CostMatrix) -> Result<Assignment> {
    let n = cost.require_square()?;
    if n == 0 {
        return Ok(Assignment {
            permutation: Vec::new(),
            value: 0.0,
        });
    }
    let c = cost.entries();
    let mut values: Vec<f64> = c.iter().cloned().collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();

    let feasible = |threshold: f64| -> bool {
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|&j| c[(i, j)] <= threshold).collect())
            .collect();
        max_matching(&adj, n, &vec![false; n]) == n
    };

    // smallest entry value admitting a perfect matching
    let (mut lo, mut hi) = (0usize, values.len() - 1);
    if !feasible(values[hi]) {
        return Err(Error::Input("assignment infeasible".into()));
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(values[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let bottleneck = values[lo];

    // among bottleneck-feasible edges, minimize the sum, then lexicographic
    let restricted = DMatrix::from_fn(n, n, |i, j| {
        if c[(i, j)] <= bottleneck {
            c[(i, j)]
        } else {
            f64::INFINITY
        }
    });
    let refined = lsap_with_tie_break(&restricted)?;
    Ok(Assignment {
        value: row_max(c, &refined.permutation),
        permutation: refined.permutation,
    })
}

/// Exhaustive optimum over all permutations, in lexicographic order so ties
/// resolve to the smallest permutation. Guarded to `n ≤ 9`.
pub fn brute_force_assignment(cost: &CostMatrix, objective: Objective) -> Result<Assignment> {
    let n = cost.require_square()?;
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::PermutationGuard {
            size: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if n == 0 {
        return Ok(Assignment {
            permutation: Vec::new(),
            value: 0.0,
        });
    }
    let c = cost.entries();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best: Option<(f64, f64, Vec<usize>)> = None; // (primary, secondary, σ)
    loop {
        let (primary, secondary) = match objective {
            Objective::Sum => (row_sum(c, &perm), 0.0),
            Objective::Bottleneck => (row_max(c, &perm), row_sum(c, &perm)),
        };
        let better = match &best {
            None => true,
            Some((bp, bs, _)) => primary < *bp || (primary == *bp && secondary < *bs),
        };
        if better {
            best = Some((primary, secondary, perm.clone()));
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let (value, _, permutation) = best.unwrap();
    Ok(Assignment { permutation, value })
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

    fn square(vals: &[f64], n: usize) -> CostMatrix {
        CostMatrix::new(DMatrix::from_row_slice(n, n, vals)).unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CostMatrix {
        CostMatrix::new(DMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..1.0))).unwrap()
    }

    #[test]
    fn lsap_prefers_diagonal() {
        let a = solve_lsap(&square(&[0.0, 1.0, 1.0, 0.0], 2)).unwrap();
        assert_eq!(a.permutation, vec![0, 1]);
        assert_eq!(a.value, 0.0);
    }

    #[test]
    fn lsap_all_ones_breaks_ties_lexicographically() {
        let a = solve_lsap(&square(&[1.0; 9], 3)).unwrap();
        assert_eq!(a.permutation, vec![0, 1, 2]);
        assert_eq!(a.value, 3.0);
    }

    #[test]
    fn lsap_rejects_non_square() {
        let c = CostMatrix::new(DMatrix::from_row_slice(1, 2, &[0.0, 1.0])).unwrap();
        assert!(solve_lsap(&c).is_err());
    }

    #[test]
    fn cost_matrix_rejects_bad_entries() {
        assert!(CostMatrix::new(DMatrix::from_row_slice(1, 1, &[-1.0])).is_err());
        assert!(CostMatrix::new(DMatrix::from_row_slice(1, 1, &[f64::NAN])).is_err());
        assert!(CostMatrix::new(DMatrix::from_row_slice(1, 1, &[f64::INFINITY])).is_err());
    }

    #[test]
    fn lsap_matches_brute_force_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..100 {
            let n = rng.gen_range(1..=7);
            let c = random_matrix(&mut rng, n);
            let solved = solve_lsap(&c).unwrap();
            let brute = brute_force_assignment(&c, Objective::Sum).unwrap();
            assert_eq!(solved.value, brute.value, "optimal values must agree exactly");
            assert_eq!(solved.permutation, brute.permutation);
        }
    }

    #[test]
    fn lbap_matches_brute_force_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        for _ in 0..100 {
            let n = rng.gen_range(1..=6);
            let c = random_matrix(&mut rng, n);
            let solved = solve_lbap(&c).unwrap();
            let brute = brute_force_assignment(&c, Objective::Bottleneck).unwrap();
            assert_eq!(solved.value, brute.value, "bottleneck values must agree exactly");
            assert_eq!(solved.permutation, brute.permutation);
        }
    }

    #[test]
    fn lbap_simple_cases() {
        let a = solve_lbap(&square(&[0.0, 1.0, 1.0, 0.0], 2)).unwrap();
        assert_eq!(a.value, 0.0);
        assert_eq!(a.permutation, vec![0, 1]);

        // every permutation must use row 1, whose minimum forces the bottleneck
        let c = square(&[0.1, 0.2, 0.3, 5.0, 6.0, 7.0, 0.1, 0.3, 0.2], 3);
        let a = solve_lbap(&c).unwrap();
        assert_eq!(a.value, 5.0);
    }

    #[test]
    fn brute_force_edges() {
        let empty = CostMatrix::new(DMatrix::zeros(0, 0)).unwrap();
        let a = brute_force_assignment(&empty, Objective::Sum).unwrap();
        assert_eq!(a.value, 0.0);
        assert!(a.permutation.is_empty());
        assert_eq!(solve_lsap(&empty).unwrap().value, 0.0);
        assert_eq!(solve_lbap(&empty).unwrap().value, 0.0);

        let single = square(&[3.25], 1);
        assert_eq!(
            brute_force_assignment(&single, Objective::Sum).unwrap().value,
            3.25
        );
        assert_eq!(
            brute_force_assignment(&single, Objective::Bottleneck)
                .unwrap()
                .value,
            3.25
        );

        let big = CostMatrix::new(DMatrix::zeros(10, 10)).unwrap();
        assert!(matches!(
            brute_force_assignment(&big, Objective::Sum),
            Err(Error::PermutationGuard { .. })
        ));
    }

    #[test]
    fn lsap_value_bounds_random_permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        for _ in 0..20 {
            let n = rng.gen_range(2..=8);
            let c = random_matrix(&mut rng, n);
            let opt = solve_lsap(&c).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            for _ in 0..1000 {
                // Fisher-Yates shuffle
                for i in (1..n).rev() {
                    let j = rng.gen_range(0..=i);
                    perm.swap(i, j);
                }
                assert!(opt.value <= row_sum(c.entries(), &perm) + 1e-12);
            }
        }
    }

    #[test]
    fn lbap_value_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        for _ in 0..50 {
            let n = rng.gen_range(1..=7);
            let c = random_matrix(&mut rng, n);
            let a = solve_lbap(&c).unwrap();
            // the value is attained by its own permutation
            assert_eq!(a.value, row_max(c.entries(), &a.permutation));
            // lower bound: the largest of the row minima
            let lower = (0..n)
                .map(|i| (0..n).map(|j| c.entries()[(i, j)]).fold(f64::INFINITY, f64::min))
                .fold(0.0f64, f64::max);
            assert!(a.value >= lower - 1e-15);
        }
    }

    #[test]
    fn constant_shift_raises_lsap_by_n_times_c() {
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        for _ in 0..20 {
            let n = rng.gen_range(1..=6);
            let c = random_matrix(&mut rng, n);
            let shift = rng.gen_range(0.1..2.0);
            let shifted = CostMatrix::new(c.entries().map(|v| v + shift)).unwrap();
            let a = solve_lsap(&c).unwrap();
            let b = solve_lsap(&shifted).unwrap();
            assert!((b.value - (a.value + n as f64 * shift)).abs() < 1e-9);
            assert_eq!(a.permutation, b.permutation);
        }
    }
}
