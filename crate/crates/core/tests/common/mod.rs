//! Brute-force oracles written straight from the definitions. They share no
//! code with the library beyond orbit generation and the base metric.
#![allow(dead_code)]

use fkmdim::{OrbitSegment, StatePoint, SystemSpec};

/// `table[i][j] = d(T^i x, T^j y)`, evaluated point by point.
pub fn distance_table(sys: &SystemSpec, a: &OrbitSegment, b: &OrbitSegment) -> Vec<Vec<f64>> {
    a.points()
        .iter()
        .map(|p| b.points().iter().map(|q| sys.base_distance(p, q)).collect())
        .collect()
}

/// Largest order-preserving partial matching with every pair admitted, by
/// enumerating all equal-size row and column subsets.
pub fn exhaustive_max_match(table: &[Vec<f64>], admit: impl Fn(f64) -> bool) -> usize {
    let n = table.len();
    assert!(n <= 10, "exhaustive oracle is exponential");
    let mut best = 0;
    for rows in 0u32..1 << n {
        let k = rows.count_ones() as usize;
        if k <= best {
            continue;
        }
        let r: Vec<usize> = (0..n).filter(|i| rows >> i & 1 == 1).collect();
        for cols in 0u32..1 << n {
            if cols.count_ones() as usize != k {
                continue;
            }
            let c: Vec<usize> = (0..n).filter(|j| cols >> j & 1 == 1).collect();
            if r.iter().zip(&c).all(|(&i, &j)| admit(table[i][j])) {
                best = k;
                break;
            }
        }
    }
    best
}

/// Longest common subsequence style table, one cell at a time.
pub fn simple_max_match(table: &[Vec<f64>], admit: impl Fn(f64) -> bool) -> usize {
    let n = table.len();
    let mut m = vec![vec![0usize; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            m[i + 1][j + 1] = if admit(table[i][j]) {
                m[i][j] + 1
            } else {
                m[i][j + 1].max(m[i + 1][j])
            };
        }
    }
    m[n][n]
}

/// `f̄_{n,δ}` from the plain table.
pub fn f_bar(table: &[Vec<f64>], delta: f64) -> f64 {
    let n = table.len();
    (n - simple_max_match(table, |d| d < delta)) as f64 / n as f64
}

/// First grid point `k·step` with `f̄_{n,k·step} < k·step`.
pub fn swept_fk(table: &[Vec<f64>], step: f64) -> f64 {
    let mut k = 1u64;
    loop {
        let delta = k as f64 * step;
        if f_bar(table, delta) < delta {
            return delta;
        }
        k += 1;
    }
}

/// `d_FK_n <= r` straight from `inf{δ : f̄_δ < δ}`: every `δ > r` must satisfy
/// `f̄_δ < δ`. Just above `r`, pairs with `d <= r` are admitted, and the
/// unmatched fraction must not exceed `r`.
pub fn fk_at_most(table: &[Vec<f64>], r: f64) -> bool {
    let n = table.len();
    let unmatched = (n - simple_max_match(table, |d| d <= r)) as f64 / n as f64;
    unmatched <= r
}

/// Exact `d_FK_n` as the least candidate `c` (a table entry or `k/n`) with
/// `d_FK_n <= c`.
pub fn oracle_fk(table: &[Vec<f64>]) -> f64 {
    let n = table.len();
    let mut candidates: Vec<f64> = table.iter().flatten().copied().collect();
    candidates.extend((0..=n).map(|k| k as f64 / n as f64));
    candidates.sort_by(f64::total_cmp);
    candidates
        .into_iter()
        .filter(|&c| c > 0.0)
        .find(|&c| fk_at_most(table, c))
        .unwrap_or(0.0)
}

pub fn oracle_fk_points(sys: &SystemSpec, x: &StatePoint, y: &StatePoint, n: usize) -> f64 {
    if x == y {
        return 0.0;
    }
    let t = distance_table(sys, &sys.orbit(x, n).unwrap(), &sys.orbit(y, n).unwrap());
    oracle_fk(&t)
}

/// Brute-force packing value: every subset of `(point, length)` vertices,
/// kept when each pair is `2ε + band` apart at both of its lengths.
pub fn brute_packing_value(
    sys: &SystemSpec,
    pts: &[StatePoint],
    eps: f64,
    s: f64,
    n_min: usize,
    n_max: usize,
) -> f64 {
    let band = sys.band(n_max);
    let r = 2.0 * eps + band;
    let lengths: Vec<usize> = (n_min..=n_max).collect();
    // far[i][j][k]: d_FK_{lengths[k]}(x_i, x_j) > r
    let far: Vec<Vec<Vec<bool>>> = pts
        .iter()
        .map(|x| {
            pts.iter()
                .map(|y| {
                    lengths
                        .iter()
                        .map(|&n| {
                            let t = distance_table(sys, &sys.orbit(x, n).unwrap(), &sys.orbit(y, n).unwrap());
                            x != y && !fk_at_most(&t, r)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let vertices: Vec<(usize, usize)> = (0..pts.len())
        .flat_map(|i| (0..lengths.len()).map(move |k| (i, k)))
        .collect();
    assert!(vertices.len() <= 20, "brute packing is exponential");
    let mut best = 0.0f64;
    for mask in 0u32..1 << vertices.len() {
        let chosen: Vec<(usize, usize)> = (0..vertices.len())
            .filter(|v| mask >> v & 1 == 1)
            .map(|v| vertices[v])
            .collect();
        let ok = chosen.iter().enumerate().all(|(a, &(i, k))| {
            chosen[a + 1..]
                .iter()
                .all(|&(j, l)| i != j && far[i][j][k] && far[i][j][l])
        });
        if ok {
            let sum: f64 = chosen.iter().map(|&(_, k)| (-(lengths[k] as f64) * s).exp()).sum();
            best = best.max(sum);
        }
    }
    best
}

/// All set partitions of `0..m` as block lists.
pub fn set_partitions(m: usize) -> Vec<Vec<Vec<usize>>> {
    fn go(i: usize, m: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == m {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(i);
            go(i + 1, m, cur, out);
            cur[b].pop();
        }
        cur.push(vec![i]);
        go(i + 1, m, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    go(0, m, &mut Vec::new(), &mut out);
    out
}

/// `(candidate, n, covered targets)` for every open FK ball of the instance.
pub fn oracle_balls(
    sys: &SystemSpec,
    targets: &[StatePoint],
    candidates: &[StatePoint],
    eps: f64,
    n_min: usize,
    n_max: usize,
) -> Vec<(usize, usize, Vec<bool>)> {
    let mut balls = Vec::new();
    for (c, x) in candidates.iter().enumerate() {
        for n in n_min..=n_max {
            let cover: Vec<bool> = targets
                .iter()
                .map(|z| oracle_fk_points(sys, x, z, n) < eps)
                .collect();
            balls.push((c, n, cover));
        }
    }
    balls
}

/// Minimum of `Σ e^{-n_i s}` over subsets of balls covering every target.
pub fn brute_min_weight_cover(balls: &[(usize, usize, Vec<bool>)], targets: usize, s: f64) -> Option<f64> {
    assert!(balls.len() <= 20);
    let mut best: Option<f64> = None;
    for mask in 0u32..1 << balls.len() {
        let covered = (0..targets).all(|z| {
            (0..balls.len()).any(|b| mask >> b & 1 == 1 && balls[b].2[z])
        });
        if covered {
            let w: f64 = (0..balls.len())
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| (-(balls[b].1 as f64) * s).exp())
                .sum();
            best = Some(best.map_or(w, |v: f64| v.min(w)));
        }
    }
    best
}

/// Fractional cover LP `min Σ w_b c_b  s.t.  Σ_{b ∋ z} c_b >= 1, c >= 0` by
/// enumerating basic solutions: choose as many tight constraints as there are
/// variables, solve, keep the feasible optimum.
pub fn vertex_enumeration_cover(balls: &[(usize, usize, Vec<bool>)], targets: usize, s: f64) -> f64 {
    let k = balls.len();
    let w: Vec<f64> = balls.iter().map(|b| (-(b.1 as f64) * s).exp()).collect();
    // constraint rows: coverage (>= 1) then non-negativity (>= 0)
    let mut rows: Vec<(Vec<f64>, f64)> = (0..targets)
        .map(|z| ((0..k).map(|b| if balls[b].2[z] { 1.0 } else { 0.0 }).collect(), 1.0))
        .collect();
    rows.extend((0..k).map(|b| ((0..k).map(|j| if j == b { 1.0 } else { 0.0 }).collect(), 0.0)));
    let total = rows.len();
    assert!(total <= 16);
    let mut best = f64::INFINITY;
    for mask in 0u32..1 << total {
        if mask.count_ones() as usize != k {
            continue;
        }
        let chosen: Vec<&(Vec<f64>, f64)> = (0..total).filter(|r| mask >> r & 1 == 1).map(|r| &rows[r]).collect();
        let Some(c) = solve(chosen.iter().map(|r| r.0.clone()).collect(), chosen.iter().map(|r| r.1).collect()) else {
            continue;
        };
        let feasible = rows
            .iter()
            .all(|(a, b)| a.iter().zip(&c).map(|(x, y)| x * y).sum::<f64>() >= b - 1e-9);
        if feasible {
            best = best.min(w.iter().zip(&c).map(|(x, y)| x * y).sum());
        }
    }
    best
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// The four built-in systems at default parameters.
pub fn systems() -> Vec<SystemSpec> {
    ["full-shift-2", "unit-cube-shift", "rotation-alpha", "doubling-map"]
        .iter()
        .map(|s| SystemSpec::build(s, &[]).unwrap())
        .collect()
}

/// The 2-shift points `0101…`-style periodic patterns of length 2.
pub fn cylinders(sys: &SystemSpec) -> Vec<StatePoint> {
    [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]
        .iter()
        .map(|p| sys.periodic_point(p).unwrap())
        .collect()
}
