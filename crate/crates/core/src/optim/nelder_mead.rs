//! Nelder-Mead simplex search (reflect / expand / contract / shrink).

use super::ObjectiveFn;

/// Standard simplex coefficients plus the termination controls.
#[derive(Debug, Clone, PartialEq)]
pub struct NmConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Converged once every vertex lies within this distance of the best.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for NmConfig {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            tolerance: 1e-8,
            max_iters: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    /// Fitness (maximization sense) at `x`.
    pub value: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out before the simplex collapsed;
    /// the result is then the best point evaluated so far.
    pub converged: bool,
    /// Best fitness seen after each iteration.
    pub trace: Vec<f64>,
}

/// Maximize `f` by running the simplex loop on `-f`.
///
/// The initial simplex is `x0` plus per-coordinate offsets of
/// `max(0.05 * |x0_i|, 0.00025)`. The returned point is never worse than any
/// vertex evaluated during the search.
pub fn nelder_mead(f: &dyn ObjectiveFn, x0: &[f64], cfg: &NmConfig) -> NmResult {
    let n = x0.len();
    let g = |x: &[f64]| -f.value(x);

    let mut best_seen = x0.to_vec();
    let mut best_seen_g = g(x0);
    let eval = |x: &[f64], best_seen: &mut Vec<f64>, best_seen_g: &mut f64| {
        let v = g(x);
        if v < *best_seen_g || best_seen_g.is_nan() {
            *best_seen = x.to_vec();
            *best_seen_g = v;
        }
        v
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        let step = (0.05 * v[i].abs()).max(0.00025);
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex
        .iter()
        .map(|v| eval(v, &mut best_seen, &mut best_seen_g))
        .collect();

    let mut iterations = 0;
    let mut converged = false;
    let mut trace = Vec::with_capacity(cfg.max_iters);
    while iterations < cfg.max_iters {
        let mut order: Vec<usize> = (0..simplex.len()).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(a.cmp(&b)));
        let best = order[0];
        let second_worst = order[n - 1];
        let worst = order[n];

        let spread = order[1..]
            .iter()
            .map(|&i| {
                simplex[i]
                    .iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0f64, f64::max);
        if spread < cfg.tolerance {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| {
                order[..n].iter().map(|&i| simplex[i][j]).sum::<f64>() / n as f64
            })
            .collect();
        let toward = |coeff: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + coeff * (c - w))
                .collect()
        };

        let reflected = toward(cfg.reflection);
        let f_r = eval(&reflected, &mut best_seen, &mut best_seen_g);
        if f_r < values[best] {
            let expanded = toward(cfg.expansion);
            let f_e = eval(&expanded, &mut best_seen, &mut best_seen_g);
            if f_e < f_r {
                simplex[worst] = expanded;
                values[worst] = f_e;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_r;
            }
        } else if f_r < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_r;
        } else if f_r < values[worst] {
            // Outside contraction, between reflected point and centroid.
            let outside = toward(cfg.contraction * cfg.reflection);
            let f_oc = eval(&outside, &mut best_seen, &mut best_seen_g);
            if f_oc <= f_r {
                simplex[worst] = outside;
                values[worst] = f_oc;
            } else {
                shrink(&mut simplex, best, cfg.shrink);
                for (i, v) in simplex.iter().enumerate() {
                    values[i] = eval(v, &mut best_seen, &mut best_seen_g);
                }
            }
        } else {
            // Inside contraction, between worst point and centroid.
            let inside = toward(-cfg.contraction);
            let f_ic = eval(&inside, &mut best_seen, &mut best_seen_g);
            if f_ic < values[worst] {
                simplex[worst] = inside;
                values[worst] = f_ic;
            } else {
                shrink(&mut simplex, best, cfg.shrink);
                for (i, v) in simplex.iter().enumerate() {
                    values[i] = eval(v, &mut best_seen, &mut best_seen_g);
                }
            }
        }
        iterations += 1;
        trace.push(-best_seen_g);
    }

    NmResult {
        x: best_seen,
        value: -best_seen_g,
        iterations,
        converged,
        trace,
    }
}

fn shrink(simplex: &mut [Vec<f64>], best: usize, coeff: f64) {
    let anchor = simplex[best].clone();
    for (i, vertex) in simplex.iter_mut().enumerate() {
        if i == best {
            continue;
        }
        for (v, a) in vertex.iter_mut().zip(&anchor) {
            *v = a + coeff * (*v - a);
        }
    }
}
