//! Derivative-free simplex minimization with the standard
//! reflection/expansion/contraction/shrink coefficients (1, 2, 0.5, 0.5).

/// Options for the simplex search.
#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Terminate when the simplex diameter falls below this value.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Per-coordinate displacement used to build the initial simplex.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            tolerance: 1e-8,
            max_iter: 1000,
            initial_step: 1.0,
        }
    }
}

/// One accepted simplex state, for optimizer traces.
#[derive(Debug, Clone)]
pub struct TracePoint {
    pub iteration: usize,
    pub best_x: Vec<f64>,
    pub best_f: f64,
}

/// Result of a simplex minimization.
#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TracePoint>,
}

/// Minimize `f` starting from `x0`.
///
/// Non-finite objective values are treated as worst, so an objective may
/// return `+inf` outside its feasible region.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let dim = x0.len();
    assert!(dim >= 1, "objective must have at least one coordinate");

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let better = |a: f64, b: f64| a < b || (b.is_nan() && !a.is_nan());
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        // order ascending by objective, non-finite last
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        trace.push(TracePoint {
            iteration: iterations,
            best_x: simplex[best].clone(),
            best_f: values[best],
        });

        let diameter = order
            .iter()
            .map(|&i| {
                simplex[i]
                    .iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if diameter < opts.tolerance {
            converged = true;
            break;
        }

        // centroid of all vertices but the worst
        let mut centroid = vec![0.0; dim];
        for &i in &order[..dim] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x;
            }
        }
        for c in &mut centroid {
            *c /= dim as f64;
        }

        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&simplex[worst])
            .map(|(c, w)| c + ALPHA * (c - w))
            .collect();
        let f_reflect = f(&reflect);

        if better(f_reflect, values[second_worst]) && !better(f_reflect, values[best]) {
            simplex[worst] = reflect;
            values[worst] = f_reflect;
        } else if better(f_reflect, values[best]) {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&reflect)
                .map(|(c, r)| c + GAMMA * (r - c))
                .collect();
            let f_expand = f(&expand);
            if better(f_expand, f_reflect) {
                simplex[worst] = expand;
                values[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                values[worst] = f_reflect;
            }
        } else {
            let contract: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + RHO * (w - c))
                .collect();
            let f_contract = f(&contract);
            if better(f_contract, values[worst]) {
                simplex[worst] = contract;
                values[worst] = f_contract;
            } else {
                // shrink toward the best vertex
                for &i in &order[1..] {
                    let shrunk: Vec<f64> = simplex[best]
                        .iter()
                        .zip(&simplex[i])
                        .map(|(b, x)| b + SIGMA * (x - b))
                        .collect();
                    values[i] = f(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
        iterations += 1;
    }

    let mut best = 0;
    for i in 1..=dim {
        if values[i].total_cmp(&values[best]).is_lt() {
            best = i;
        }
    }
    NelderMeadResult {
        x: simplex[best].clone(),
        f: values[best],
        iterations,
        converged,
        trace,
    }
}
