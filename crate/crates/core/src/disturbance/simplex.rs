//! Derivative-free simplex refinement (Nelder-Mead) in four dimensions.
//!
//! The objective is nonsmooth at eigenvalue crossings, so a simplex method
//! is used instead of anything gradient-based. The routine is fully
//! deterministic: no randomness enters after the starting point.

const DIM: usize = 4;
const INIT_STEP: f64 = 0.1;

/// Minimizes `f` from `x0`. Stops when the simplex value spread falls
/// below `rel_tol` relative to the best value, or after `max_iters`.
pub fn nelder_mead<F>(f: F, x0: [f64; DIM], max_iters: usize, rel_tol: f64) -> [f64; DIM]
where
    F: Fn(&[f64; DIM]) -> f64,
{
    let mut verts: Vec<[f64; DIM]> = Vec::with_capacity(DIM + 1);
    verts.push(x0);
    for i in 0..DIM {
        let mut v = x0;
        v[i] += INIT_STEP;
        verts.push(v);
    }
    let mut values: Vec<f64> = verts.iter().map(|v| f(v)).collect();

    for _ in 0..max_iters {
        // Order vertices by value (stable: equal values keep insertion order).
        let mut order: Vec<usize> = (0..=DIM).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let second_worst = order[DIM - 1];
        let worst = order[DIM];

        if (values[worst] - values[best]).abs() <= rel_tol * (values[best].abs() + rel_tol) {
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = [0.0; DIM];
        for &idx in order.iter().take(DIM) {
            for d in 0..DIM {
                centroid[d] += verts[idx][d];
            }
        }
        for c in centroid.iter_mut() {
            *c /= DIM as f64;
        }

        let blend = |t: f64| {
            let mut x = [0.0; DIM];
            for d in 0..DIM {
                x[d] = centroid[d] + t * (centroid[d] - verts[worst][d]);
            }
            x
        };

        let reflected = blend(1.0);
        let f_reflected = f(&reflected);

        if f_reflected < values[best] {
            let expanded = blend(2.0);
            let f_expanded = f(&expanded);
            if f_expanded < f_reflected {
                verts[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                verts[worst] = reflected;
                values[worst] = f_reflected;
            }
        } else if f_reflected < values[second_worst] {
            verts[worst] = reflected;
            values[worst] = f_reflected;
        } else {
            let (contracted, f_contracted) = if f_reflected < values[worst] {
                let x = blend(0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = blend(-0.5);
                let v = f(&x);
                (x, v)
            };
            if f_contracted < values[worst].min(f_reflected) {
                verts[worst] = contracted;
                values[worst] = f_contracted;
            } else {
                // Shrink toward the best vertex.
                let anchor = verts[best];
                for idx in 0..=DIM {
                    if idx == best {
                        continue;
                    }
                    for d in 0..DIM {
                        verts[idx][d] = anchor[d] + 0.5 * (verts[idx][d] - anchor[d]);
                    }
                    values[idx] = f(&verts[idx]);
                }
            }
        }
    }

    let best = (0..=DIM)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("simplex is nonempty");
    verts[best]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_a_shifted_quadratic() {
        let target = [0.3, -0.2, 0.7, 0.1];
        let f = |x: &[f64; 4]| {
            x.iter()
                .zip(target)
                .map(|(xi, ti)| (xi - ti) * (xi - ti))
                .sum::<f64>()
        };
        let x = nelder_mead(f, [0.0; 4], 2000, 1e-12);
        for (xi, ti) in x.iter().zip(target) {
            assert!((xi - ti).abs() < 1e-4, "{xi} vs {ti}");
        }
    }

    #[test]
    fn handles_nonsmooth_objectives() {
        // f = max(|x0 - 1|, |x1 + 1|) + |x2| + |x3|, kinked at the optimum.
        let f = |x: &[f64; 4]| {
            (x[0] - 1.0).abs().max((x[1] + 1.0).abs()) + x[2].abs() + x[3].abs()
        };
        let x = nelder_mead(f, [0.0; 4], 4000, 1e-12);
        assert!(f(&x) < 1e-3);
    }
}
