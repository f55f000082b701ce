//! Nelder–Mead restricted to the unit cube by projection.

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
}

fn clamp_unit(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Minimise `f` over `[0, 1]^d` starting from `x0` with an initial simplex of
/// edge `step`. Non-finite values are treated as `+inf`.
pub(crate) fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], step: f64, max_evals: usize) -> Minimum {
    let d = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let mut start = x0.to_vec();
    clamp_unit(&mut start);
    simplex.push((start.clone(), eval(&start)));
    for i in 0..d {
        let mut p = start.clone();
        p[i] = if p[i] + step <= 1.0 { p[i] + step } else { p[i] - step };
        clamp_unit(&mut p);
        let fp = eval(&p);
        simplex.push((p, fp));
    }
    let mut evals = d + 1;

    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[d].1;
        let spread = (worst - best).abs();
        let diameter = simplex[1..]
            .iter()
            .map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if diameter < 1e-13 || (best.is_finite() && spread <= 1e-16 * best.abs() + 1e-300 && diameter < 1e-9) {
            break;
        }

        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|(p, _)| p[j]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| {
            let mut p: Vec<f64> = centroid.iter().zip(&simplex[d].0).map(|(c, w)| c + t * (w - c)).collect();
            clamp_unit(&mut p);
            p
        };

        let xr = along(-1.0);
        let fr = eval(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe);
            evals += 1;
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        // Outside contraction when the reflection improved on the worst point.
        let xc = along(if fr < simplex[d].1 { -0.5 } else { 0.5 });
        let fc = eval(&xc);
        evals += 1;
        if fc < simplex[d].1.min(fr) {
            simplex[d] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for (p, fp) in simplex.iter_mut().skip(1) {
            for (v, b) in p.iter_mut().zip(&x_best) {
                *v = b + 0.5 * (*v - b);
            }
            *fp = eval(p);
        }
        evals += d;
    }
    let (x, f) = simplex.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty simplex");
    Minimum { x, f }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_minimum() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 10.0 * (x[1] - 0.7).powi(2);
        let m = nelder_mead(&f, &[0.9, 0.1], 0.2, 5000);
        assert!((m.x[0] - 0.3).abs() < 1e-7 && (m.x[1] - 0.7).abs() < 1e-7, "{m:?}");
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| (x[0] + 1.0).powi(2) + (x[1] - 2.0).powi(2);
        let m = nelder_mead(&f, &[0.5, 0.5], 0.1, 5000);
        assert!(m.x[0].abs() < 1e-9 && (m.x[1] - 1.0).abs() < 1e-9, "{m:?}");
    }

    #[test]
    fn rosenbrock_scaled() {
        let f = |x: &[f64]| {
            let (a, b) = (4.0 * x[0] - 2.0, 4.0 * x[1] - 2.0);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let m = nelder_mead(&f, &[0.2, 0.2], 0.1, 20_000);
        assert!(m.f < 1e-12, "{m:?}");
    }
}
