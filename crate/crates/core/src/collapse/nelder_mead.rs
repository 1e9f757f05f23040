/// Result of a two-parameter Nelder–Mead minimization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Minimum {
    pub point: [f64; 2],
    pub value: f64,
    pub iterations: usize,
}

/// Downhill simplex in two dimensions with the standard coefficients
/// (reflection 1, expansion 2, contraction ½, shrink ½).
///
/// Stops when the simplex diameter drops below `xtol` and the spread of
/// values below `ftol`, or after `max_iter` iterations.
pub(crate) fn minimize<F, E>(mut f: F, start: [f64; 2], step: [f64; 2], xtol: f64, ftol: f64, max_iter: usize) -> Result<Minimum, E>
where
    F: FnMut([f64; 2]) -> Result<f64, E>,
{
    let mut simplex = [start, [start[0] + step[0], start[1]], [start[0], start[1] + step[1]]];
    let mut values = [f(simplex[0])?, f(simplex[1])?, f(simplex[2])?];
    let mut iterations = 0;

    while iterations < max_iter {
        // order best → worst; stable so ties keep their insertion order
        let mut idx = [0, 1, 2];
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = idx.map(|k| simplex[k]);
        values = idx.map(|k| values[k]);

        let diameter = (1..3)
            .map(|k| ((simplex[k][0] - simplex[0][0]).powi(2) + (simplex[k][1] - simplex[0][1]).powi(2)).sqrt())
            .fold(0.0, f64::max);
        if diameter < xtol && (values[2] - values[0]).abs() < ftol {
            break;
        }
        iterations += 1;

        let centroid = [(simplex[0][0] + simplex[1][0]) / 2.0, (simplex[0][1] + simplex[1][1]) / 2.0];
        let along = |t: f64| [centroid[0] + t * (simplex[2][0] - centroid[0]), centroid[1] + t * (simplex[2][1] - centroid[1])];

        let reflected = along(-1.0);
        let fr = f(reflected)?;
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(expanded)?;
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
            continue;
        }
        if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[2] {
            let c = along(-0.5);
            (c, f(c)?)
        } else {
            let c = along(0.5);
            (c, f(c)?)
        };
        if fc < values[2].min(fr) {
            simplex[2] = contracted;
            values[2] = fc;
            continue;
        }
        for k in 1..3 {
            simplex[k] = [
                simplex[0][0] + 0.5 * (simplex[k][0] - simplex[0][0]),
                simplex[0][1] + 0.5 * (simplex[k][1] - simplex[0][1]),
            ];
            values[k] = f(simplex[k])?;
        }
    }

    let best = (0..3).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Ok(Minimum { point: simplex[best], value: values[best], iterations })
}
