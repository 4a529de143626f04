use super::InterpError;

/// Value at `x` of the polynomial through `(nodes, values)`, barycentric form.
pub fn lagrange_eval(nodes: &[f64], values: &[f64], x: f64) -> Result<f64, InterpError> {
    if nodes.is_empty() || nodes.len() != values.len() {
        return Err(InterpError::InvalidArgument(format!(
            "{} nodes, {} values",
            nodes.len(),
            values.len()
        )));
    }
    let weights = barycentric_weights(nodes)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&xj, &yj), &wj) in nodes.iter().zip(values).zip(&weights) {
        let d = x - xj;
        if d == 0.0 {
            return Ok(yj);
        }
        num += wj / d * yj;
        den += wj / d;
    }
    Ok(num / den)
}

fn barycentric_weights(nodes: &[f64]) -> Result<Vec<f64>, InterpError> {
    nodes
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            let mut prod = 1.0;
            for (k, &xk) in nodes.iter().enumerate() {
                if k != j {
                    let d = xj - xk;
                    if d == 0.0 {
                        return Err(InterpError::DuplicateNodes(xj));
                    }
                    prod *= d;
                }
            }
            Ok(1.0 / prod)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_square() {
        let xs = [-1.0, 0.5, 2.0];
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        for x in [-3.0, 0.0, 0.5, 1.7] {
            assert!((lagrange_eval(&xs, &ys, x).unwrap() - x * x).abs() < 1e-12);
        }
    }

    #[test]
    fn single_node_is_constant() {
        assert_eq!(lagrange_eval(&[0.3], &[4.0], 10.0).unwrap(), 4.0);
    }

    #[test]
    fn duplicates_rejected() {
        assert!(matches!(lagrange_eval(&[1.0, 1.0], &[0.0, 1.0], 0.0), Err(InterpError::DuplicateNodes(_))));
    }
}
