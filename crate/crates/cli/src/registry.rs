//! Named window functions and normalizer formulas that configs refer to.

use sublaw_core::{RandomFunctional, Scalar};

pub const WINDOWS: [&str; 7] = [
    "identity",
    "sum",
    "avg",
    "normalized_sum",
    "diff",
    "product",
    "lag_product",
];

/// The window function `id` on coordinates `1..=m+1`.
pub fn window<S: Scalar>(id: &str, m: usize) -> Result<RandomFunctional<S>, String> {
    let w = m + 1;
    let f = match id {
        "identity" => {
            if m != 0 {
                return Err("`identity` reads one coordinate, so m must be 0".into());
            }
            RandomFunctional::coordinate(1)
        }
        "sum" => RandomFunctional::partial_sum(1, w),
        "avg" => {
            let k = S::from_usize_lossy(w);
            RandomFunctional::window(1, w, "avg", move |x: &[S]| x.iter().copied().sum::<S>() / k)
        }
        "normalized_sum" => {
            let k = S::from_usize_lossy(w).sqrt();
            RandomFunctional::window(1, w, "normalized_sum", move |x: &[S]| {
                x.iter().copied().sum::<S>() / k
            })
        }
        "diff" => {
            if m == 0 {
                return Err("`diff` needs m >= 1".into());
            }
            RandomFunctional::window(1, w, "diff", |x: &[S]| x[x.len() - 1] - x[0])
        }
        "product" => RandomFunctional::window(1, w, "product", |x: &[S]| {
            x.iter().copied().fold(S::one(), |a, b| a * b)
        }),
        "lag_product" => {
            if m == 0 {
                return Err("`lag_product` needs m >= 1".into());
            }
            RandomFunctional::window(1, w, "lag_product", |x: &[S]| x[0] * x[x.len() - 1])
        }
        other => {
            return Err(format!(
                "unknown window `{other}`; known: {}",
                WINDOWS.join(", ")
            ))
        }
    };
    Ok(f)
}

/// `a_1..=a_n` for a named formula. `pow:e` is `n^e`.
pub fn normalizer(formula: &str, n: usize) -> Result<Vec<f64>, String> {
    let f: Box<dyn Fn(f64) -> f64> = match formula {
        "n" => Box::new(|k| k),
        "n_log2n" => Box::new(|k: f64| k * (k + 1.0).log2()),
        other => match other.strip_prefix("pow:").map(str::parse::<f64>) {
            Some(Ok(e)) if e > 0.0 => Box::new(move |k: f64| k.powf(e)),
            _ => return Err(format!("unknown normalizer formula `{other}`")),
        },
    };
    Ok((1..=n).map(|k| f(k as f64)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_resolve() {
        for id in WINDOWS {
            let m = if id == "identity" { 0 } else { 2 };
            let f = window::<f64>(id, m).unwrap();
            assert_eq!(f.window_bounds(), (1, m + 1));
        }
        assert_eq!(window::<f64>("diff", 1).unwrap().evaluate(&[1.0, -1.0]), -2.0);
        assert!(window::<f64>("identity", 1).is_err());
        assert!(window::<f64>("nope", 0).is_err());
    }

    #[test]
    fn formulas() {
        assert_eq!(normalizer("n", 3).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(normalizer("pow:0.5", 4).unwrap()[3], 2.0);
        assert!(normalizer("pow:-1", 4).is_err());
        assert_eq!(normalizer("n_log2n", 1).unwrap(), vec![1.0]);
    }
}
