/// Mean and sample standard deviation of a set of replications.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    /// `std` uses the `n - 1` denominator and is 0 for fewer than two samples.
    pub fn of(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Summary::default();
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        };
        Summary { mean, std }
    }
}

/// Pooled standard deviation of two equally sized groups.
pub fn pooled_std(a: &Summary, b: &Summary) -> f64 {
    ((a.std * a.std + b.std * b.std) / 2.0).sqrt()
}
