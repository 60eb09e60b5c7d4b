use crate::CliError;

/// Parse `start:end:count` (end points included) or a single value.
pub fn parse_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Input(format!("expected `start:end:count` or a number, got `{spec}`"));
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad);
    match parts.as_slice() {
        [x] => Ok(vec![num(x)?]),
        [a, b, n] => {
            let (a, b) = (num(a)?, num(b)?);
            let n: usize = n.parse().map_err(|_| bad())?;
            Ok(match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
            })
        }
        _ => Err(bad()),
    }
}

/// Comma-separated list of numbers.
pub fn parse_list(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Input(format!("not a number: `{s}`")))
        })
        .collect()
}
