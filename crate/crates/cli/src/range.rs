use crate::error::CliError;

fn numbers(s: &str, parts: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let v: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Validation(format!("{what}: expected {parts} numbers separated by ':', got {s:?}")))?;
    if v.len() != parts || v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Validation(format!(
            "{what}: expected {parts} finite numbers, got {s:?}"
        )));
    }
    Ok(v)
}

/// `min:max`.
pub fn interval(s: &str, what: &str) -> Result<(f64, f64), CliError> {
    let v = numbers(s, 2, what)?;
    if v[1] <= v[0] {
        return Err(CliError::Validation(format!("{what}: max must exceed min in {s:?}")));
    }
    Ok((v[0], v[1]))
}

/// `min:max:step`, inclusive of `max` up to rounding.
pub fn stepped(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let v = numbers(s, 3, what)?;
    let (a, b, h) = (v[0], v[1], v[2]);
    if h <= 0.0 || b < a {
        return Err(CliError::Validation(format!(
            "{what}: need min <= max and step > 0 in {s:?}"
        )));
    }
    let count = ((b - a) / h + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(CliError::Validation(format!("{what}: {count} points is too many")));
    }
    Ok((0..count).map(|i| a + h * i as f64).collect())
}

/// `min:max:steps` with `steps` points, linear or logarithmic.
pub fn counted(s: &str, log: bool, what: &str) -> Result<Vec<f64>, CliError> {
    let v = numbers(s, 3, what)?;
    let (a, b) = (v[0], v[1]);
    if v[2].fract() != 0.0 || v[2] < 1.0 {
        return Err(CliError::Validation(format!(
            "{what}: step count must be a positive integer in {s:?}"
        )));
    }
    let n = v[2] as usize;
    if n == 1 {
        return Ok(vec![a]);
    }
    if log {
        if a * b <= 0.0 {
            return Err(CliError::Validation(format!(
                "{what}: log spacing needs ends of one sign in {s:?}"
            )));
        }
        let (la, lb) = (a.abs().ln(), b.abs().ln());
        return Ok((0..n)
            .map(|i| a.signum() * (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
            .collect());
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}
