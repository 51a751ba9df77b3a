//! Numeric grid arguments.

/// Parses `start:step:end` (inclusive), a comma-separated list, or a single
/// number. Ranges are materialized as `start + i * step` so values do not
/// accumulate rounding drift.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, step, end] = parts[..] else {
            return Err(format!("range `{text}` must have the form start:step:end"));
        };
        let (start, step, end) = (number(start)?, number(step)?, number(end)?);
        if step.is_nan() || step <= 0.0 {
            return Err(format!("range step must be > 0, got {step}"));
        }
        if end < start {
            return Err(format!("range end {end} is below its start {start}"));
        }
        let span = (end - start) / step;
        let count = (span + 1e-9).floor() as usize;
        Ok((0..=count).map(|i| start + i as f64 * step).collect())
    } else {
        text.split(',').map(number).collect()
    }
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{}` is not a number", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{}` is not finite", s.trim()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusive_range_by_index() {
        let g = parse_grid("0:0.05:0.5").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 3.0 * 0.05);
        assert_eq!(g[10], 10.0 * 0.05);
    }

    #[test]
    fn range_end_off_the_lattice_is_dropped() {
        assert_eq!(parse_grid("0:0.3:1").unwrap().len(), 4);
        assert_eq!(parse_grid("1:1:1").unwrap(), vec![1.0]);
    }

    #[test]
    fn lists_and_scalars() {
        assert_eq!(parse_grid("0.1, 0.4,2").unwrap(), vec![0.1, 0.4, 2.0]);
        assert_eq!(parse_grid("0.2").unwrap(), vec![0.2]);
    }

    #[test]
    fn malformed_grids() {
        for bad in ["0:0:1", "1:0.1:0", "a", "0:1", "0:1:2:3", "inf", ""] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }
}
