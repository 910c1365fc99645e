use alloc::format;
use alloc::string::String;

use super::params::ParamSet;
use crate::error::{Error, Result};

/// Denominator floor so that near-zero gradients are compared absolutely.
pub const GRAD_CHECK_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Tensor and component index of the worst discrepancy.
    pub worst: Option<(String, usize)>,
    pub components_checked: usize,
    pub passed: bool,
}

/// Compares analytic gradients against central finite differences.
///
/// `loss_fn` returns the loss together with its analytic gradient tape at
/// the given parameters; the tape is only read at the unperturbed point.
/// Relative error per component is `|a - n| / max(|a|, |n|, GRAD_CHECK_FLOOR)`.
pub fn grad_check<P, F>(loss_fn: F, params: &P, step: f64, tolerance: f64) -> Result<GradCheckReport>
where
    P: ParamSet + Clone,
    F: Fn(&P) -> Result<(f64, P)>,
{
    if !(1e-6..=1e-4).contains(&step) {
        return Err(Error::Domain(format!(
            "finite-difference step {step} outside [1e-6, 1e-4]"
        )));
    }
    let (base, analytic) = loss_fn(params)?;
    if !base.is_finite() {
        return Err(Error::Training(String::from(
            "gradient check: loss is non-finite at the unperturbed point",
        )));
    }
    let analytic: alloc::vec::Vec<(String, alloc::vec::Vec<f64>)> = analytic
        .tensors()
        .into_iter()
        .map(|t| (t.name, t.values.to_vec()))
        .collect();

    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        components_checked: 0,
        passed: true,
    };
    let n_tensors = analytic.len();
    for t in 0..n_tensors {
        let len = analytic[t].1.len();
        for i in 0..len {
            let original = probe.tensors()[t].values[i];
            let eval = |probe: &mut P, value: f64| -> Result<f64> {
                probe.tensors_mut()[t].values[i] = value;
                let (loss, _) = loss_fn(probe)?;
                if !loss.is_finite() {
                    return Err(Error::Training(format!(
                        "gradient check: non-finite loss when perturbing {}[{i}]",
                        analytic[t].0
                    )));
                }
                Ok(loss)
            };
            let plus = eval(&mut probe, original + step)?;
            let minus = eval(&mut probe, original - step)?;
            probe.tensors_mut()[t].values[i] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let exact = analytic[t].1[i];
            let scale = exact.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
            let rel = (exact - numeric).abs() / scale;
            report.components_checked += 1;
            if rel > report.max_relative_error || report.worst.is_none() {
                report.max_relative_error = rel;
                report.worst = Some((analytic[t].0.clone(), i));
            }
        }
    }
    report.passed = report.max_relative_error <= tolerance;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn constant_loss_has_zero_error() {
        let params = vec![0.1, 0.2, 0.3];
        let report = grad_check(|p: &Vec<f64>| Ok((4.0, p.zeros_like())), &params, 1e-5, 1e-9)
            .unwrap();
        assert_eq!(report.max_relative_error, 0.0);
        assert!(report.passed);
        assert_eq!(report.components_checked, 3);
    }

    #[test]
    fn detects_wrong_gradient() {
        let params = vec![1.0, -2.0];
        let loss = |p: &Vec<f64>| Ok((p[0] * p[0] + 3.0 * p[1], vec![2.0 * p[0], 1.0]));
        let report = grad_check(loss, &params, 1e-5, 1e-6).unwrap();
        assert!(!report.passed);
        assert_eq!(report.worst, Some((String::from("values"), 1)));
    }

    #[test]
    fn step_range_enforced() {
        let params = vec![1.0];
        let loss = |p: &Vec<f64>| Ok((p[0], vec![1.0]));
        assert!(matches!(grad_check(loss, &params, 1e-2, 1e-6), Err(Error::Domain(_))));
    }

    #[test]
    fn non_finite_loss_is_reported_with_name() {
        let params = vec![0.0, 1e-5];
        let loss = |p: &Vec<f64>| {
            let v = if p[1] > 1.5e-5 { f64::NAN } else { p[0] };
            Ok((v, vec![1.0, 0.0]))
        };
        let err = grad_check(loss, &params, 1e-5, 1e-6).unwrap_err();
        assert!(matches!(err, Error::Training(msg) if msg.contains("values[1]")));
    }
}
