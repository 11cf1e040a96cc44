use crate::control::ManifoldModel;
use crate::error::{Error, Result};
use crate::pipeline::OptimalPoint;

/// Least squares through the origin on (v^2, F): K = sum(F v^2) / sum(v^4),
/// plus the coefficient of determination of that fit.
fn law_fit(points: impl Iterator<Item = (f64, f64)>) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = points.map(|(v, f)| (v * v, f)).collect();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateSurface(
            "zero reeling speeds leave the force law unidentifiable".into(),
        ));
    }
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let k = sxy / sxx;
    let mean: f64 = pts.iter().map(|(_, y)| y).sum::<f64>() / pts.len() as f64;
    let ss_tot: f64 = pts.iter().map(|(_, y)| (y - mean).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|(x, y)| (y - k * x).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res.abs() < 1e-9 {
        // all forces identical and on the law
        1.0
    } else {
        0.0
    };
    Ok((k, r2))
}

/// Fits both phase force laws over the verified optimal points.
pub fn fit_manifold(points: &[OptimalPoint]) -> Result<ManifoldModel> {
    let verified: Vec<&OptimalPoint> = points.iter().filter(|p| p.verified).collect();
    if verified.len() < 2 {
        return Err(Error::TooFewOptima(verified.len()));
    }
    let (k_trac, r2_trac) = law_fit(verified.iter().map(|p| (p.v_trac, p.f_trac)))?;
    let (k_retr, r2_retr) = law_fit(verified.iter().map(|p| (p.v_retr, p.f_retr)))?;
    let model = ManifoldModel {
        k_trac,
        k_retr,
        r2_trac,
        r2_retr,
    };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn point(v_w: f64, v_trac: f64, f_trac: f64, v_retr: f64, f_retr: f64) -> OptimalPoint {
        OptimalPoint {
            v_w,
            v_trac,
            v_retr,
            power: 0.0,
            f_trac,
            f_retr,
            verified: true,
        }
    }

    fn exact_points() -> Vec<OptimalPoint> {
        // (v^2, F) = (1, 500), (4, 2000), (9, 4500) on both laws
        vec![
            point(6.5, 1.0, 500.0, -1.0, 500.0),
            point(8.0, 2.0, 2000.0, -2.0, 2000.0),
            point(10.0, 3.0, 4500.0, -3.0, 4500.0),
        ]
    }

    #[test]
    fn exact_quadratic_data_recovered_exactly() {
        let m = fit_manifold(&exact_points()).unwrap();
        assert_eq!(m.k_trac, 500.0);
        assert_eq!(m.k_retr, 500.0);
        assert_eq!(m.r2_trac, 1.0);
        assert_eq!(m.r2_retr, 1.0);
    }

    #[test]
    fn force_scaling_scales_coefficient_linearly() {
        let scaled: Vec<OptimalPoint> = exact_points()
            .into_iter()
            .map(|mut p| {
                p.f_trac *= 3.0;
                p.f_retr *= 3.0;
                p
            })
            .collect();
        let m = fit_manifold(&scaled).unwrap();
        assert_relative_eq!(m.k_trac, 1500.0, max_relative = 1e-15);
        assert_relative_eq!(m.k_retr, 1500.0, max_relative = 1e-15);
    }

    #[test]
    fn order_invariant() {
        let mut pts = exact_points();
        pts.push(point(7.0, 1.5, 1300.0, -1.4, 1100.0)); // off the law
        let a = fit_manifold(&pts).unwrap();
        pts.reverse();
        let b = fit_manifold(&pts).unwrap();
        assert_relative_eq!(a.k_trac, b.k_trac, max_relative = 1e-12);
        assert_relative_eq!(a.r2_trac, b.r2_trac, max_relative = 1e-12);
    }

    #[test]
    fn unverified_points_are_ignored() {
        let mut pts = exact_points();
        pts[2].verified = false;
        pts.push(point(9.0, 50.0, 1.0, -50.0, 1.0)); // would wreck the fit
        pts[3].verified = false;
        let m = fit_manifold(&pts).unwrap();
        assert_relative_eq!(m.k_trac, 500.0, max_relative = 1e-12);
    }

    #[test]
    fn too_few_verified_points_rejected() {
        let mut pts = exact_points();
        pts.truncate(1);
        assert!(matches!(fit_manifold(&pts), Err(Error::TooFewOptima(1))));
    }
}
