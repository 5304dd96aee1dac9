use super::{ErrorSchedule, Relaxation};
use crate::error::{Error, Result};
use crate::hilbert::Vector;
use crate::resolvents::Resolvent;

/// Krasnosel'skii–Mann iteration `x_{n+1} = x_n + mu_n (T x_n + c_n - x_n)`
/// for a nonexpansive `t`; stops once `|T x - x| <= tol` and returns `x`.
///
/// `mu` must be a Krasnosel'skii–Mann relaxation (values in `(0, 1)`).
pub fn km_iterate(
    t: impl Fn(&Vector) -> Result<Vector>,
    x0: &Vector,
    mu: &Relaxation,
    c: &ErrorSchedule,
    max_iter: usize,
    tol: f64,
) -> Result<Vector> {
    if mu.upper() > 1.0 {
        return Err(Error::InvalidParameter(
            "Krasnosel'skii-Mann relaxation must take values in (0,1)".into(),
        ));
    }
    c.validate()?;
    let mut x = x0.clone();
    let mut residual = f64::INFINITY;
    for n in 0..max_iter {
        let tx = t(&x)?;
        residual = tx.distance(&x);
        if residual <= tol {
            return Ok(x);
        }
        let perturbed = &tx + &c.at(n, x.dim());
        x = x.axpy(mu.at(n), &(&perturbed - &x));
    }
    Err(Error::MaxIterations {
        iterations: max_iter,
        residual,
        last: x,
    })
}

/// `x -> R_{gamma F}(R_{gamma G} x)`, the nonexpansive map behind the
/// Douglas–Rachford iteration.
pub fn reflection_composition<'a>(
    jf: &'a dyn Resolvent,
    jg: &'a dyn Resolvent,
) -> impl Fn(&Vector) -> Result<Vector> + 'a {
    move |x| jf.reflect(&jg.reflect(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifunctions::Bifunction;
    use crate::hilbert::ConvexSet;
    use crate::resolvents::ResolventOracle;
    use crate::solver::RelaxationRule;

    fn half() -> Relaxation {
        Relaxation::km(RelaxationRule::Constant(0.5)).unwrap()
    }

    #[test]
    fn identity_returns_start() {
        let x0 = Vector::from([1.5, -2.0]);
        let x = km_iterate(|x| Ok(x.clone()), &x0, &half(), &ErrorSchedule::Zero, 10, 1e-12).unwrap();
        assert_eq!(x, x0);
    }

    #[test]
    fn projection_fixed_point() {
        let c = ConvexSet::cube(1, -1.0, 1.0).unwrap();
        let x = km_iterate(
            |x| Ok(c.project(x)),
            &Vector::from([4.0]),
            &half(),
            &ErrorSchedule::Zero,
            200,
            1e-10,
        )
        .unwrap();
        assert!((x[0] - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn reflections_of_interval_projection() {
        let p = ResolventOracle::new(Bifunction::zero(ConvexSet::cube(1, -1.0, 1.0).unwrap()), 1.0).unwrap();
        let t = reflection_composition(&p, &p);
        let x = km_iterate(&t, &Vector::from([3.0]), &half(), &ErrorSchedule::Zero, 50, 1e-12).unwrap();
        assert!(x[0].abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn dr_relaxation_is_rejected() {
        let lambda = Relaxation::constant(1.0).unwrap();
        assert!(km_iterate(
            |x| Ok(x.clone()),
            &Vector::from([0.0]),
            &lambda,
            &ErrorSchedule::Zero,
            5,
            1e-9
        )
        .is_err());
    }

    #[test]
    fn max_iter_carries_last_iterate() {
        let shift = |x: &Vector| Ok(x + &Vector::from([1.0]));
        match km_iterate(shift, &Vector::from([0.0]), &half(), &ErrorSchedule::Zero, 4, 1e-9) {
            Err(Error::MaxIterations { iterations, last, .. }) => {
                assert_eq!(iterations, 4);
                assert_eq!(last, Vector::from([2.0]));
            }
            other => panic!("{other:?}"),
        }
    }
}
