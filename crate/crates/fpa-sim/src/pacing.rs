//! Projected online gradient ascent on the dual multiplier λ.
//!
//! The multiplier rises when estimated spend runs above the target rate
//! ρ = B/T and is projected back onto λ >= 0 otherwise. Initialization
//! is λ = 0.

#[derive(Debug, Clone)]
pub struct DualController {
    lambda: f64,
    step_size: f64,
    target_rate: f64,
}

impl DualController {
    pub fn new(step_size: f64, target_rate: f64) -> Self {
        DualController { lambda: 0.0, step_size, target_rate }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn target_rate(&self) -> f64 {
        self.target_rate
    }

    /// `λ <- max(0, λ - ε(ρ - c̃))` where `c̃` is the estimated spend of
    /// the bid just submitted.
    pub fn update(&mut self, estimated_cost: f64) {
        debug_assert!(estimated_cost >= 0.0);
        self.lambda = (self.lambda - self.step_size * (self.target_rate - estimated_cost)).max(0.0);
    }

    /// Upper bound `v̄/ρ - 1` that the full-information dynamics keep λ
    /// under whenever ε < 1/ρ.
    pub fn lambda_cap(&self, value_bound: f64) -> f64 {
        value_bound / self.target_rate - 1.0
    }

    /// Whether the λ cap is guaranteed by the update dynamics (needs
    /// ε < 1/ρ).
    pub fn cap_applies(&self) -> bool {
        self.step_size < 1.0 / self.target_rate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn update_moves_against_the_spend_gap() {
        let mut c = DualController::new(0.001, 0.01);
        c.lambda = 0.5;
        c.update(0.2);
        assert!((c.lambda() - 0.50019).abs() < 1e-12, "{}", c.lambda());
    }

    #[test]
    fn on_target_spend_leaves_lambda_unchanged() {
        let mut c = DualController::new(0.01, 0.3);
        c.lambda = 0.123;
        c.update(0.3);
        assert_eq!(c.lambda(), 0.123);
    }

    #[test]
    fn projection_clamps_at_zero() {
        let mut c = DualController::new(0.01, 0.5);
        c.lambda = 0.0001;
        c.update(0.0);
        assert_eq!(c.lambda(), 0.0);
    }

    proptest! {
        #[test]
        fn lambda_never_goes_negative(
            steps in proptest::collection::vec(0.0f64..1.0, 1..200),
            eps in 1e-4f64..0.5,
            rho in 0.01f64..1.0,
        ) {
            let mut c = DualController::new(eps, rho);
            for cost in steps {
                c.update(cost);
                prop_assert!(c.lambda() >= 0.0);
            }
        }

        #[test]
        fn update_is_lipschitz_in_the_cost(
            lam0 in 0.0f64..5.0,
            eps in 1e-4f64..0.5,
            rho in 0.01f64..1.0,
            c1 in 0.0f64..1.0,
            c2 in 0.0f64..1.0,
        ) {
            let mut a = DualController::new(eps, rho);
            let mut b = DualController::new(eps, rho);
            a.lambda = lam0;
            b.lambda = lam0;
            a.update(c1);
            b.update(c2);
            prop_assert!((a.lambda() - b.lambda()).abs() <= eps * (c1 - c2).abs() + 1e-12);
        }
    }
}
