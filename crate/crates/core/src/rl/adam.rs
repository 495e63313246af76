use super::RlError;

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    /// One bias-corrected update. Leaves everything untouched if any
    /// gradient entry is non-finite.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<(), RlError> {
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(RlError::NonFiniteGradient(i));
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        let step = self.lr / c1;
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= step * *m / ((*v / c2).sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_params() {
        let mut a = Adam::new(3, 0.1);
        let mut p = vec![1.0, -2.0, 3.0];
        a.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(a.t, 1);
    }

    #[test]
    fn first_step_is_signed_lr() {
        for g in [0.5, -3.0, 1e-3] {
            let mut a = Adam::new(1, 5e-5);
            let mut p = vec![0.0];
            a.step(&mut p, &[g]).unwrap();
            let want = -5e-5 * g / (g.abs() + 1e-8);
            assert!((p[0] - want).abs() < 1e-15, "{g}: {} vs {want}", p[0]);
        }
    }

    #[test]
    fn non_finite_aborts() {
        let mut a = Adam::new(2, 0.1);
        let mut p = vec![1.0, 1.0];
        assert!(matches!(a.step(&mut p, &[0.1, f64::NAN]), Err(RlError::NonFiniteGradient(1))));
        assert_eq!(p, vec![1.0, 1.0]);
        assert_eq!(a.t, 0);
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut a = Adam::new(4, 0.01);
            let mut p = vec![0.5; 4];
            for i in 0..100 {
                let g: Vec<f64> = p.iter().map(|x| x * (i as f64).cos()).collect();
                a.step(&mut p, &g).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }
}
