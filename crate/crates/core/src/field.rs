/// A scalar field whose sign encodes a binary prediction and whose zero set
/// is a decision boundary.
///
/// Implemented by [`crate::nn::MlpNetwork`]; tests and oracles plug in
/// analytic fields through [`FnField`].
pub trait MarginField: Sync {
    fn input_dim(&self) -> usize;

    fn margin_at(&self, x: &[f64]) -> f64;

    /// Margin and its gradient with respect to `x`.
    fn margin_grad_at(&self, x: &[f64]) -> (f64, Vec<f64>);

    /// Predicted label, `None` on the boundary itself.
    fn predict(&self, x: &[f64]) -> Option<u8> {
        let m = self.margin_at(x);
        if m > 0.0 {
            Some(1)
        } else if m < 0.0 {
            Some(0)
        } else {
            None
        }
    }
}

/// Adapts a pair of closures (value, gradient) into a [`MarginField`].
pub struct FnField<F, G> {
    dim: usize,
    value: F,
    grad: G,
}

impl<F, G> FnField<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn new(dim: usize, value: F, grad: G) -> Self {
        Self { dim, value, grad }
    }
}

impl<F, G> MarginField for FnField<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn margin_at(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn margin_grad_at(&self, x: &[f64]) -> (f64, Vec<f64>) {
        ((self.value)(x), (self.grad)(x))
    }
}

/// Affine field `w . x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearField {
    pub w: Vec<f64>,
    pub b: f64,
}

impl MarginField for LinearField {
    fn input_dim(&self) -> usize {
        self.w.len()
    }

    fn margin_at(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.b
    }

    fn margin_grad_at(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.margin_at(x), self.w.clone())
    }
}
