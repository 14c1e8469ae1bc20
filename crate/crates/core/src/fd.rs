//! Central differences with one Richardson extrapolation step.

/// Derivative estimate of a vector-valued function of one variable.
#[derive(Debug, Clone, Copy)]
pub struct Derivative<const N: usize> {
    pub value: [f64; N],
    /// Componentwise `|extrapolated - central(h/2)|`, an upper estimate of the
    /// truncation error of the plain central difference.
    pub error: [f64; N],
}

/// Differentiate `f` at offset zero. `f` receives the offset from the base
/// point. Uses `D(h)` and `D(h/2)` combined as `(4 D(h/2) - D(h)) / 3`.
pub fn central_richardson<const N: usize>(mut f: impl FnMut(f64) -> [f64; N], h: f64) -> Derivative<N> {
    let (fp, fm) = (f(h), f(-h));
    let (hp, hm) = (f(0.5 * h), f(-0.5 * h));
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for i in 0..N {
        let coarse = (fp[i] - fm[i]) / (2.0 * h);
        let fine = (hp[i] - hm[i]) / h;
        value[i] = (4.0 * fine - coarse) / 3.0;
        error[i] = (value[i] - fine).abs();
    }
    Derivative { value, error }
}

pub fn central_richardson_scalar(f: impl Fn(f64) -> f64, h: f64) -> (f64, f64) {
    let d = central_richardson(|t| [f(t)], h);
    (d.value[0], d.error[0])
}
