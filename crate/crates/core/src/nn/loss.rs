use crate::error::Result;
use crate::tensor::{lit, Scalar, Tensor};

/// Mean over all elements of `(prediction - target)^2`.
pub fn mse<T: Scalar>(prediction: &Tensor<T>, target: &Tensor<T>) -> Result<T> {
    prediction.expect_same_shape(target, "mse")?;
    let total: f64 = prediction
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let d = (p - t).as_f64();
            d * d
        })
        .sum();
    Ok(lit(total / prediction.len() as f64))
}

/// Gradient of [`mse`] with respect to the prediction, scaled by `upstream`.
pub fn mse_backward<T: Scalar>(prediction: &Tensor<T>, target: &Tensor<T>, upstream: T) -> Tensor<T> {
    let k = upstream * lit::<T>(2.0 / prediction.len() as f64);
    let d = prediction
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| k * (p - t))
        .collect();
    Tensor::from_parts(prediction.shape().to_vec(), d)
}

/// Mean over elements of the KL divergence between `N(mu, exp(log_scale)^2)`
/// and `N(0, 1)`.
pub fn gaussian_kl<T: Scalar>(mu: &Tensor<T>, log_scale: &Tensor<T>) -> Result<T> {
    mu.expect_same_shape(log_scale, "gaussian_kl")?;
    let total: f64 = mu
        .data()
        .iter()
        .zip(log_scale.data())
        .map(|(&m, &s)| {
            let (m, s) = (m.as_f64(), s.as_f64());
            0.5 * (m * m + (2.0 * s).exp() - 1.0 - 2.0 * s)
        })
        .sum();
    Ok(lit(total / mu.len() as f64))
}

/// `(dmu, dlog_scale)` of [`gaussian_kl`].
pub fn gaussian_kl_backward<T: Scalar>(mu: &Tensor<T>, log_scale: &Tensor<T>, upstream: T) -> (Tensor<T>, Tensor<T>) {
    let k = upstream / lit::<T>(mu.len() as f64);
    let dmu = mu.map(|m| k * m);
    let ds = log_scale.map(|s| k * ((s + s).exp() - T::one()));
    (dmu, ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_zero() {
        let x = Tensor::<f32>::from_slice(&[3], &[0.3, -2.0, 5.0]).unwrap();
        assert_eq!(mse(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset() {
        let p = Tensor::<f32>::zeros(&[2]).unwrap();
        let t = Tensor::full(&[2], 2.0).unwrap();
        assert_eq!(mse(&p, &t).unwrap(), 4.0);
    }

    #[test]
    fn shape_mismatch() {
        let p = Tensor::<f32>::zeros(&[2]).unwrap();
        let t = Tensor::zeros(&[3]).unwrap();
        assert!(mse(&p, &t).is_err());
    }

    #[test]
    fn kl_zero_at_prior() {
        let z = Tensor::<f64>::zeros(&[4]).unwrap();
        assert_eq!(gaussian_kl(&z, &z).unwrap(), 0.0);
    }
}
