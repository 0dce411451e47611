//! Summary statistics over sample slices.

use crate::scalar::Real;

pub fn mean<T: Real>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().copied().fold(T::zero(), |a, b| a + b) / T::of_usize(xs.len()))
}

/// Midpoint median (average of the two central values for even lengths).
pub fn median<T: Real>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::of(2.0)
    })
}

pub fn max<T: Real>(xs: &[T]) -> Option<T> {
    xs.iter().copied().reduce(T::max)
}

pub fn min<T: Real>(xs: &[T]) -> Option<T> {
    xs.iter().copied().reduce(T::min)
}

/// Population standard deviation.
pub fn std_dev<T: Real>(xs: &[T]) -> Option<T> {
    let m = mean(xs)?;
    let var = xs.iter().map(|&x| (x - m) * (x - m)).fold(T::zero(), |a, b| a + b)
        / T::of_usize(xs.len());
    Some(var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median::<f64>(&[]), None);
        assert_eq!(mean(&[1.0f32, 2.0, 3.0]), Some(2.0));
        assert_eq!(max(&[1.0, 5.0, 2.0]), Some(5.0));
        assert_eq!(min(&[1.0, 5.0, 2.0]), Some(1.0));
        assert_eq!(std_dev(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]), Some(2.0));
    }
}
