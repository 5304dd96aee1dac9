use crate::hilbert::Vector;

/// A product of closed intervals `[lo_i, hi_i]`, bounds possibly infinite.
///
/// Covers every image the supported operators produce: single points,
/// subdifferentials of weighted L1 terms and normal cones of boxes.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Image {
    pub fn point(u: &Vector) -> Self {
        Image {
            lo: u.as_slice().to_vec(),
            hi: u.as_slice().to_vec(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Image {
            lo: vec![0.0; dim],
            hi: vec![0.0; dim],
        }
    }

    /// # Panics
    /// If the bounds have different lengths or some `lo_i > hi_i`.
    pub fn product(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "interval bounds differ in length");
        assert!(lo.iter().zip(&hi).all(|(l, h)| l <= h), "empty interval in image");
        Image { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lo
    }

    pub fn upper(&self) -> &[f64] {
        &self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(|v| v.is_finite())
    }

    pub fn contains(&self, u: &Vector, tol: f64) -> bool {
        u.dim() == self.dim()
            && u.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&v, (&l, &h))| v >= l - tol && v <= h + tol)
    }

    /// `sup { <d, u> : u in image }`, possibly `+inf`.
    pub fn support(&self, d: &Vector) -> f64 {
        d.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&di, (&l, &h))| {
                if di > 0.0 {
                    di * h
                } else if di < 0.0 {
                    di * l
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// A point attaining [`Image::support`]; coordinates with `d_i = 0` take
    /// the element of smallest magnitude. Infinite where the support is.
    pub fn maximizer(&self, d: &Vector) -> Vector {
        d.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&di, (&l, &h))| {
                if di > 0.0 {
                    h
                } else if di < 0.0 {
                    l
                } else {
                    0.0f64.max(l).min(h)
                }
            })
            .collect::<Vec<_>>()
            .into()
    }

    pub fn minkowski_sum(&self, other: &Image) -> Image {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in Minkowski sum");
        Image {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a + b).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn translate(&self, shift: &Vector) -> Image {
        self.minkowski_sum(&Image::point(shift))
    }

    /// The corner points of a bounded image (a single point when degenerate).
    pub fn vertices(&self) -> Option<Vec<Vector>> {
        if !self.is_bounded() {
            return None;
        }
        let mut out = vec![Vec::with_capacity(self.dim())];
        for (&l, &h) in self.lo.iter().zip(&self.hi) {
            let choices: &[f64] = if l == h { &[l] } else { &[l, h] };
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    choices.iter().map(move |&c| {
                        let mut p = prefix.clone();
                        p.push(c);
                        p
                    })
                })
                .collect();
        }
        Some(out.into_iter().map(Vector::from).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_of_half_line() {
        let cone = Image::product(vec![0.0], vec![f64::INFINITY]);
        assert_eq!(cone.support(&Vector::from([-2.0])), 0.0);
        assert_eq!(cone.support(&Vector::from([0.0])), 0.0);
        assert_eq!(cone.support(&Vector::from([1.0])), f64::INFINITY);
        assert!(cone.contains(&Vector::from([5.0]), 0.0));
        assert!(!cone.contains(&Vector::from([-0.1]), 1e-8));
    }

    #[test]
    fn maximizer_attains_support() {
        let img = Image::product(vec![-1.0, 2.0], vec![1.0, 3.0]);
        let d = Vector::from([-0.5, 4.0]);
        let u = img.maximizer(&d);
        assert_eq!(u, Vector::from([-1.0, 3.0]));
        assert_eq!(d.dot(&u), img.support(&d));
        assert_eq!(img.maximizer(&Vector::zeros(2)), Vector::from([0.0, 2.0]));
    }

    #[test]
    fn vertices_and_sums() {
        let img = Image::product(vec![-1.0, 0.0], vec![1.0, 0.0]);
        assert_eq!(img.vertices().unwrap().len(), 2);
        let shifted = img.translate(&Vector::from([1.0, 1.0]));
        assert_eq!(shifted.lower(), &[0.0, 1.0]);
        assert_eq!(shifted.upper(), &[2.0, 1.0]);
        assert!(Image::product(vec![0.0], vec![f64::INFINITY]).vertices().is_none());
    }
}
