//! Causal attention mask.

/// Mask over a `size x size` attention matrix: position `i` may attend to
/// positions `j <= i`; strictly-upper-triangular entries are blocked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CausalMask {
    size: usize,
}

impl CausalMask {
    pub fn new(size: usize) -> Self {
        CausalMask { size }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn allows(&self, i: usize, j: usize) -> bool {
        j <= i
    }

    /// Number of allowed positions in row `i` (always `i + 1`).
    #[inline]
    pub fn allowed_in_row(&self, i: usize) -> usize {
        i + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_strict_upper_triangle() {
        let m = CausalMask::new(4);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m.allows(i, j), j <= i);
            }
        }
        assert_eq!(m.allowed_in_row(0), 1);
        assert_eq!(m.allowed_in_row(3), 4);
    }
}
