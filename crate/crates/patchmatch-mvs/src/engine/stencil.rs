//! Distant-region checkerboard sampling stencil.
//!
//! Hypotheses are sampled from eight regions placed away from the pixel
//! being updated: 10 samples along each image axis at odd distances 5..23,
//! and 12 samples per diagonal quadrant on the two lattice diagonals nearest
//! the 45 degree line. Every offset has odd Manhattan parity, so a pixel of
//! one checkerboard color only ever reads hypotheses of the other color, and
//! no offset comes closer than Chebyshev distance 2.

/// Eight sampling regions; axis regions carry 10 offsets, diagonals 12.
#[derive(Debug, Clone)]
pub struct PropagationStencil {
    regions: Vec<Vec<(i32, i32)>>,
}

impl PropagationStencil {
    pub fn new() -> PropagationStencil {
        let axis: Vec<i32> = (0..10).map(|k| 5 + 2 * k).collect();
        let up: Vec<(i32, i32)> = axis.iter().map(|&d| (0, -d)).collect();
        let down: Vec<(i32, i32)> = axis.iter().map(|&d| (0, d)).collect();
        let left: Vec<(i32, i32)> = axis.iter().map(|&d| (-d, 0)).collect();
        let right: Vec<(i32, i32)> = axis.iter().map(|&d| (d, 0)).collect();

        // Up-right quadrant base pairs {(k, -k-1), (k+1, -k)}, k = 2..=7,
        // mirrored into the other three quadrants.
        let mut up_right = Vec::with_capacity(12);
        for k in 2..=7i32 {
            up_right.push((k, -k - 1));
            up_right.push((k + 1, -k));
        }
        let down_right: Vec<(i32, i32)> = up_right.iter().map(|&(x, y)| (x, -y)).collect();
        let down_left: Vec<(i32, i32)> = up_right.iter().map(|&(x, y)| (-x, -y)).collect();
        let up_left: Vec<(i32, i32)> = up_right.iter().map(|&(x, y)| (-x, y)).collect();

        PropagationStencil {
            regions: vec![up, down, left, right, up_right, down_right, down_left, up_left],
        }
    }

    pub fn regions(&self) -> &[Vec<(i32, i32)>] {
        &self.regions
    }
}

impl Default for PropagationStencil {
    fn default() -> Self {
        PropagationStencil::new()
    }
}
