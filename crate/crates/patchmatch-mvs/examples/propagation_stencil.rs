//! Visualize the distant-region checkerboard stencil and the multi-scale
//! window schedule.
//!
//! ```bash
//! cargo run --example propagation_stencil
//! ```

use patchmatch_mvs::cost::SparseWindow;
use patchmatch_mvs::engine::{PropagationStencil, ScaleSchedule};

fn main() {
    let stencil = PropagationStencil::new();
    let names = ["up", "down", "left", "right", "up-right", "down-right", "down-left", "up-left"];

    let mut total = 0;
    println!("sampling regions:");
    for (name, region) in names.iter().zip(stencil.regions()) {
        println!("  {name:<11} {:2} samples, e.g. {:?}", region.len(), &region[..3.min(region.len())]);
        total += region.len();
    }
    println!("  total       {total} samples, all on the opposite checkerboard color\n");

    // ASCII map: '#' = sample, 'o' = the pixel being updated, '.' = same
    // color as the center (never read), ' ' = opposite color, unsampled.
    let r = 24i32;
    for y in -r..=r {
        let mut line = String::new();
        for x in -r..=r {
            let sampled = stencil.regions().iter().any(|reg| reg.contains(&(x, y)));
            line.push(if x == 0 && y == 0 {
                'o'
            } else if sampled {
                '#'
            } else if (x + y).rem_euclid(2) == 0 {
                '.'
            } else {
                ' '
            });
        }
        println!("{line}");
    }

    println!("\nsparse matching windows (36 samples each):");
    for s in 0..4 {
        let w = SparseWindow::new(s);
        println!("  scale {s}: edge {:2} px, offsets at odd multiples of {}", w.edge(), 1 << s);
    }
    let sched = ScaleSchedule::new(2);
    println!(
        "\nschedule for s_max = 2: {} iterations, window edges {:?}",
        sched.total_iterations(),
        sched.window_edges()
    );
}
