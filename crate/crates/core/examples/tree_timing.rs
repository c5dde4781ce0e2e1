use std::time::Instant;

fn main() {
    for depth in [12u32, 13, 14] {
        let t0 = Instant::now();
        let tree = alphacf::tree::generate_tree(depth).unwrap();
        println!(
            "depth {depth}: {} intervals, {} final gaps, {:.2?}",
            tree.intervals.len(),
            tree.final_gaps().len(),
            t0.elapsed()
        );
    }
}
