//! Builds a k-nearest-neighbour sensor graph and prints its Laplacian
//! spectrum, the graph frequencies used by the joint basis.
//!
//! ```text
//! cargo run --example graph_spectrum -- [n_sensors] [k]
//! ```

use mht_ggsp::graph::{build_knn_graph, write_edge_list, SpectralBasis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> mht_ggsp::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(30, |a| a.parse().expect("n_sensors"));
    let k: usize = args.next().map_or(4, |a| a.parse().expect("k"));

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let coords: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)])
        .collect();
    let knn = build_knn_graph(&coords, k)?;
    if let Some(asked) = knn.clamped_from {
        println!("k = {asked} clamped to {}", knn.k);
    }
    let graph = knn.graph;
    println!("{} vertices, {} edges", graph.n_vertices(), graph.n_edges());

    let spectral = SpectralBasis::of_graph(&graph)?;
    let zero_modes = spectral.eigenvalues().iter().filter(|&&l| l < 1e-9).count();
    println!("connected components: {zero_modes}");
    for (i, l) in spectral.eigenvalues().iter().enumerate().take(8) {
        let phi = spectral.eigenvectors().column(i);
        let (lo, hi) = phi
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            });
        println!(
            "lambda_{:<2} = {l:>8.4}   phi range [{lo:+.3}, {hi:+.3}]",
            i + 1
        );
    }

    let mut edges = Vec::new();
    write_edge_list(&graph, &mut edges)?;
    let text = String::from_utf8(edges).expect("utf8");
    println!("edge list head:");
    for line in text.lines().take(6) {
        println!("  {line}");
    }
    Ok(())
}
