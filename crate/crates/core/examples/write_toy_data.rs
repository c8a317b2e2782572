//! Regenerates the toy containers under `data/`:
//!
//! ```text
//! cargo run -p kgcn-core --example write_toy_data -- data
//! ```

use std::path::PathBuf;

use kgcn_core::dataset::{toy_citation, triangle, write_container};

fn main() -> kgcn_core::Result<()> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    for ds in [toy_citation(), triangle()] {
        let dir = root.join(&ds.name);
        write_container(&ds, &dir)?;
        println!("{}: {} nodes, {} edges", dir.display(), ds.n_nodes(), ds.graph.n_edges());
    }
    Ok(())
}
