//! Compute the per-attribute meta-feature vector for each column of a small
//! table and show how min-max normalization maps it into [0, 1].
//!
//! cargo run -p vizrec --example metafeatures

use vizrec::metafeatures::{compute_metafeatures, MetaFeatureSchema, Normalizer};
use vizrec::tabular::parse_dataset;

const CSV: &str = "\
city,population,founded,region
Avalon,120000,1821-04-01,north
Brixton,98000,1790-07-15,south
Corvin,,1902-01-30,north
Dunmore,450000,1755-11-02,east
Elgin,61000,1888-05-19,south
";

fn main() -> vizrec::Result<()> {
    let dataset = parse_dataset("towns", CSV, None, None)?;
    let schema = MetaFeatureSchema::default();
    println!("schema version {}, K = {}", schema.version, schema.k);

    let vectors = dataset
        .attributes
        .iter()
        .map(|a| compute_metafeatures(a, &schema))
        .collect::<vizrec::Result<Vec<_>>>()?;
    let normalizer = Normalizer::fit(&vectors);

    for (attr, raw) in dataset.attributes.iter().zip(&vectors) {
        let scaled = normalizer.apply(raw)?;
        let nonzero = scaled.values.iter().filter(|x| **x != 0.0).count();
        println!(
            "{:<11} {:<13} first values {:?}  nonzero after scaling: {nonzero}",
            attr.name,
            format!("{:?}", attr.kind),
            &raw.values[..4]
        );
    }
    Ok(())
}
