//! Encode one visualization into the dense and sparse inputs the network
//! consumes.
//!
//! cargo run -p vizrec --example encode

use vizrec::encoding::{
    cross_products, encode_visualization, CrossProductSpec, DatasetFeatures, EncodingLayout,
};
use vizrec::evaluator::synthetic::{horizontal_bar_config, scatter_config};
use vizrec::metafeatures::{compute_metafeatures, MetaFeatureSchema, Normalizer};
use vizrec::tabular::parse_dataset;
use vizrec::vis_space::{generate_candidates, ConfigVocabulary};

const CSV: &str = "height,weight,team\n1.80,75,red\n1.65,60,blue\n1.92,88,red\n1.70,70,green\n";

fn main() -> vizrec::Result<()> {
    let dataset = parse_dataset("players", CSV, None, None)?;
    let schema = MetaFeatureSchema::default();
    let vectors = dataset
        .attributes
        .iter()
        .map(|a| compute_metafeatures(a, &schema))
        .collect::<vizrec::Result<Vec<_>>>()?;
    let features = DatasetFeatures::compute(&dataset, &schema, &Normalizer::fit(&vectors))?;

    let vocab = ConfigVocabulary::new(vec![(scatter_config(), 3), (horizontal_bar_config(), 1)])?;
    let layout = EncodingLayout {
        k: schema.k,
        max_arity: 3,
        bins: 10,
        vocab_len: vocab.len(),
    };
    let vis = &generate_candidates(&dataset, &vocab, 3, None)[0];
    let bundle = encode_visualization(vis, &features, &vocab, &layout)?;
    println!(
        "visualization {} [{}]",
        vis.config_id,
        vis.combo.attribute_names.join(", ")
    );
    println!(
        "dense d_x: {} values, first {:?}",
        bundle.d_x.len(),
        &bundle.d_x[..3]
    );
    println!(
        "sparse s_c: {} of {} bits on",
        bundle.s_c.count_ones(),
        bundle.s_c.len()
    );
    println!(
        "sparse s_x: {} of {} bits on",
        bundle.s_x.count_ones(),
        bundle.s_x.len()
    );

    let sparse = bundle.sparse();
    let pair = sparse.active()[..2].to_vec();
    let spec = CrossProductSpec::new(vec![pair.clone(), vec![0, 1]])?;
    let cross = cross_products(&sparse, &spec)?;
    println!(
        "cross products over {pair:?} and [0, 1]: {:?}",
        cross.to_dense()
    );
    Ok(())
}
