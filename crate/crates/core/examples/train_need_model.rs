//! Retrains the bundled citation-need model from the bundled training set
//! and writes it to `data/need_model.txt`.

use refquality::citation_need::{
    bundled_table, parse_training, train_from_examples, BUNDLED_RIDGE, BUNDLED_TRAINING, DEFAULT_THRESHOLD,
};

fn main() {
    let examples = parse_training(BUNDLED_TRAINING).expect("training data parses");
    let model = train_from_examples(&examples, bundled_table(), BUNDLED_RIDGE, DEFAULT_THRESHOLD).expect("training converges");
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/need_model.txt");
    model.save(std::path::Path::new(path)).expect("model written");
    println!("wrote {path}");
}
