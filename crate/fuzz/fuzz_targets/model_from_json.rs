#![no_main]

use libfuzzer_sys::fuzz_target;
use semg_cascade::occ::DecisionMode;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(model) = semg_cascade::cascade::CascadeModel::from_json(text) else { return };
    let dims: Vec<usize> = model.dnb.layout.clone();
    let x = semg_cascade::features::FullFeatureVector::new(dims.iter().map(|&d| vec![0.5; d]).collect());
    let _ = model.predict_features(&x, DecisionMode::Soft);
    let _ = model.predict_features(&x, DecisionMode::Crisp);
});
