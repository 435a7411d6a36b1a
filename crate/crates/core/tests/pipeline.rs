use semg_cascade::cascade::CascadeModel;
use semg_cascade::contamination::{contaminate_window_with, ChannelPolicy, NoiseKind};
use semg_cascade::dnb::Estimator;
use semg_cascade::eval::{balanced_accuracy_labels, rank_table, run_experiment, to_rows, ExperimentSettings, Method};
use semg_cascade::occ::{DecisionMode, OccConfig};
use semg_cascade::rng::{keyed, seeded};
use semg_cascade::signal::{stratified_split, Dataset};
use semg_cascade::synth::{generate_synthetic, SynthSpec};

fn small_dataset(seed: u64) -> Dataset {
    let spec = SynthSpec { windows_per_class: 40, ..SynthSpec::default() };
    generate_synthetic(&spec, &mut seeded(seed)).unwrap()
}

#[test]
fn detectors_flag_a_swamped_channel() {
    let ds = small_dataset(21);
    let split = &stratified_split(&ds, 4, 1, 21).unwrap()[0];
    let train: Vec<_> = split.train.iter().map(|&i| ds.windows()[i].clone()).collect();
    let train = Dataset::new(train, ds.class_count()).unwrap();
    let model =
        CascadeModel::fit(&train, &Default::default(), &OccConfig::default(), Estimator::Gaussian, &[1], 21).unwrap();

    let mut rng = keyed(21, &[99]);
    let mut flagged_noisy = 0;
    let mut flagged_clean = 0;
    let mut checked = 0;
    for &i in &split.test {
        let w = &ds.windows()[i];
        let (noisy, truth) =
            contaminate_window_with(w, NoiseKind::GaussianNoise, 0.0, &mut rng, ChannelPolicy::Fixed(1));
        let r = model.predict_window(&noisy, DecisionMode::Crisp).unwrap().contamination;
        let l = truth.affected[0];
        flagged_noisy += usize::from(r.as_slice()[l] == 0.0);
        flagged_clean += r.as_slice().iter().enumerate().filter(|(c, v)| *c != l && **v == 0.0).count();
        checked += 1;
    }
    let hit = flagged_noisy as f64 / checked as f64;
    let false_alarm = flagged_clean as f64 / (checked * (ds.channel_count() - 1)) as f64;
    assert!(hit > 0.9, "hit rate {hit}");
    assert!(false_alarm < 0.3, "false alarm rate {false_alarm}");
}

#[test]
fn soft_cascade_beats_plain_nb_on_swamped_windows() {
    let ds = small_dataset(22);
    let split = &stratified_split(&ds, 4, 1, 22).unwrap()[0];
    let train: Vec<_> = split.train.iter().map(|&i| ds.windows()[i].clone()).collect();
    let train = Dataset::new(train, ds.class_count()).unwrap();
    let model =
        CascadeModel::fit(&train, &Default::default(), &OccConfig::default(), Estimator::Gaussian, &[1], 22).unwrap();
    let mut rng = keyed(22, &[7]);
    let mut truth = Vec::new();
    let mut soft = Vec::new();
    let mut plain = Vec::new();
    for &i in &split.test {
        let w = &ds.windows()[i];
        for kind in [NoiseKind::GaussianNoise, NoiseKind::PowerLine] {
            let (noisy, _) = contaminate_window_with(w, kind, 0.0, &mut rng, ChannelPolicy::Fixed(3));
            truth.push(w.class_label().unwrap());
            soft.push(model.predict_window(&noisy, DecisionMode::Soft).unwrap().label);
            let x = semg_cascade::features::extract_features(&noisy).unwrap();
            plain.push(semg_cascade::baselines::predict_b(&model.dnb, &x).unwrap());
        }
    }
    let m = ds.class_count();
    let (s, p) = (balanced_accuracy_labels(&truth, &soft, m), balanced_accuracy_labels(&truth, &plain, m));
    assert!(s > p, "soft {s} vs plain {p}");
}

#[test]
fn experiment_rows_cover_every_cell() {
    let spec = SynthSpec { windows_per_class: 15, class_count: 3, channel_count: 4, ..SynthSpec::default() };
    let ds = generate_synthetic(&spec, &mut seeded(5)).unwrap();
    let settings =
        ExperimentSettings { folds: 3, repeats: 2, snr_grid: vec![0.0, 6.0, f64::INFINITY], ..Default::default() };
    let records = run_experiment(&ds, &settings).unwrap();
    assert_eq!(records.len(), Method::ALL.len() * 3 * 3 * 2);
    assert!(records.iter().all(|r| (0.0..=1.0).contains(&r.bac) && r.kappa <= 1.0));
    let table = rank_table(&to_rows(&records)).unwrap();
    assert_eq!(table.rows.len(), 3 * 3);
    for row in &table.rows {
        assert_eq!(row.cases, 6);
        let total: f64 = row.ranks.iter().sum();
        assert!((total - 10.0).abs() < 1e-9);
    }
    let again = run_experiment(&ds, &settings).unwrap();
    assert_eq!(again, records);
}

#[test]
fn two_class_problems_run_every_method() {
    let spec = SynthSpec {
        windows_per_class: 12,
        class_count: 2,
        channel_count: 2,
        window_samples: 512,
        ..SynthSpec::default()
    };
    let ds = generate_synthetic(&spec, &mut seeded(8)).unwrap();
    let settings = ExperimentSettings { folds: 2, repeats: 1, snr_grid: vec![0.0], ..Default::default() };
    let records = run_experiment(&ds, &settings).unwrap();
    assert_eq!(records.len(), Method::ALL.len() * 2);
}
