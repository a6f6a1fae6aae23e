use std::fs;
use std::path::PathBuf;

use barn_core::cspace::{inflate, DEFAULT_RESOLUTION};
use barn_core::metrics::{compute_all, DEFAULT_MAX_RANGE};
use barn_core::model::{predict_difficulty, train, TrainConfig, PARAM_COUNT};
use barn_core::planner::astar;
use barn_core::stats::mean_abs_error;
use barn_core::{Cell, LabeledExample, MetricStats, MlpModel, OccupancyGrid, RobotFootprint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// Set `BARN_BLESS=1` to rewrite golden files from the current build.
fn bless() -> bool {
    std::env::var_os("BARN_BLESS").is_some()
}

fn shipped_examples() -> Vec<LabeledExample> {
    let text = fs::read_to_string(data("labels_seed1.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|line| {
            let v: Vec<f64> = line.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
            LabeledExample { features: [v[0], v[1], v[2], v[3], v[4]], label: v[5] }
        })
        .collect()
}

fn shipped_stats() -> MetricStats {
    serde_json::from_str(&fs::read_to_string(data("stats_seed1.json")).unwrap()).unwrap()
}

fn sq_err(m: &MlpModel, ex: &LabeledExample) -> f64 {
    (m.forward(&ex.features).unwrap() - ex.label).powi(2)
}

#[test]
fn gradient_matches_central_differences() {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for config in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(config);
        let mut model = MlpModel::init(config);
        // Non-zero biases so every parameter class is exercised.
        let params: Vec<f64> = model.params().iter().map(|p| p + rng.gen_range(-0.1..0.1)).collect();
        model.set_params(&params).unwrap();
        let ex = LabeledExample {
            features: std::array::from_fn(|_| rng.gen_range(-2.0..2.0)),
            label: rng.gen_range(0.5..5.0),
        };
        let analytic = model.grad(&ex);
        assert_eq!(analytic.len(), PARAM_COUNT);
        let mut probe = model.clone();
        let mut p = params.clone();
        for j in 0..PARAM_COUNT {
            p[j] = params[j] + h;
            probe.set_params(&p).unwrap();
            let up = sq_err(&probe, &ex);
            p[j] = params[j] - h;
            probe.set_params(&p).unwrap();
            let down = sq_err(&probe, &ex);
            p[j] = params[j];
            let numeric = (up - down) / (2.0 * h);
            // Below 1e-4 the difference quotient's rounding error (about
            // eps * loss / h) is no longer small relative to the gradient, so
            // tiny components are compared against a floor instead.
            let scale = analytic[j].abs().max(numeric.abs());
            if scale > 0.0 {
                worst = worst.max((analytic[j] - numeric).abs() / scale.max(1e-4));
            }
        }
    }
    assert!(worst < 1e-5, "max relative error {worst:e}");
}

#[test]
fn linear_function_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let w = [0.5, -0.3, 0.2, 0.1, -0.4];
    // Smaller training sets leave a generalization gap above the bound.
    let examples: Vec<LabeledExample> = (0..1200)
        .map(|_| {
            let f: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            LabeledExample { features: f, label: 4.0 + f.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() }
        })
        .collect();
    let (fit, held_out) = examples.split_at(1000);
    let model = train(fit, &TrainConfig { epochs: 2000, learning_rate: 0.01, batch_size: 32, seed: 3 }).unwrap();
    let pred: Vec<f64> = held_out.iter().map(|e| model.forward(&e.features).unwrap()).collect();
    let truth: Vec<f64> = held_out.iter().map(|e| e.label).collect();
    let mae = mean_abs_error(&pred, &truth);
    assert!(mae < 0.05, "held-out MAE {mae}");
}

#[test]
fn loss_never_increases_at_or_below_the_default_rate() {
    let examples = shipped_examples();
    assert_eq!(examples.len(), 300);
    let default = TrainConfig::default();
    for (lr, epochs) in [(default.learning_rate, default.epochs), (default.learning_rate / 2.0, 1000), (default.learning_rate / 10.0, 500)] {
        let model = train(&examples, &TrainConfig { learning_rate: lr, epochs, ..default.clone() }).unwrap();
        let history = &model.meta.as_ref().unwrap().loss_history;
        for (i, w) in history.windows(2).enumerate() {
            assert!(w[1] <= w[0], "lr {lr}: loss rose at epoch {} ({} -> {})", i + 1, w[0], w[1]);
        }
    }
}

/// A 30x30 world with a single three-cell-wide free corridor through it
/// (after inflation), versus the same world with nothing but one far-off
/// obstacle.
fn corridor_and_open() -> [(OccupancyGrid, Cell, Cell); 2] {
    let fp = RobotFootprint::default();
    let mut corridor = OccupancyGrid::new(30, 30, DEFAULT_RESOLUTION).unwrap();
    for x in 0..30 {
        for y in 0..30 {
            if !(11..=18).contains(&y) {
                corridor.set(Cell::new(x, y), true);
            }
        }
    }
    let mut open = OccupancyGrid::new(30, 30, DEFAULT_RESOLUTION).unwrap();
    open.set(Cell::new(15, 0), true);
    [(inflate(&corridor, &fp).unwrap(), Cell::new(0, 15), Cell::new(29, 15)), (inflate(&open, &fp).unwrap(), Cell::new(0, 15), Cell::new(29, 15))]
}

#[test]
fn golden_model() {
    let examples = shipped_examples();
    let mut model = train(&examples, &TrainConfig { seed: 1, ..TrainConfig::default() }).unwrap();
    model.meta.as_mut().unwrap().stats = Some(shipped_stats());
    let text = model.to_text();
    let input = [0.5, -0.25, 1.0, -1.0, 0.75];
    let output = model.forward(&input).unwrap();
    if bless() {
        fs::write(data("golden_model.txt"), &text).unwrap();
        fs::write(data("golden_output.txt"), format!("{output:?}\n")).unwrap();
    }
    assert_eq!(text, fs::read_to_string(data("golden_model.txt")).unwrap(), "retraining changed the golden model");
    let golden = MlpModel::from_text(&text).unwrap();
    let recorded: f64 = fs::read_to_string(data("golden_output.txt")).unwrap().trim().parse().unwrap();
    assert_eq!(golden.forward(&input).unwrap().to_bits(), recorded.to_bits());

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("model.txt");
    model.save(&file).unwrap();
    let loaded = MlpModel::load(&file).unwrap();
    assert_eq!(loaded.params(), model.params());
    let stats = loaded.meta.as_ref().unwrap().stats.unwrap();

    let [hard, easy] = corridor_and_open().map(|(c, s, t)| {
        let raw = compute_all(&c, &astar(&c, s, t).unwrap(), DEFAULT_MAX_RANGE).unwrap();
        assert_eq!(predict_difficulty(&loaded, &stats, &raw).unwrap(), predict_difficulty(&model, &stats, &raw).unwrap());
        predict_difficulty(&loaded, &stats, &raw).unwrap()
    });
    assert!(hard > easy, "corridor {hard} vs open {easy}");
}
