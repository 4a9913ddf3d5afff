use crate::config::RunConfig;
use crate::{Common, DataArg, ModelArg};
use anyhow::{bail, Context, Result};
use qtsa_core::analysis::{self, GridSpec};
use qtsa_core::dataset::SampleSet;
use qtsa_core::noise;
use qtsa_core::power::{feature_names, generate_dataset, GridKind, GridModel, SmibEnergy};
use qtsa_core::trainer::{self, TrainedModel};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

struct Run {
    cfg: RunConfig,
    out: PathBuf,
}

impl Run {
    fn new(common: &Common) -> Result<Self> {
        let mut cfg = RunConfig::load(common.config.as_deref())?;
        if let Some(seed) = common.seed {
            cfg.seed = seed;
        }
        std::fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
        Ok(Run { cfg, out: common.out.clone() })
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.out.join(name);
        Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
    }

    fn dataset(&self, grid: &GridModel, data: &DataArg) -> Result<SampleSet> {
        match data.data.as_ref().or(self.cfg.data.path.as_ref()) {
            Some(path) => SampleSet::load(path).with_context(|| format!("loading {}", path.display())),
            None => Ok(generate_dataset(grid, self.cfg.data.n_samples, &grid.scenarios, self.cfg.seed)?),
        }
    }

    fn split(&self, data: &SampleSet) -> Result<(SampleSet, SampleSet)> {
        Ok(data.stratified_split(self.cfg.data.train_fraction, self.cfg.seed)?)
    }

    fn model(&self, arg: &ModelArg) -> Result<TrainedModel> {
        let path = arg.model.clone().unwrap_or_else(|| self.out.join("model.json"));
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        TrainedModel::from_json(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

pub fn gen_data(common: &Common) -> Result<()> {
    let run = Run::new(common)?;
    let grid = run.cfg.grid()?;
    let data = generate_dataset(&grid, run.cfg.data.n_samples, &grid.scenarios, run.cfg.seed)?;
    data.write_csv(run.create("dataset.csv")?)?;
    let (unstable, stable) = data.class_counts();
    println!("{} samples ({stable} stable, {unstable} unstable), features {}", data.len(), feature_names(&grid).join(","));
    Ok(())
}

pub fn train(common: &Common, data: &DataArg) -> Result<()> {
    let run = Run::new(common)?;
    let grid = run.cfg.grid()?;
    let set = run.dataset(&grid, data)?;
    let (train_set, test) = run.split(&set)?;
    let spec = run.cfg.model.spec(set.dim())?;
    let model = trainer::train(&spec, &train_set, &run.cfg.train_config())?;
    let mut w = run.create("model.json")?;
    writeln!(w, "{}", model.to_json())?;
    finish(w)?;
    let mut w = csv::Writer::from_writer(run.create("history.csv")?);
    w.write_record(["epoch", "loss", "train_accuracy"])?;
    for r in &model.history {
        w.write_record([r.epoch.to_string(), r.loss.to_string(), r.train_accuracy.to_string()])?;
    }
    w.flush()?;
    let test_acc = analysis::evaluate(&model, &test, run.cfg.eval.threshold)?.metrics.accuracy;
    let last = model.history.last().map(|r| r.train_accuracy).unwrap_or(f64::NAN);
    println!("{} params, final train accuracy {last:.4}, test accuracy {test_acc:.4}", model.params.len());
    Ok(())
}

pub fn eval(common: &Common, data: &DataArg, model: &ModelArg) -> Result<()> {
    let run = Run::new(common)?;
    let model = run.model(model)?;
    let grid = run.cfg.grid()?;
    let (_, test) = run.split(&run.dataset(&grid, data)?)?;
    let e = analysis::evaluate(&model, &test, run.cfg.eval.threshold)?;
    let mut w = run.create("metrics.json")?;
    writeln!(w, "{}", serde_json::to_string_pretty(&e)?)?;
    finish(w)?;
    println!("accuracy {:.4}, tr_sigma {:.4} on {} test samples", e.metrics.accuracy, e.tr_sigma, test.len());
    Ok(())
}

pub fn scan_region(common: &Common, model: &ModelArg, resolution: Option<usize>) -> Result<()> {
    let run = Run::new(common)?;
    let model = run.model(model)?;
    let grid_model = run.cfg.grid()?;
    let rc = &run.cfg.region;
    let n = resolution.unwrap_or(rc.resolution);
    if n == 0 {
        bail!("resolution must be positive");
    }
    let grid = GridSpec {
        axes: (rc.axes[0], rc.axes[1]),
        x_range: (rc.x_range[0], rc.x_range[1]),
        y_range: (rc.y_range[0], rc.y_range[1]),
        nx: n,
        ny: n,
        fixed: rc.fixed.clone(),
    };
    let smib_plane = grid_model.kind == GridKind::Smib && grid.axes == (0, 1) && model.spec.feature_dim == 2;
    let oracle = if smib_plane { Some(SmibEnergy::from_model(&grid_model)?) } else { None };
    let map = analysis::scan_region(&model, &grid, &rc.thresholds, oracle.as_ref())?;
    let names = feature_names(&grid_model);
    let name = |i: usize| names.get(i).map(String::as_str).unwrap_or("x");
    map.write_csv((name(grid.axes.0), name(grid.axes.1)), run.create("region.csv")?)?;
    for (t, thr) in rc.thresholds.iter().enumerate() {
        let agree = map.agreement(t).map(|a| format!(", oracle agreement {a:.4}")).unwrap_or_default();
        println!("threshold {thr}: {} of {} cells stable{agree}", map.stable_count(t), map.cells.len());
    }
    Ok(())
}

pub fn compare_circuits(common: &Common, data: &DataArg) -> Result<()> {
    let run = Run::new(common)?;
    let grid = run.cfg.grid()?;
    let set = run.dataset(&grid, data)?;
    let (train_set, test) = run.split(&set)?;
    let specs = run.cfg.compare.circuits.iter().map(|c| c.spec(set.dim())).collect::<Result<Vec<_>>>()?;
    let rows = analysis::compare_circuits(&train_set, &test, &specs, &run.cfg.train_config())?;
    analysis::write_comparison_csv(&rows, run.create("compare.csv")?)?;
    for r in &rows {
        let s = &r.spec;
        match &r.outcome {
            Ok(e) => println!("{}({},{}): accuracy {:.4}, tr_sigma {:.4}", s.architecture.name(), s.n_qubits, s.n_layers, e.metrics.accuracy, e.tr_sigma),
            Err(msg) => println!("{}({},{}): failed: {msg}", s.architecture.name(), s.n_qubits, s.n_layers),
        }
    }
    Ok(())
}

pub fn noise_sweep(common: &Common, data: &DataArg, model: &ModelArg) -> Result<()> {
    let run = Run::new(common)?;
    let model = run.model(model)?;
    let grid = run.cfg.grid()?;
    let (_, test) = run.split(&run.dataset(&grid, data)?)?;
    let points = noise::noise_sweep(&model, &test, &run.cfg.noise.settings())?;
    noise::write_sweep_csv(&points, run.create("sweep.csv")?)?;
    noise::write_summary_csv(&points, run.create("sweep_summary.csv")?)?;
    for p in &points {
        println!("setting {}: p_dep {}, t1 {} s, accuracy {:.4}", p.setting_id, p.noise.p_dep, p.noise.t1, p.accuracy);
    }
    Ok(())
}

