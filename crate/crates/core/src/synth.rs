//! Labeled synthetic event generator.
//!
//! Events are 8x24 charge images from a cylindrical detector surface: 8
//! rings of photomultiplier tubes, 24 tubes around the circumference,
//! unwrapped so that column 23 is adjacent to column 0. Real detector data
//! is not available, so a parameterized generator produces the five event
//! classes with their characteristic charge shapes:
//!
//! - muon: a high-charge track crossing at least half the circumference
//! - flasher: one saturated tube plus a diffuse glow on the opposite side
//! - IBD delay: a compact bright blob
//! - IBD prompt: a compact blob whose amplitude range deliberately
//!   overlaps the delay range, so the two classes are only partially
//!   separable from charge shape alone
//! - other: low-amplitude multi-site speckle
//!
//! Per-event substreams are forked from the master seed, so generation is
//! reproducible and order-independent.

use crate::error::{Error, Result};
use crate::rng::Prng;

pub const ROWS: usize = 8;
pub const COLS: usize = 24;
pub const PMT_COUNT: usize = ROWS * COLS;

/// One 8x24 array of raw PMT charges (arbitrary charge units, >= 0).
/// Columns are cylindrically periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct EventGrid {
    data: Vec<f64>,
}

impl EventGrid {
    pub fn zeros() -> EventGrid {
        EventGrid {
            data: vec![0.0; PMT_COUNT],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Result<EventGrid> {
        if values.len() != PMT_COUNT {
            return Err(Error::Shape(format!(
                "event grid needs {PMT_COUNT} values, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Domain(format!(
                "charge values must be finite and >= 0, got {bad}"
            )));
        }
        Ok(EventGrid { data: values })
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * COLS + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * COLS + col] = value;
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, dq: f64) {
        self.data[row * COLS + col] += dq;
    }

    /// Row-major values, 192 of them.
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn total_charge(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Cyclic column shift: column c moves to (c + k) mod 24.
    pub fn shifted_columns(&self, k: usize) -> EventGrid {
        let mut out = EventGrid::zeros();
        for r in 0..ROWS {
            for c in 0..COLS {
                out.set(r, (c + k) % COLS, self.get(r, c));
            }
        }
        out
    }
}

/// The five event classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventLabel {
    Muon,
    Flasher,
    IbdPrompt,
    IbdDelay,
    Other,
}

impl EventLabel {
    pub const COUNT: usize = 5;
    pub const ALL: [EventLabel; 5] = [
        EventLabel::Muon,
        EventLabel::Flasher,
        EventLabel::IbdPrompt,
        EventLabel::IbdDelay,
        EventLabel::Other,
    ];

    pub fn index(self) -> usize {
        match self {
            EventLabel::Muon => 0,
            EventLabel::Flasher => 1,
            EventLabel::IbdPrompt => 2,
            EventLabel::IbdDelay => 3,
            EventLabel::Other => 4,
        }
    }

    pub fn from_index(index: usize) -> Result<EventLabel> {
        EventLabel::ALL
            .get(index)
            .copied()
            .ok_or_else(|| Error::Label(format!("class index {index} out of range 0..5")))
    }

    pub fn name(self) -> &'static str {
        match self {
            EventLabel::Muon => "muon",
            EventLabel::Flasher => "flasher",
            EventLabel::IbdPrompt => "ibd-prompt",
            EventLabel::IbdDelay => "ibd-delay",
            EventLabel::Other => "other",
        }
    }

    pub fn from_name(name: &str) -> Result<EventLabel> {
        EventLabel::ALL
            .iter()
            .copied()
            .find(|l| l.name() == name)
            .ok_or_else(|| Error::Label(format!("unknown class name '{name}'")))
    }
}

/// Generator parameters. All `(lo, hi)` pairs are uniform sampling ranges.
///
/// Raw charges are capped at e^10 - 1 so that the log-scale transform maps
/// every value into [0, 1].
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub muon_amplitude: (f64, f64),
    /// Minimum number of columns a muon track crosses.
    pub muon_min_span: usize,
    /// Track cross-section sigma in rows.
    pub muon_width: (f64, f64),
    /// Detector-wide scattered-light floor as a fraction of the track
    /// amplitude; muons illuminate every tube, not just the track core.
    pub muon_glow_fraction: (f64, f64),
    pub flasher_amplitude: (f64, f64),
    /// Opposite-side glow amplitude as a fraction of the hot tube.
    pub flasher_blob_fraction: (f64, f64),
    pub flasher_blob_sigma: (f64, f64),
    pub delay_amplitude: (f64, f64),
    pub delay_sigma: (f64, f64),
    /// Overlaps `delay_amplitude` by construction; see `validate`.
    pub prompt_amplitude: (f64, f64),
    pub prompt_sigma: (f64, f64),
    pub speckle_amplitude: (f64, f64),
    pub speckle_sites: (usize, usize),
    /// Scale of the per-tube exponential-tailed noise; 0 disables noise.
    pub noise_level: f64,
    /// Upper clamp on every stored charge.
    pub charge_cap: f64,
    pub counts_per_class: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            muon_amplitude: (3000.0, 10_000.0),
            muon_min_span: 12,
            muon_width: (0.35, 0.8),
            muon_glow_fraction: (0.10, 0.18),
            flasher_amplitude: (100.0, 1000.0),
            flasher_blob_fraction: (0.1, 0.3),
            flasher_blob_sigma: (1.0, 2.0),
            delay_amplitude: (150.0, 400.0),
            delay_sigma: (0.7, 1.4),
            prompt_amplitude: (20.0, 250.0),
            prompt_sigma: (0.5, 2.2),
            speckle_amplitude: (0.0, 30.0),
            speckle_sites: (3, 8),
            noise_level: 4.0,
            charge_cap: 10f64.exp() - 1.0,
            counts_per_class: 900,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("muon_amplitude", self.muon_amplitude),
            ("flasher_amplitude", self.flasher_amplitude),
            ("delay_amplitude", self.delay_amplitude),
            ("prompt_amplitude", self.prompt_amplitude),
        ];
        for (name, (lo, hi)) in ranges {
            if !(lo >= 0.0 && hi > 0.0 && lo <= hi) {
                return Err(Error::Config(format!(
                    "{name} range ({lo}, {hi}) must be positive"
                )));
            }
        }
        for (name, (lo, hi)) in [
            ("muon_width", self.muon_width),
            ("muon_glow_fraction", self.muon_glow_fraction),
            ("flasher_blob_fraction", self.flasher_blob_fraction),
            ("flasher_blob_sigma", self.flasher_blob_sigma),
            ("delay_sigma", self.delay_sigma),
            ("prompt_sigma", self.prompt_sigma),
            ("speckle_amplitude", self.speckle_amplitude),
        ] {
            if !(lo >= 0.0 && lo <= hi) {
                return Err(Error::Config(format!(
                    "{name} range ({lo}, {hi}) is invalid"
                )));
            }
        }
        // the prompt/delay ambiguity is part of the generator's contract
        if self.prompt_amplitude.1 <= self.delay_amplitude.0
            || self.delay_amplitude.1 <= self.prompt_amplitude.0
        {
            return Err(Error::Config(
                "prompt and delay amplitude ranges must overlap".into(),
            ));
        }
        if self.muon_min_span == 0 || self.muon_min_span > COLS {
            return Err(Error::Config(format!(
                "muon_min_span {} must be in 1..={COLS}",
                self.muon_min_span
            )));
        }
        if self.speckle_sites.0 == 0 || self.speckle_sites.0 > self.speckle_sites.1 {
            return Err(Error::Config("speckle_sites range is invalid".into()));
        }
        if self.noise_level < 0.0 || !self.noise_level.is_finite() {
            return Err(Error::Config("noise_level must be finite and >= 0".into()));
        }
        if self.charge_cap <= 0.0 {
            return Err(Error::Config("charge_cap must be positive".into()));
        }
        Ok(())
    }
}

/// Generate one event; the anchor column is drawn uniformly at random.
pub fn generate_event(label: EventLabel, cfg: &SynthConfig, prng: &mut Prng) -> Result<EventGrid> {
    cfg.validate()?;
    let column = prng.below(COLS);
    Ok(generate_event_at(label, cfg, column, prng))
}

/// Generate one event anchored at `column`.
///
/// All residual randomness is drawn relative to the anchor, which makes
/// generation cylindrically equivariant: shifting `column` by k shifts the
/// whole event (pattern and noise) by k columns, bit for bit.
pub fn generate_event_at(
    label: EventLabel,
    cfg: &SynthConfig,
    column: usize,
    prng: &mut Prng,
) -> EventGrid {
    let column = column % COLS;
    let mut grid = EventGrid::zeros();
    match label {
        EventLabel::Muon => paint_muon(&mut grid, cfg, column, prng),
        EventLabel::Flasher => paint_flasher(&mut grid, cfg, column, prng),
        EventLabel::IbdPrompt => paint_blob(
            &mut grid,
            cfg.prompt_amplitude,
            cfg.prompt_sigma,
            column,
            prng,
        ),
        EventLabel::IbdDelay => paint_blob(
            &mut grid,
            cfg.delay_amplitude,
            cfg.delay_sigma,
            column,
            prng,
        ),
        EventLabel::Other => paint_speckle(&mut grid, cfg, column, prng),
    }
    if cfg.noise_level > 0.0 {
        for dc in 0..COLS {
            let c = (column + dc) % COLS;
            for r in 0..ROWS {
                let u = prng.uniform();
                grid.add(r, c, -cfg.noise_level * (1.0 - u).ln());
            }
        }
    }
    for v in grid.data.iter_mut() {
        *v = v.clamp(0.0, cfg.charge_cap);
    }
    grid
}

fn paint_muon(grid: &mut EventGrid, cfg: &SynthConfig, c0: usize, prng: &mut Prng) {
    let span = cfg.muon_min_span + prng.below(COLS - cfg.muon_min_span + 1);
    let amp = prng.range(cfg.muon_amplitude.0, cfg.muon_amplitude.1);
    let sigma_r = prng.range(cfg.muon_width.0, cfg.muon_width.1);
    let r_start = prng.range(0.0, (ROWS - 1) as f64);
    let r_end = prng.range(0.0, (ROWS - 1) as f64);
    let glow = amp * prng.range(cfg.muon_glow_fraction.0, cfg.muon_glow_fraction.1);
    for r in 0..ROWS {
        for c in 0..COLS {
            grid.add(r, c, glow);
        }
    }
    for dc in 0..span {
        let c = (c0 + dc) % COLS;
        let t = if span > 1 {
            dc as f64 / (span - 1) as f64
        } else {
            0.0
        };
        let r_center = r_start + t * (r_end - r_start);
        let jitter = prng.range(0.8, 1.2);
        for r in 0..ROWS {
            let d = r as f64 - r_center;
            let e = d * d / (2.0 * sigma_r * sigma_r);
            if e < 12.0 {
                grid.add(r, c, amp * jitter * (-e).exp());
            }
        }
    }
}

fn paint_flasher(grid: &mut EventGrid, cfg: &SynthConfig, c_hot: usize, prng: &mut Prng) {
    let r_hot = prng.below(ROWS);
    let amp = prng.range(cfg.flasher_amplitude.0, cfg.flasher_amplitude.1);
    let frac = prng.range(cfg.flasher_blob_fraction.0, cfg.flasher_blob_fraction.1);
    let sigma_r = prng.range(cfg.flasher_blob_sigma.0, cfg.flasher_blob_sigma.1);
    let sigma_c = prng.range(cfg.flasher_blob_sigma.0, cfg.flasher_blob_sigma.1);
    let r_blob = prng.below(ROWS);
    let c_blob = (c_hot + COLS / 2) % COLS;
    grid.add(r_hot, c_hot, amp);
    paint_periodic_gaussian(
        grid,
        r_blob as f64,
        c_blob as f64,
        sigma_r,
        sigma_c,
        frac * amp,
    );
}

fn paint_blob(
    grid: &mut EventGrid,
    amplitude: (f64, f64),
    sigma: (f64, f64),
    column: usize,
    prng: &mut Prng,
) {
    let amp = prng.range(amplitude.0, amplitude.1);
    let sigma_r = prng.range(sigma.0, sigma.1);
    let sigma_c = prng.range(sigma.0, sigma.1);
    let r0 = prng.range(1.0, (ROWS - 1) as f64);
    paint_periodic_gaussian(grid, r0, column as f64, sigma_r, sigma_c, amp);
}

fn paint_speckle(grid: &mut EventGrid, cfg: &SynthConfig, c0: usize, prng: &mut Prng) {
    let (lo, hi) = cfg.speckle_sites;
    let sites = lo + prng.below(hi - lo + 1);
    for _ in 0..sites {
        let c = (c0 + prng.below(COLS)) % COLS;
        let r = prng.below(ROWS);
        let amp = prng.range(cfg.speckle_amplitude.0, cfg.speckle_amplitude.1);
        grid.add(r, c, amp);
    }
}

/// Gaussian blob that wraps around in the column coordinate, truncated at
/// the 3-sigma ellipse so its support stays compact.
fn paint_periodic_gaussian(
    grid: &mut EventGrid,
    r0: f64,
    c0: f64,
    sigma_r: f64,
    sigma_c: f64,
    amp: f64,
) {
    for r in 0..ROWS {
        let dr = r as f64 - r0;
        for c in 0..COLS {
            let mut dc = (c as f64 - c0).rem_euclid(COLS as f64);
            if dc > COLS as f64 / 2.0 {
                dc -= COLS as f64;
            }
            let e = dr * dr / (2.0 * sigma_r * sigma_r) + dc * dc / (2.0 * sigma_c * sigma_c);
            if e <= 4.5 {
                grid.add(r, c, amp * (-e).exp());
            }
        }
    }
}

/// Class-balanced, shuffled dataset: `counts_per_class` events of each of
/// the five classes, reproducible from `cfg.seed`.
pub fn generate_dataset(cfg: &SynthConfig) -> Result<(Vec<EventGrid>, Vec<EventLabel>)> {
    cfg.validate()?;
    if cfg.counts_per_class == 0 {
        return Err(Error::Data("counts_per_class must be positive".into()));
    }
    let master = Prng::new(cfg.seed);
    let count = cfg.counts_per_class;
    let total = EventLabel::COUNT * count;

    let mut grids = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for (k, &label) in EventLabel::ALL.iter().enumerate() {
        for i in 0..count {
            let mut sub = master.fork((k * count + i) as u64);
            let column = sub.below(COLS);
            grids.push(generate_event_at(label, cfg, column, &mut sub));
            labels.push(label);
        }
    }

    let mut order: Vec<usize> = (0..total).collect();
    let mut shuffler = master.fork(u64::MAX);
    shuffler.shuffle(&mut order);
    let grids = order.iter().map(|&i| grids[i].clone()).collect();
    let labels = order.iter().map(|&i| labels[i]).collect();
    Ok((grids, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_config() -> SynthConfig {
        SynthConfig {
            noise_level: 0.0,
            ..SynthConfig::default()
        }
    }

    /// Connected components under 4-adjacency with cylindrical columns.
    fn connected_regions(grid: &EventGrid) -> Vec<Vec<(usize, usize)>> {
        let mut seen = [false; PMT_COUNT];
        let mut regions = Vec::new();
        for start in 0..PMT_COUNT {
            if seen[start] || grid.values()[start] == 0.0 {
                continue;
            }
            let mut stack = vec![start];
            let mut cells = Vec::new();
            seen[start] = true;
            while let Some(idx) = stack.pop() {
                let (r, c) = (idx / COLS, idx % COLS);
                cells.push((r, c));
                let mut neighbors = vec![(r, (c + 1) % COLS), (r, (c + COLS - 1) % COLS)];
                if r > 0 {
                    neighbors.push((r - 1, c));
                }
                if r + 1 < ROWS {
                    neighbors.push((r + 1, c));
                }
                for (nr, nc) in neighbors {
                    let nidx = nr * COLS + nc;
                    if !seen[nidx] && grid.values()[nidx] > 0.0 {
                        seen[nidx] = true;
                        stack.push(nidx);
                    }
                }
            }
            regions.push(cells);
        }
        regions
    }

    fn peak_column(grid: &EventGrid, cells: &[(usize, usize)]) -> usize {
        let mut best = f64::NEG_INFINITY;
        let mut col = 0;
        for &(r, c) in cells {
            if grid.get(r, c) > best {
                best = grid.get(r, c);
                col = c;
            }
        }
        col
    }

    #[test]
    fn all_generated_charges_are_nonnegative_and_finite() {
        let cfg = SynthConfig::default();
        let mut prng = Prng::new(1);
        for &label in &EventLabel::ALL {
            for _ in 0..50 {
                let g = generate_event(label, &cfg, &mut prng).unwrap();
                assert!(g.values().iter().all(|v| v.is_finite() && *v >= 0.0));
                assert!(g.values().iter().all(|&v| v <= cfg.charge_cap));
            }
        }
    }

    #[test]
    fn noiseless_flasher_has_two_regions_twelve_columns_apart() {
        let cfg = quiet_config();
        let mut prng = Prng::new(12);
        for _ in 0..50 {
            let g = generate_event(EventLabel::Flasher, &cfg, &mut prng).unwrap();
            let regions = connected_regions(&g);
            assert_eq!(
                regions.len(),
                2,
                "expected hot tube + glow, got {}",
                regions.len()
            );
            let c0 = peak_column(&g, &regions[0]);
            let c1 = peak_column(&g, &regions[1]);
            let delta = (c0 as isize - c1 as isize).rem_euclid(COLS as isize);
            assert!(delta == 12, "peak columns {c0} and {c1} are not opposite");
        }
    }

    #[test]
    fn generation_is_cylindrically_equivariant() {
        let cfg = SynthConfig::default();
        for (s, &label) in EventLabel::ALL.iter().enumerate() {
            let base = Prng::new(100 + s as u64);
            for k in [1usize, 5, 12, 23] {
                let g0 = generate_event_at(label, &cfg, 3, &mut base.clone());
                let gk = generate_event_at(label, &cfg, (3 + k) % COLS, &mut base.clone());
                assert_eq!(g0.shifted_columns(k), gk, "label {label:?} shift {k}");
            }
        }
    }

    #[test]
    fn mean_total_charge_orders_the_classes() {
        let cfg = SynthConfig::default();
        let mean = |label: EventLabel, stream: u64| -> f64 {
            let master = Prng::new(55);
            let mut total = 0.0;
            for i in 0..1000u64 {
                let mut sub = master.fork(stream * 10_000 + i);
                total += generate_event(label, &cfg, &mut sub)
                    .unwrap()
                    .total_charge();
            }
            total / 1000.0
        };
        let muon = mean(EventLabel::Muon, 0);
        let delay = mean(EventLabel::IbdDelay, 1);
        let prompt = mean(EventLabel::IbdPrompt, 2);
        let other = mean(EventLabel::Other, 3);
        assert!(muon > delay, "muon {muon} vs delay {delay}");
        assert!(delay > prompt, "delay {delay} vs prompt {prompt}");
        assert!(prompt > other, "prompt {prompt} vs other {other}");
    }

    #[test]
    fn dataset_is_balanced_and_shuffled() {
        let cfg = SynthConfig {
            counts_per_class: 100,
            ..SynthConfig::default()
        };
        let (grids, labels) = generate_dataset(&cfg).unwrap();
        assert_eq!(grids.len(), 500);
        for &label in &EventLabel::ALL {
            assert_eq!(labels.iter().filter(|&&l| l == label).count(), 100);
        }
        // shuffled: the first 100 are not all the same class
        let first: Vec<_> = labels.iter().take(100).collect();
        assert!(!first.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn same_seed_gives_bit_identical_datasets() {
        let cfg = SynthConfig {
            counts_per_class: 40,
            ..SynthConfig::default()
        };
        let (g1, l1) = generate_dataset(&cfg).unwrap();
        let (g2, l2) = generate_dataset(&cfg).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(g1, g2);
    }

    #[test]
    fn zero_count_is_rejected() {
        let cfg = SynthConfig {
            counts_per_class: 0,
            ..SynthConfig::default()
        };
        assert!(matches!(generate_dataset(&cfg), Err(Error::Data(_))));
    }

    #[test]
    fn label_round_trip() {
        for &label in &EventLabel::ALL {
            assert_eq!(EventLabel::from_index(label.index()).unwrap(), label);
            assert_eq!(EventLabel::from_name(label.name()).unwrap(), label);
        }
        assert!(EventLabel::from_index(5).is_err());
    }

    #[test]
    fn disjoint_amplitude_ranges_are_rejected() {
        let cfg = SynthConfig {
            prompt_amplitude: (10.0, 20.0),
            delay_amplitude: (100.0, 200.0),
            ..SynthConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn prompt_confuses_nearest_neighbors_more_than_muons_do() {
        // a k-NN classifier on raw flattened grids: the deliberate
        // prompt/delay amplitude overlap must make IBD prompt harder than
        // muon
        use crate::baselines::KnnModel;
        use crate::metrics::{confusion, f1_per_class};

        let train_cfg = SynthConfig {
            counts_per_class: 150,
            seed: 61,
            ..SynthConfig::default()
        };
        let test_cfg = SynthConfig {
            counts_per_class: 50,
            seed: 62,
            ..SynthConfig::default()
        };
        let (train_grids, train_labels) = generate_dataset(&train_cfg).unwrap();
        let (test_grids, test_labels) = generate_dataset(&test_cfg).unwrap();

        let train_vecs: Vec<Vec<f64>> = train_grids.iter().map(|g| g.values().to_vec()).collect();
        let knn = KnnModel::fit(train_vecs, train_labels, 5).unwrap();
        let preds: Vec<EventLabel> = test_grids
            .iter()
            .map(|g| knn.classify(g.values()).unwrap())
            .collect();
        let f1 = f1_per_class(&confusion(&test_labels, &preds).unwrap()).unwrap();
        assert!(
            f1[EventLabel::IbdPrompt.index()] < f1[EventLabel::Muon.index()],
            "prompt F1 {} vs muon F1 {}",
            f1[EventLabel::IbdPrompt.index()],
            f1[EventLabel::Muon.index()]
        );
    }
}
