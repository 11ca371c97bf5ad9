//! Published summary statistics of the 21 timbre dissimilarity datasets,
//! keyed by the canonical manifest names used by the converter.

/// A `mean` with an optional spread; `std` is `None` where every sample
/// shares the same value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: Option<f64>,
}

const fn stat(mean: f64, std: f64) -> Stat {
    Stat {
        mean,
        std: Some(std),
    }
}

const fn fixed(mean: f64) -> Stat {
    Stat { mean, std: None }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedDataset {
    pub name: &'static str,
    pub n_sounds: usize,
    pub pitch: &'static str,
    /// Seconds.
    pub length: Stat,
    /// Integrated loudness, LUFS, 0.08 s gating blocks.
    pub loudness: Stat,
    pub raters: usize,
}

impl PublishedDataset {
    /// Number of unique pairs when every pair is rated.
    pub fn full_pairs(&self) -> usize {
        self.n_sounds * (self.n_sounds - 1) / 2
    }
}

const fn entry(
    name: &'static str,
    n_sounds: usize,
    pitch: &'static str,
    length: Stat,
    loudness: Stat,
    raters: usize,
) -> PublishedDataset {
    PublishedDataset {
        name,
        n_sounds,
        pitch,
        length,
        loudness,
        raters,
    }
}

pub const DATASETS: [PublishedDataset; 21] = [
    entry(
        "grey1977",
        16,
        "Eb4",
        stat(0.27, 0.03),
        stat(-14.61, 1.57),
        22,
    ),
    entry(
        "grey1978",
        16,
        "Eb4",
        stat(0.27, 0.03),
        stat(-14.87, 1.76),
        22,
    ),
    entry(
        "iverson1993_whole",
        16,
        "C4",
        stat(3.19, 0.69),
        stat(-16.62, 3.99),
        10,
    ),
    entry(
        "iverson1993_onset",
        16,
        "C4",
        stat(0.11, 0.01),
        stat(-23.24, 9.10),
        9,
    ),
    entry(
        "iverson1993_remainder",
        16,
        "C4",
        stat(3.10, 0.70),
        stat(-16.71, 4.13),
        9,
    ),
    entry(
        "mcadams1995",
        18,
        "Eb4",
        stat(0.69, 0.19),
        stat(-18.36, 4.05),
        22,
    ),
    entry(
        "lakatos2000_combined",
        20,
        "Eb4",
        fixed(1.50),
        stat(-24.08, 2.98),
        34,
    ),
    entry(
        "lakatos2000_harmonic",
        17,
        "Eb4",
        fixed(1.50),
        stat(-25.03, 2.36),
        34,
    ),
    entry(
        "lakatos2000_percussive",
        18,
        "Eb4",
        stat(1.49, 0.05),
        stat(-23.97, 3.83),
        34,
    ),
    entry(
        "barthet2010",
        15,
        "Eb4",
        stat(1.56, 0.04),
        stat(-23.77, 1.13),
        16,
    ),
    entry("patil2012_a3", 11, "A3", fixed(0.25), stat(-19.03, 0.85), 6),
    entry(
        "patil2012_d4",
        11,
        "D4",
        fixed(0.25),
        stat(-19.17, 0.81),
        20,
    ),
    entry(
        "patil2012_gs4",
        11,
        "G#4",
        fixed(0.25),
        stat(-18.97, 0.81),
        6,
    ),
    entry(
        "zacharakis2015_greek",
        24,
        "A1-4",
        fixed(1.30),
        stat(-29.36, 3.84),
        33,
    ),
    entry(
        "zacharakis2015_english",
        24,
        "A1-4",
        fixed(1.30),
        stat(-29.36, 3.84),
        20,
    ),
    entry(
        "siedenburg2016_e2set1",
        14,
        "Eb4",
        fixed(0.50),
        stat(-23.56, 3.15),
        24,
    ),
    entry(
        "siedenburg2016_e2set2",
        14,
        "Eb4",
        fixed(0.50),
        stat(-23.77, 1.90),
        24,
    ),
    entry(
        "siedenburg2016_e2set3",
        14,
        "Eb4",
        fixed(0.50),
        stat(-23.21, 2.37),
        24,
    ),
    entry(
        "siedenburg2016_e2b",
        14,
        "Eb4",
        fixed(0.50),
        stat(-23.21, 2.37),
        24,
    ),
    entry("saitis2020", 14, "Eb4", fixed(0.50), stat(-23.56, 3.15), 40),
    entry("vahidi2020", 15, "A4", fixed(1.00), stat(-9.73, 3.09), 35),
];

/// Published corpus totals.
pub const TOTAL_SOUNDS: usize = 334;
pub const TOTAL_RATINGS: usize = 2614;

pub fn lookup(name: &str) -> Option<&'static PublishedDataset> {
    DATASETS.iter().find(|d| d.name == name)
}
